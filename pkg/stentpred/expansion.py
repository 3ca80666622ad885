"""
Stent expansion index

SEI(f) = 100 * post-stent lumen area(f) / mean(proximal, distal reference
area). The minimum over the stented span (mSEI) labels a lesion
under-expanded when it is strictly below the threshold, 80 by default.
"""

import dataclasses
import math

import numpy as np

from stentpred.util.misc import (StentpredError, csv_text, format_float,
                                 write_to_file)


__all__ = ["UNDER_EXPANDED", "WELL_EXPANDED", "DEFAULT_THRESHOLD",
           "ExpansionError", "ReferencePair", "ExpansionRecord",
           "reference_window", "find_reference_areas", "expansion_label",
           "compute_sei_curve"]


UNDER_EXPANDED, WELL_EXPANDED = "under_expanded", "well_expanded"
DEFAULT_THRESHOLD = 80.0
REFERENCE_WINDOW_MM = 5.0


class ExpansionError(StentpredError):
    pass


@dataclasses.dataclass(frozen=True)
class ReferencePair:
    proximal_area_mm2: float
    distal_area_mm2: float
    proximal_frame: int
    distal_frame: int

    @property
    def mean_area_mm2(self):
        return (self.proximal_area_mm2 + self.distal_area_mm2)/2

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True, eq=False)
class ExpansionRecord:
    frames: np.ndarray
    sei: np.ndarray
    msei: float
    msei_frame: int
    label: str

    def to_csv(self):
        rows = [(int(frame), format_float(sei))
                for frame, sei in zip(self.frames, self.sei)]
        return csv_text(("frame", "sei"), rows)

    def summary(self):
        return csv_text(("msei", "msei_frame", "label"),
                        [(format_float(self.msei), self.msei_frame, self.label)])

    def write(self, curve_filename, summary_filename):
        write_to_file(curve_filename, self.to_csv())
        write_to_file(summary_filename, self.summary())


def reference_window(frame_pitch_mm, window_mm=REFERENCE_WINDOW_MM):
    # 1e-9 keeps 5.0/0.2 from rounding up to 26
    return int(math.ceil(window_mm/frame_pitch_mm - 1e-9))


def _best(areas, frames):
    """Frame with the largest area; ``frames`` is ordered from the stent edge."""
    best = frames[0]
    for frame in frames[1:]:
        if areas[frame] > areas[best]:
            best = frame
    return best


def find_reference_areas(pullback, stent_start, stent_end,
                         window_mm=REFERENCE_WINDOW_MM):
    """Largest lumen area within ``window_mm`` beyond each stent edge.

    Proximal candidates are frames (stent_end, stent_end + window], distal
    candidates [stent_start - window, stent_start), both truncated at the
    pullback ends. Ties go to the frame nearest the stent edge.
    """
    n = pullback.frame_count
    if not 0 <= stent_start <= stent_end < n:
        raise ExpansionError("stent bounds [{}, {}] outside [0, {})".format(
            stent_start, stent_end, n))
    window = reference_window(pullback.meta.frame_pitch_mm, window_mm)
    areas = pullback.lumen_areas_mm2()

    proximal = list(range(stent_end + 1, min(n, stent_end + window + 1)))
    distal = list(range(stent_start - 1, max(-1, stent_start - window - 1), -1))
    if not proximal:
        raise ExpansionError("no proximal reference frames after stent end {}".format(
            stent_end))
    if not distal:
        raise ExpansionError("no distal reference frames before stent start {}".format(
            stent_start))
    p, d = _best(areas, proximal), _best(areas, distal)
    for side, frame in (("proximal", p), ("distal", d)):
        if not areas[frame] > 0:
            raise ExpansionError("{} reference segment has no lumen".format(side))
    return ReferencePair(float(areas[p]), float(areas[d]), p, d)


def expansion_label(msei, threshold=DEFAULT_THRESHOLD):
    return UNDER_EXPANDED if msei < threshold else WELL_EXPANDED


def compute_sei_curve(post_areas, refs, threshold=DEFAULT_THRESHOLD,
                      first_frame=0, frames=None):
    """SEI over a stented span whose first frame is ``first_frame``.

    ``frames`` gives explicit frame indices, one per area, when the span is
    not contiguous; it overrides ``first_frame``. ``msei_frame`` is the
    first frame reaching the minimum.
    """
    post_areas = np.asarray(post_areas, dtype=float)
    if not len(post_areas):
        raise ExpansionError("empty stented span")
    if frames is None:
        frames = np.arange(first_frame, first_frame + len(post_areas))
    frames = np.asarray(frames, dtype=int)
    if frames.shape != post_areas.shape:
        raise ExpansionError("{} frames for {} areas".format(
            len(frames), len(post_areas)))
    bad = np.flatnonzero(~(post_areas > 0))
    if len(bad):
        raise ExpansionError("frame {}: non-positive lumen area {}".format(
            frames[bad[0]], post_areas[bad[0]]))
    reference = refs.mean_area_mm2
    if not reference > 0:
        raise ExpansionError("non-positive reference area {}".format(reference))

    sei = 100*post_areas/reference
    k = int(np.argmin(sei))
    msei = float(sei[k])
    return ExpansionRecord(
        frames=frames,
        sei=sei,
        msei=msei,
        msei_frame=int(frames[k]),
        label=expansion_label(msei, threshold))
