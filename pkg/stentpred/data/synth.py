"""
Synthetic pre-stent pullbacks with a known expansion surrogate

Every lesion is a straight vessel: a lumen disc whose radius dips along one
or two stenoses, flanked by undiseased reference frames, and optionally a
single calcium deposit spanning a run of lesion frames. The deposit shape
follows the lesion phenotype:

nodule
    a concentric arc plus a round mass erupting into the lumen
protrusion
    an arc whose inner edge bulges smoothly into the lumen
sheet
    a concentric arc separated from the lumen by a gap

Post-stent lumen areas come from :func:`surrogate_post_area` evaluated on
the calcium measured in the generated masks, plus seeded Gaussian noise.
Lesion ``i`` depends only on ``derive_seed(seed, i)``, so the dataset is
generated lazily and in any order.
"""

import dataclasses
import logging
import os

import numpy as np
from scipy import ndimage

from stentpred.data.dataset import TRUTH_FILENAME
from stentpred.data.pullback import (BACKGROUND, LUMEN, CALCIFICATION, PRE,
                                     PHENOTYPES, Pullback, PullbackMeta,
                                     save_pullback)
from stentpred.expansion import find_reference_areas
from stentpred.features.assemble import LesionTargets
from stentpred.geom.frame import compute_calc_frame_features
from stentpred.util.misc import (StentpredError, csv_text, format_float,
                                 make_rng, write_to_file)


__all__ = ["SynthError", "SurrogateParams", "SynthConfig", "SyntheticLesion",
           "SyntheticDataset", "allocate_phenotypes", "surrogate_post_area",
           "generate_dataset", "write_dataset", "TRUTH_FILENAME"]


logger = logging.getLogger(__name__)


class SynthError(StentpredError):
    pass


@dataclasses.dataclass(frozen=True)
class SurrogateParams:
    beta: float = 0.5
    thickness_ref_mm: float = 0.5
    depth_ref_mm: float = 1.0
    window_w: int = 15

    def check(self):
        if not 0 <= self.beta < 1:
            raise SynthError("beta must lie in [0, 1), got {}".format(self.beta))
        if not (self.thickness_ref_mm > 0 and self.depth_ref_mm > 0):
            raise SynthError("reference thickness and depth must be positive")
        if self.window_w < 0:
            raise SynthError("window must be non-negative")


def _check_range(name, r, upper=None):
    lo, hi = r
    if not 0 <= lo <= hi:
        raise SynthError("{} range ({}, {}) is not ordered and non-negative".format(
            name, lo, hi))
    if upper is not None and hi > upper:
        raise SynthError("{} range ({}, {}) exceeds {}".format(name, lo, hi, upper))


@dataclasses.dataclass(frozen=True)
class SynthConfig:
    n_lesions: int = 120
    seed: int = 0
    image_size: int = 256
    pixel_spacing_mm: float = 0.01
    frame_pitch_mm: float = 0.2
    lesion_frames: tuple = (20, 40)
    reference_frames: int = 8
    lumen_radius_mm: tuple = (0.45, 0.55)
    stenosis: tuple = (0.1, 0.45)
    calc_probability: float = 0.9
    arc_deg: tuple = (40.0, 320.0)
    thickness_mm: tuple = (0.1, 0.5)
    depth_mm: tuple = (0.0, 0.1)
    phenotype_mix: tuple = (0.13, 0.23, 0.64)
    phenotype_effect: tuple = (1.0, 1.0, 1.0)
    noise_fraction: float = 0.05
    noise_sd_mm2: float = None
    # every n-th lesion shares its patient with the lesion before it
    pair_every: int = 18
    surrogate: SurrogateParams = dataclasses.field(default_factory=SurrogateParams)

    def check(self):
        if self.n_lesions < 1:
            raise SynthError("n_lesions must be positive")
        if self.image_size < 16:
            raise SynthError("image size must be at least 16 pixels")
        if not (self.pixel_spacing_mm > 0 and self.frame_pitch_mm > 0):
            raise SynthError("pixel spacing and frame pitch must be positive")
        if self.lesion_frames[0] < 1:
            raise SynthError("lesions need at least one frame")
        if self.reference_frames < 1:
            raise SynthError("at least one reference frame per side is needed")
        for name in ("lesion_frames", "lumen_radius_mm", "arc_deg",
                     "thickness_mm", "depth_mm"):
            _check_range(name, getattr(self, name), 360 if name == "arc_deg" else None)
        if not self.lumen_radius_mm[0] > 0:
            raise SynthError("lumen radius must be positive")
        _check_range("stenosis", self.stenosis)
        if self.stenosis[1] >= 1:
            raise SynthError("stenosis of {} would close the lumen".format(
                self.stenosis[1]))
        if not 0 <= self.calc_probability <= 1:
            raise SynthError("calc_probability must lie in [0, 1]")
        if len(self.phenotype_mix) != len(PHENOTYPES) or \
                min(self.phenotype_mix) < 0 or \
                not np.isclose(sum(self.phenotype_mix), 1.0):
            raise SynthError("phenotype proportions {} must be {} non-negative "
                             "values summing to 1".format(self.phenotype_mix,
                                                          len(PHENOTYPES)))
        if len(self.phenotype_effect) != len(PHENOTYPES) or \
                min(self.phenotype_effect) < 0:
            raise SynthError("phenotype effect needs {} non-negative values".format(
                len(PHENOTYPES)))
        if self.noise_fraction < 0 or (self.noise_sd_mm2 is not None
                                       and self.noise_sd_mm2 < 0):
            raise SynthError("noise must be non-negative")
        reach = self.lumen_radius_mm[1] + self.depth_mm[1] + self.thickness_mm[1]
        if reach/self.pixel_spacing_mm > self.image_size/2 - 2:
            raise SynthError("vessel and calcium reach {} mm, beyond the {} mm "
                             "half-width of the image".format(
                                 reach, self.image_size/2*self.pixel_spacing_mm))
        self.surrogate.check()

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


def allocate_phenotypes(n, proportions):
    """Phenotype counts for ``n`` lesions by largest remainder."""
    quotas = np.asarray(proportions, dtype=float)*n
    counts = np.floor(quotas).astype(int)
    remainder = quotas - counts
    for i in sorted(range(len(counts)), key=lambda i: (-remainder[i], i)):
        if counts.sum() == n:
            break
        counts[i] += 1
    return counts


def surrogate_post_area(arc_deg, thickness_mm, depth_mm, reference_area_mm2,
                        params=None, effect=1.0):
    """Post-stent lumen area per frame under the expansion surrogate.

    The resistance of frame g is
    ``arc/360 * min(T/T_ref, 1) * (1 - 0.5*min(D/D_ref, 1))``; frame f takes
    the mean resistance over ``|g - f| <= w`` (frames beyond the span count
    as zero), scaled by ``effect`` and clipped to [0, 1].
    """
    if params is None:
        params = SurrogateParams()
    arc = np.asarray(arc_deg, dtype=float)
    thickness = np.asarray(thickness_mm, dtype=float)
    depth = np.asarray(depth_mm, dtype=float)
    for name, v in (("arc", arc), ("thickness", thickness), ("depth", depth)):
        if not np.all(np.isfinite(v)):
            raise SynthError("non-finite calcification {}".format(name))
    resistance = (np.clip(arc, 0, 360)/360
                  * np.minimum(np.maximum(thickness, 0)/params.thickness_ref_mm, 1)
                  * (1 - 0.5*np.minimum(np.maximum(depth, 0)/params.depth_ref_mm, 1)))
    smoothed = ndimage.uniform_filter1d(resistance, 2*params.window_w + 1,
                                        mode="constant", cval=0.0)
    smoothed = np.clip(smoothed*effect, 0.0, 1.0)
    return reference_area_mm2*(1 - params.beta*smoothed)


@dataclasses.dataclass(frozen=True, eq=False)
class SyntheticLesion:
    lesion_id: str
    pullback: Pullback
    targets: LesionTargets
    surrogate_mm2: np.ndarray
    noise_sd_mm2: float

    @property
    def phenotype(self):
        return self.pullback.meta.phenotype


class _Geometry:
    """Random shape parameters of one lesion, in pixels and frames."""
    def __init__(self, config, phenotype, rng):
        spacing = config.pixel_spacing_mm
        lo, hi = config.lesion_frames
        self.lesion_count = int(rng.integers(lo, hi + 1))
        self.margin = config.reference_frames
        self.frame_count = self.lesion_count + 2*self.margin
        self.radius = rng.uniform(*config.lumen_radius_mm)/spacing

        self.bumps = []
        for _ in range(int(rng.integers(1, 3))):
            center = self.margin + rng.uniform(0, self.lesion_count - 1)
            width = rng.uniform(0.1, 0.25)*self.lesion_count + 1
            self.bumps.append((center, width, rng.uniform(*config.stenosis)))

        self.phenotype = phenotype
        self.calcified = bool(rng.random() < config.calc_probability)
        length = max(1, int(round(rng.uniform(0.3, 0.9)*self.lesion_count)))
        self.calc_start = self.margin + int(rng.integers(0, self.lesion_count - length + 1))
        self.calc_stop = self.calc_start + length
        self.arc = rng.uniform(*config.arc_deg)
        self.thickness = rng.uniform(*config.thickness_mm)/spacing
        self.depth = rng.uniform(*config.depth_mm)/spacing
        self.start_angle = rng.uniform(0, 360)
        self.bulge = rng.uniform(0.15, 0.35)

    def lumen_radius(self, f):
        if not self.margin <= f < self.margin + self.lesion_count:
            return self.radius
        narrowing = sum(d*np.exp(-0.5*((f - c)/w)**2) for c, w, d in self.bumps)
        return self.radius*max(1 - narrowing, 0.3)

    def taper(self, f):
        """Deposit profile along the pullback, 1 mid-deposit."""
        if not (self.calcified and self.calc_start <= f < self.calc_stop):
            return 0.0
        length = self.calc_stop - self.calc_start
        return 0.5 + 0.5*np.sin(np.pi*(f - self.calc_start + 0.5)/length)


def _stamp_frame(geometry, f, size):
    center = (size - 1)/2
    yy, xx = np.ogrid[:size, :size]
    dy, dx = yy - center, xx - center
    rr = np.hypot(dy, dx)
    labels = np.full((size, size), BACKGROUND, dtype=np.uint8)
    radius = geometry.lumen_radius(f)
    labels[rr <= radius] = LUMEN

    taper = geometry.taper(f)
    if taper == 0:
        return labels
    arc = geometry.arc*taper
    thickness = max(geometry.thickness*taper, 2.0)
    offset = np.degrees(np.arctan2(dy, dx)) - geometry.start_angle
    u = np.mod(offset, 360)/arc
    sector = u < 1
    if geometry.phenotype == "sheet":
        inner = radius + geometry.depth
        calc = sector & (rr >= inner) & (rr < inner + thickness)
    elif geometry.phenotype == "protrusion":
        inner = radius*(1 - geometry.bulge*taper*np.sin(np.pi*np.clip(u, 0, 1)))
        calc = sector & (rr >= inner) & (rr < radius + thickness)
    else:
        calc = sector & (rr >= radius) & (rr < radius + thickness)
        angle = np.radians(geometry.start_angle + arc/2)
        cy = center + radius*np.sin(angle)
        cx = center + radius*np.cos(angle)
        calc |= np.hypot(yy - cy, xx - cx) <= 0.35*radius*taper
    labels[calc] = CALCIFICATION
    return labels


class SyntheticDataset:
    """Lazily generated lesions; ``dataset[i]`` regenerates lesion ``i``."""
    def __init__(self, config):
        config.check()
        self.config = config
        counts = allocate_phenotypes(config.n_lesions, config.phenotype_mix)
        phenotypes = np.repeat(np.arange(len(PHENOTYPES)), counts)
        make_rng(config.seed).shuffle(phenotypes)
        self.phenotypes = tuple(PHENOTYPES[p] for p in phenotypes)

    def __len__(self):
        return self.config.n_lesions

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def lesion_id(self, i):
        return "L{:04d}".format(i)

    def patient_id(self, i):
        every = self.config.pair_every
        shared = (i + 1)//every if every else 0
        return "P{:04d}".format(i - shared)

    def __getitem__(self, i):
        if not 0 <= i < len(self):
            raise IndexError(i)
        config = self.config
        rng = make_rng(config.seed, i)
        phenotype = self.phenotypes[i]
        geometry = _Geometry(config, phenotype, rng)
        frames = np.stack([_stamp_frame(geometry, f, config.image_size)
                           for f in range(geometry.frame_count)])
        start = geometry.margin
        end = start + geometry.lesion_count - 1
        meta = PullbackMeta(
            pullback_id=self.lesion_id(i) + "-pre",
            phase=PRE,
            frame_count=geometry.frame_count,
            pixel_spacing_mm=config.pixel_spacing_mm,
            lesion_start_frame=start,
            lesion_end_frame=end,
            patient_id=self.patient_id(i),
            frame_pitch_mm=config.frame_pitch_mm,
            phenotype=phenotype)
        pullback = Pullback(meta, frames)

        reference = find_reference_areas(pullback, start, end)
        measured = [compute_calc_frame_features(frames[f], config.pixel_spacing_mm, f)
                    for f in range(start, end + 1)]
        surrogate = surrogate_post_area(
            [m.max_arc_angle_deg for m in measured],
            [m.max_thickness_mm for m in measured],
            [m.max_depth_mm for m in measured],
            reference.mean_area_mm2, config.surrogate,
            config.phenotype_effect[PHENOTYPES.index(phenotype)])
        sd = config.noise_sd_mm2
        if sd is None:
            sd = config.noise_fraction*reference.mean_area_mm2
        noisy = surrogate + rng.normal(0.0, sd, len(surrogate)) if sd else surrogate
        noisy = np.maximum(noisy, 0.05*reference.mean_area_mm2)
        targets = LesionTargets(
            areas=dict((start + k, float(a)) for k, a in enumerate(noisy)),
            reference=reference)
        return SyntheticLesion(self.lesion_id(i), pullback, targets, surrogate, sd)


def generate_dataset(config):
    return SyntheticDataset(config)


def truth_table(lesions):
    rows = []
    for lesion in lesions:
        for frame in lesion.targets.frames:
            rows.append([lesion.lesion_id, frame,
                         format_float(lesion.targets.areas[frame]), lesion.phenotype])
    return csv_text(("lesion_id", "frame", "post_area_mm2", "phenotype"), rows)


def write_dataset(dataset, path):
    """One pullback directory per lesion plus ``truth.csv``."""
    os.makedirs(path, exist_ok=True)
    lesions = []
    for lesion in dataset:
        save_pullback(lesion.pullback, os.path.join(path, lesion.lesion_id))
        lesions.append(lesion)
        logger.debug("wrote lesion %s", lesion.lesion_id)
    write_to_file(os.path.join(path, TRUTH_FILENAME), truth_table(lesions))
    logger.info("wrote %d synthetic lesions to %s", len(lesions), path)
