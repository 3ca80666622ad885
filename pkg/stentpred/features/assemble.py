"""
Per-lesion feature extraction and feature-matrix assembly

A :class:`LesionRecord` holds everything measured once per lesion: the
per-frame 2D features, the 3D lesion features, the pre-stent reference
segments and, when known, the registered post-stent targets. The three
analysis modes then lay the same record out as rows of a
:class:`FeatureMatrix`.
"""

import dataclasses
import logging

import numpy as np

from stentpred.data.pullback import PHENOTYPES, validate_pair
from stentpred.data.registration import RegistrationTransform, align_post_to_pre
from stentpred.expansion import (DEFAULT_THRESHOLD, compute_sei_curve,
                                 find_reference_areas)
from stentpred.features.schema import (FRAME, SEGMENTAL, LESION,
                                       AssemblyError, FeatureSchema,
                                       build_schema)
from stentpred.features.stats import summarize_columns, summarize_windows
from stentpred.geom.frame import (compute_lumen_frame_features,
                                  compute_calc_frame_features)
from stentpred.geom.lesion import (compute_lumen_lesion_features,
                                   compute_calc_lesion_features)
from stentpred.util.misc import csv_rows, csv_text, format_float


__all__ = ["LesionTargets", "LesionRecord", "FeatureMatrix",
           "lesion_targets_from_post", "extract_lesion", "assemble"]


logger = logging.getLogger(__name__)

TRAILING_COLUMNS = ("target", "lesion_id", "patient_id", "frame_index")


@dataclasses.dataclass(frozen=True)
class LesionTargets:
    """Post-stent lumen areas indexed by pre-stent frame

    ``areas`` maps every frame of the stented span to its post-stent lumen
    area in mm^2. ``reference`` holds the post-stent reference segments
    used for ground-truth SEI; ``registered`` is false for areas whose frame
    indices were never aligned to the pre-stent pullback.
    """
    areas: dict
    reference: object = None
    registered: bool = True

    @property
    def frames(self):
        return sorted(self.areas)

    def area_array(self):
        return np.array([self.areas[f] for f in self.frames])


def lesion_targets_from_post(pre, post, transform=None):
    """Register ``post`` onto ``pre`` and read its stented lumen areas."""
    report = validate_pair(pre, post)
    if report:
        raise AssemblyError("pair '{}'/'{}' not analyzable: {}".format(
            pre.meta.pullback_id, post.meta.pullback_id, "; ".join(report)))
    if transform is None:
        transform = RegistrationTransform()
    aligned = align_post_to_pre(post, transform)
    meta = aligned.meta
    areas = aligned.lumen_areas_mm2()
    reference = find_reference_areas(aligned, meta.stent_start_frame,
                                     meta.stent_end_frame)
    return LesionTargets(
        areas=dict((f, float(areas[f])) for f in meta.stent_frames),
        reference=reference)


@dataclasses.dataclass(eq=False)
class LesionRecord:
    lesion_id: str
    patient_id: str
    phenotype: str
    frames: np.ndarray
    lumen2d: np.ndarray
    calc2d: np.ndarray
    lumen3d: object
    calc3d: object
    reference: object
    targets: LesionTargets = None
    pixel_spacing_mm: float = None
    frame_pitch_mm: float = None

    @property
    def frame_count(self):
        return len(self.frames)

    def lesion_3d_values(self):
        return self.lumen3d.values() + self.calc3d.values() + [self.calc3d.calc_pct]

    def phenotype_values(self):
        return [1.0 if self.phenotype == p else 0.0 for p in PHENOTYPES]

    def actual_expansion(self, threshold=DEFAULT_THRESHOLD):
        """Ground-truth SEI over the stented span."""
        if self.targets is None:
            raise AssemblyError("lesion '{}' has no post-stent targets".format(
                self.lesion_id))
        reference = self.targets.reference or self.reference
        frames = self.targets.frames
        return compute_sei_curve(self.targets.area_array(), reference,
                                 threshold, first_frame=frames[0])

    def lesion_target(self):
        return min(self.targets.areas.values())


def _stent_span(pre, targets):
    meta = pre.meta
    if meta.has_stent():
        return meta.stent_start_frame, meta.stent_end_frame
    if targets is not None and targets.areas:
        frames = targets.frames
        return frames[0], frames[-1]
    # planned stent covering the lesion
    return meta.lesion_start_frame, meta.lesion_end_frame


def extract_lesion(pre, targets=None, lesion_id=None):
    """Measure a pre-stent pullback once for all analysis modes.

    ``targets`` may be a :class:`LesionTargets` or a plain mapping of frame
    to post-stent area; the latter is recorded as unregistered.
    """
    if targets is not None and not isinstance(targets, LesionTargets):
        targets = LesionTargets(dict(targets), registered=False)
    meta = pre.meta
    start, end = _stent_span(pre, targets)
    reference = find_reference_areas(pre, start, end)

    lumen, calc = [], []
    for index in meta.lesion_frames:
        mask = pre.frames[index]
        lumen.append(compute_lumen_frame_features(
            mask, meta.pixel_spacing_mm, reference.mean_area_mm2, index).values())
        calc.append(compute_calc_frame_features(
            mask, meta.pixel_spacing_mm, index).values())
    record = LesionRecord(
        lesion_id=lesion_id or meta.pullback_id,
        patient_id=meta.patient_id,
        phenotype=meta.phenotype,
        frames=np.array(meta.lesion_frames),
        lumen2d=np.array(lumen),
        calc2d=np.array(calc),
        lumen3d=compute_lumen_lesion_features(pre),
        calc3d=compute_calc_lesion_features(pre),
        reference=reference,
        targets=targets,
        pixel_spacing_mm=meta.pixel_spacing_mm,
        frame_pitch_mm=meta.frame_pitch_mm)
    logger.debug("extracted lesion %s: %d frames, %d deposits",
                 record.lesion_id, record.frame_count, record.calc3d.num_deposits)
    return record


class FeatureMatrix:
    """Instance-by-feature table with targets and provenance

    Parameters
    ----------
    schema : FeatureSchema
    values : array, (rows, columns)
    target : array, (rows,)
        Post-stent lumen area in mm^2 (minimum over the stented span in
        lesion mode); NaN for rows without ground truth.
    group_id : sequence of str
        Patient of each row.
    lesion_id : sequence of str
    frame_index : array of int
        Pre-stent frame of each row; in lesion mode the frame of the smallest
        post-stent area, or -1 without targets.
    """
    def __init__(self, schema, values, target, group_id, lesion_id, frame_index):
        values = np.asarray(values, dtype=float).reshape(-1, len(schema))
        n = values.shape[0]
        self.schema = schema
        self.values = values
        self.target = np.asarray(target, dtype=float).reshape(n)
        self.group_id = np.asarray(group_id, dtype=object).reshape(n)
        self.lesion_id = np.asarray(lesion_id, dtype=object).reshape(n)
        self.frame_index = np.asarray(frame_index, dtype=int).reshape(n)
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise AssemblyError("missing value in row {} column '{}'".format(
                row, schema.names[col]))

    @classmethod
    def from_arrays(cls, names, values, target, group_id, lesion_id,
                    frame_index, groups=None, exempt=None):
        names = list(names)
        schema = FeatureSchema(
            names,
            groups if groups is not None else ["other"]*len(names),
            exempt if exempt is not None else [False]*len(names))
        return cls(schema, values, target, group_id, lesion_id, frame_index)

    def __len__(self):
        return self.values.shape[0]

    def __repr__(self):
        return "FeatureMatrix({} rows x {} columns)".format(*self.values.shape)

    @property
    def names(self):
        return self.schema.names

    def column(self, name):
        return self.values[:, self.schema.index(name)]

    def with_values(self, values):
        return FeatureMatrix(self.schema, values, self.target, self.group_id,
                             self.lesion_id, self.frame_index)

    def select(self, names):
        names = list(names)
        idx = [self.schema.index(n) for n in names]
        return FeatureMatrix(self.schema.subset(names), self.values[:, idx],
                             self.target, self.group_id, self.lesion_id,
                             self.frame_index)

    def take(self, rows):
        rows = np.asarray(rows)
        return FeatureMatrix(self.schema, self.values[rows], self.target[rows],
                             self.group_id[rows], self.lesion_id[rows],
                             self.frame_index[rows])

    def rows_of_lesions(self, lesion_ids):
        return np.flatnonzero(np.isin(self.lesion_id, list(lesion_ids)))

    def has_targets(self):
        return bool(len(self)) and bool(np.all(np.isfinite(self.target)))

    def to_csv(self):
        rows = []
        for i in range(len(self)):
            rows.append([format_float(v) for v in self.values[i]]
                        + [format_float(self.target[i]), str(self.lesion_id[i]),
                           str(self.group_id[i]), int(self.frame_index[i])])
        return csv_text(list(self.names) + list(TRAILING_COLUMNS), rows)

    @classmethod
    def from_csv(cls, text):
        rows = csv_rows(text)
        if not rows:
            raise AssemblyError("empty feature CSV")
        header = rows[0]
        if tuple(header[-len(TRAILING_COLUMNS):]) != TRAILING_COLUMNS:
            raise AssemblyError("feature CSV must end with columns {}".format(
                ", ".join(TRAILING_COLUMNS)))
        names = header[:-len(TRAILING_COLUMNS)]
        values, target, lesion_id, group_id, frame_index = [], [], [], [], []
        for number, cells in enumerate(rows[1:], 1):
            if len(cells) != len(header):
                raise AssemblyError("row {}: {} cells, expected {}".format(
                    number, len(cells), len(header)))
            values.append([float(c) for c in cells[:len(names)]])
            target.append(float(cells[-4]))
            lesion_id.append(cells[-3])
            group_id.append(cells[-2])
            frame_index.append(int(cells[-1]))
        return cls(_catalog_schema(names), np.array(values).reshape(-1, len(names)),
                   target, group_id, lesion_id, frame_index)


def _catalog_schema(names):
    catalog = dict()
    for mode in (FRAME, SEGMENTAL):
        schema = build_schema(mode, include_phenotype=True)
        for name, group, exempt in zip(schema.names, schema.groups, schema.exempt):
            catalog[name] = (group, exempt)
    groups = [catalog.get(n, ("other", False))[0] for n in names]
    exempt = [catalog.get(n, ("other", False))[1] for n in names]
    return FeatureSchema(names, groups, exempt)


def check_segment_length(segment_length):
    if int(segment_length) != segment_length or segment_length < 1 \
            or segment_length % 2 == 0:
        raise AssemblyError("segment length must be a positive odd integer, "
                            "got {}".format(segment_length))


def _row_frames(record, require_targets):
    """Positions in ``record.frames`` that become rows, and their targets."""
    targets = record.targets
    if targets is None:
        if require_targets:
            raise AssemblyError("lesion '{}' has no post-stent targets".format(
                record.lesion_id))
        return np.arange(record.frame_count), np.full(record.frame_count, np.nan)
    if not targets.registered:
        raise AssemblyError("lesion '{}': targets are not registered to the "
                            "pre-stent pullback".format(record.lesion_id))
    positions = [i for i, f in enumerate(record.frames) if f in targets.areas]
    return (np.array(positions, dtype=int),
            np.array([targets.areas[record.frames[i]] for i in positions]))


def _lesion_rows(mode, record, segment_length, include_phenotype,
                 require_targets):
    per_frame = np.hstack([record.lumen2d, record.calc2d])
    tail = []
    if mode != FRAME:
        tail += record.lesion_3d_values()
    if include_phenotype:
        tail += record.phenotype_values()

    if mode == LESION:
        summary = summarize_columns(per_frame)
        row = np.concatenate([summary.ravel(), tail])
        if record.targets is None:
            if require_targets:
                raise AssemblyError("lesion '{}' has no post-stent targets".format(
                    record.lesion_id))
            return row[None, :], [np.nan], [-1]
        if not record.targets.registered:
            raise AssemblyError("lesion '{}': targets are not registered to "
                                "the pre-stent pullback".format(record.lesion_id))
        areas = record.targets.areas
        frame = min(areas, key=lambda f: (areas[f], f))
        return row[None, :], [areas[frame]], [frame]

    positions, target = _row_frames(record, require_targets)
    if mode == FRAME:
        block = per_frame[positions]
    else:
        stats = summarize_windows(per_frame, segment_length//2)
        block = stats.reshape(record.frame_count, -1)[positions]
    if tail:
        block = np.hstack([block, np.tile(tail, (len(positions), 1))])
    return block, target, record.frames[positions]


def assemble(mode, records, segment_length=31, include_phenotype=False,
             require_targets=True):
    """Lay lesion records out as a feature matrix.

    frame: one row per lesion frame with a target, raw 2D features.
    segmental: one row per such frame, every 2D feature summarized over the
    ``segment_length`` window centered on it (clamped to the lesion), plus
    3D features and calcification %. lesion: one row per lesion, 2D features
    summarized over all lesion frames, target the smallest post-stent area.
    Without ``require_targets``, records lacking targets yield rows for every
    lesion frame with NaN targets.
    """
    if mode == SEGMENTAL:
        check_segment_length(segment_length)
    schema = build_schema(mode, include_phenotype)
    blocks, target, group_id, lesion_id, frame_index = [], [], [], [], []
    for record in records:
        block, t, frames = _lesion_rows(mode, record, segment_length,
                                        include_phenotype, require_targets)
        blocks.append(block)
        target.extend(t)
        frame_index.extend(frames)
        group_id.extend([record.patient_id]*len(t))
        lesion_id.extend([record.lesion_id]*len(t))
    if blocks:
        values = np.vstack(blocks)
    else:
        values = np.zeros((0, len(schema)))
    return FeatureMatrix(schema, values, target, group_id, lesion_id, frame_index)
