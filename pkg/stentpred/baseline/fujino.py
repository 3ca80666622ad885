"""
Rule-based calcium score and its restricted-feature learning variant

The score awards points for a wide calcium arc, a thick calcium deposit and
a long calcified segment; a lesion collecting every point is flagged as at
high risk of stent under-expansion. All constants live in
:class:`FujinoConfig`.
"""

import dataclasses

import numpy as np

from stentpred.features.assemble import FeatureMatrix
from stentpred.features.schema import CALC_2D, FeatureSchema
from stentpred.util.misc import StentpredError, csv_text, format_float


__all__ = ["BaselineError", "FujinoConfig", "FujinoScore", "fujino_score",
           "lesion_score_inputs", "fujino_ml_features", "score_table"]


ML_COLUMNS = ("calc_max_arc_angle", "calc_max_thickness", "calc_length")


class BaselineError(StentpredError):
    pass


@dataclasses.dataclass(frozen=True)
class FujinoConfig:
    angle_threshold_deg: float = 180.0
    thickness_threshold_mm: float = 0.5
    length_threshold_mm: float = 5.0
    angle_points: int = 2
    thickness_points: int = 1
    length_points: int = 1
    high_risk_points: int = 4

    def check(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise BaselineError("{} must be non-negative".format(f.name))

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class FujinoScore:
    points: int
    angle_points: int
    thickness_points: int
    length_points: int
    high_risk: bool


def fujino_score(max_angle_deg, max_thickness_mm, calc_length_mm, config=None):
    """Score a lesion; every criterion is a strict ``>`` comparison."""
    if config is None:
        config = FujinoConfig()
    for name, value in (("angle", max_angle_deg), ("thickness", max_thickness_mm),
                        ("length", calc_length_mm)):
        if not value >= 0:
            raise BaselineError("calcification {} must be non-negative, got {}".format(
                name, value))
    angle = config.angle_points if max_angle_deg > config.angle_threshold_deg else 0
    thickness = (config.thickness_points
                 if max_thickness_mm > config.thickness_threshold_mm else 0)
    length = config.length_points if calc_length_mm > config.length_threshold_mm else 0
    points = angle + thickness + length
    return FujinoScore(points, angle, thickness, length,
                       points >= config.high_risk_points)


def lesion_score_inputs(record):
    """(max arc angle, max thickness, calcified length) of a lesion record."""
    angle = record.calc2d[:, CALC_2D.index("calc_arc_angle")]
    thickness = record.calc2d[:, CALC_2D.index("calc_thickness")]
    return (float(angle.max()) if len(angle) else 0.0,
            float(thickness.max()) if len(thickness) else 0.0,
            float(record.calc3d.length_mm))


def fujino_ml_features(records):
    """Lesion-mode matrix of the three score inputs, one row per lesion.

    Targets are the smallest post-stent area where known, NaN otherwise.
    """
    schema = FeatureSchema(ML_COLUMNS, ("calc2d", "calc2d", "calc3d"),
                           (False, False, False))
    values, target, group_id, lesion_id, frame_index = [], [], [], [], []
    for record in records:
        values.append(lesion_score_inputs(record))
        if record.targets is not None and record.targets.areas:
            areas = record.targets.areas
            frame = min(areas, key=lambda f: (areas[f], f))
            target.append(areas[frame])
            frame_index.append(frame)
        else:
            target.append(np.nan)
            frame_index.append(-1)
        group_id.append(record.patient_id)
        lesion_id.append(record.lesion_id)
    return FeatureMatrix(schema, np.array(values).reshape(-1, len(schema)),
                         target, group_id, lesion_id, frame_index)


def score_table(records, config=None, threshold=None):
    """CSV of the score per lesion, with actual mSEI where targets exist."""
    header = ("lesion_id", "patient_id", "max_angle_deg", "max_thickness_mm",
              "calc_length_mm", "points", "high_risk", "actual_msei", "actual_label")
    rows = []
    for record in records:
        inputs = lesion_score_inputs(record)
        score = fujino_score(*inputs, config=config)
        if record.targets is not None:
            kwargs = {} if threshold is None else dict(threshold=threshold)
            actual = record.actual_expansion(**kwargs)
            msei, label = format_float(actual.msei), actual.label
        else:
            msei, label = "", ""
        rows.append([record.lesion_id, record.patient_id]
                    + [format_float(v) for v in inputs]
                    + [score.points, int(score.high_risk), msei, label])
    return csv_text(header, rows)
