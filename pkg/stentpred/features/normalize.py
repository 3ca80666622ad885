import dataclasses
import logging

import numpy as np

from stentpred.features.schema import AssemblyError


__all__ = ["CLAMP_LOW", "CLAMP_HIGH", "NormalizationParams",
           "fit_normalizer", "apply_normalizer"]


logger = logging.getLogger(__name__)

CLAMP_LOW, CLAMP_HIGH = -0.5, 1.5


@dataclasses.dataclass(frozen=True, eq=False)
class NormalizationParams:
    """Per-column training (min, max) for min-max scaling

    Exempt columns (absolute areas and volumes) pass through unchanged.
    ``warnings`` lists the constant columns met during fitting.
    """
    names: tuple
    minimum: np.ndarray
    maximum: np.ndarray
    exempt: tuple
    warnings: tuple = ()

    def to_dict(self):
        return dict(names=list(self.names), minimum=self.minimum.tolist(),
                    maximum=self.maximum.tolist(), exempt=list(self.exempt),
                    warnings=list(self.warnings))

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["names"]), np.array(d["minimum"], dtype=float),
                   np.array(d["maximum"], dtype=float), tuple(d["exempt"]),
                   tuple(d.get("warnings", ())))


def fit_normalizer(train):
    if len(train) < 2:
        raise AssemblyError("normalization needs at least 2 training rows, "
                            "got {}".format(len(train)))
    minimum = train.values.min(axis=0)
    maximum = train.values.max(axis=0)
    warnings = []
    for i, name in enumerate(train.names):
        if not train.schema.exempt[i] and minimum[i] == maximum[i]:
            msg = "column '{}' is constant ({}) on training rows; mapped to 0".format(
                name, minimum[i])
            logger.warning(msg)
            warnings.append(msg)
    return NormalizationParams(tuple(train.names), minimum, maximum,
                               tuple(train.schema.exempt), tuple(warnings))


def apply_normalizer(params, matrix):
    if tuple(matrix.names) != params.names:
        raise AssemblyError("normalizer was fitted on different columns")
    exempt = np.array(params.exempt, dtype=bool)
    span = params.maximum - params.minimum
    flat = span == 0
    scaled = (matrix.values - params.minimum)/np.where(flat, 1.0, span)
    scaled = np.clip(scaled, CLAMP_LOW, CLAMP_HIGH)
    scaled[:, flat] = 0.0
    values = np.where(exempt, matrix.values, scaled)
    return matrix.with_values(values)
