"""
Feature column catalog

Column names are ``<base>`` in frame mode and ``<base>_<statistic>`` for
the aggregated 2D columns of segmental and lesion modes. Absolute area and
volume columns are exempt from normalization.
"""

import collections
import dataclasses
import hashlib

from stentpred.data.pullback import PHENOTYPES
from stentpred.features.stats import STATISTICS
from stentpred.util.misc import StentpredError


__all__ = ["FRAME", "SEGMENTAL", "LESION", "MODES", "FEATURE_GROUPS",
           "LUMEN_2D", "CALC_2D", "LUMEN_3D", "CALC_3D",
           "AssemblyError", "FeatureSchema", "build_schema", "cle_columns"]


class AssemblyError(StentpredError):
    pass


FRAME, SEGMENTAL, LESION = "frame", "segmental", "lesion"
MODES = (FRAME, SEGMENTAL, LESION)

FEATURE_GROUPS = ("all", "lasso_selected", "cle", "cle_top20")

# order matches LumenFrameFeatures / CalcFrameFeatures / *LesionFeatures.values()
LUMEN_2D = ("lumen_area", "lumen_pct_as", "lumen_major_axis",
            "lumen_minor_axis", "lumen_perimeter", "lumen_extent",
            "lumen_eccentricity", "lumen_solidity", "lumen_circularity",
            "lumen_below_ref_050", "lumen_below_ref_070", "lumen_below_ref_090")
CALC_2D = ("calc_arc_angle", "calc_thickness", "calc_depth", "calc_area",
           "calc_major_axis", "calc_minor_axis", "calc_perimeter",
           "calc_extent", "calc_eccentricity", "calc_solidity",
           "calc_circularity", "calc_stretch_ratio")
LUMEN_3D = ("lumen_volume", "lumen_equivalent_diameter", "lumen_extent_3d",
            "lumen_convex_volume", "lumen_solidity_3d", "lumen_surface_area")
CALC_3D = ("calc_volume", "calc_volume_index", "calc_length",
           "calc_equivalent_diameter", "calc_extent_3d", "calc_convex_volume",
           "calc_solidity_3d", "calc_surface_area", "calc_num_deposits")
CALC_PCT = "calc_pct"
PHENOTYPE_COLUMNS = tuple("phenotype_" + p for p in PHENOTYPES)

_exempt_2d = {"lumen_area", "calc_area"}
_exempt_3d = {"lumen_volume", "lumen_convex_volume", "lumen_surface_area",
              "calc_volume", "calc_convex_volume", "calc_surface_area"}
# statistics that keep the unit of an area column
_unit_statistics = {"mean", "median", "sd", "min", "max"}

_cle_2d = ("calc_arc_angle", "calc_thickness", "calc_depth", "calc_area",
           "lumen_area", "lumen_pct_as")
_cle_3d = (CALC_PCT, "lumen_volume", "calc_volume")


@dataclasses.dataclass(frozen=True)
class FeatureSchema:
    """Ordered, named feature columns

    Parameters
    ----------
    names : tuple of str
        Unique column names, in matrix order.
    groups : tuple of str
        Per-column tag: ``lumen2d``, ``calc2d``, ``lumen3d``, ``calc3d`` or
        ``phenotype``.
    exempt : tuple of bool
        Per-column flag, true for columns passed through normalization
        unchanged.
    """
    names: tuple
    groups: tuple
    exempt: tuple

    def __post_init__(self):
        for field in ("names", "groups", "exempt"):
            object.__setattr__(self, field, tuple(getattr(self, field)))
        if not len(self.names) == len(self.groups) == len(self.exempt):
            raise AssemblyError("schema fields have different lengths")
        if len(set(self.names)) != len(self.names):
            dup = [n for n, c in collections.Counter(self.names).items() if c > 1][0]
            raise AssemblyError("duplicate column '{}'".format(dup))

    def __len__(self):
        return len(self.names)

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise AssemblyError("no column '{}' in schema".format(name))

    def subset(self, names):
        idx = [self.index(n) for n in names]
        return FeatureSchema(
            names=[self.names[i] for i in idx],
            groups=[self.groups[i] for i in idx],
            exempt=[self.exempt[i] for i in idx])

    def fingerprint(self):
        h = hashlib.sha256()
        for name in self.names:
            h.update(name.encode("utf-8") + b"\n")
        return h.hexdigest()

    @property
    def exempt_names(self):
        return [n for n, e in zip(self.names, self.exempt) if e]


def _stat_columns(bases, group):
    for base in bases:
        for stat in STATISTICS:
            yield ("{}_{}".format(base, stat), group,
                   base in _exempt_2d and stat in _unit_statistics)


def build_schema(mode, include_phenotype=False):
    columns = []
    if mode == FRAME:
        columns += [(n, "lumen2d", n in _exempt_2d) for n in LUMEN_2D]
        columns += [(n, "calc2d", n in _exempt_2d) for n in CALC_2D]
    elif mode in (SEGMENTAL, LESION):
        columns += _stat_columns(LUMEN_2D, "lumen2d")
        columns += _stat_columns(CALC_2D, "calc2d")
        columns += [(n, "lumen3d", n in _exempt_3d) for n in LUMEN_3D]
        columns += [(n, "calc3d", n in _exempt_3d) for n in CALC_3D]
        columns.append((CALC_PCT, "calc3d", False))
    else:
        raise AssemblyError("unknown mode '{}'".format(mode))
    if include_phenotype:
        columns += [(n, "phenotype", False) for n in PHENOTYPE_COLUMNS]
    names, groups, exempt = zip(*columns)
    return FeatureSchema(names, groups, exempt)


def cle_columns(schema):
    """Names of the calcification lesion expansion group present in ``schema``.

    Aggregated schemas take all statistics of calcification angle,
    thickness, depth and area, lumen area and %AS, plus calcification %,
    lumen volume and calcification volume; frame schemas take the raw 2D
    counterparts. Phenotype columns are kept when present.
    """
    wanted = []
    for base in _cle_2d:
        if base in schema.names:
            wanted.append(base)
        else:
            wanted += ["{}_{}".format(base, s) for s in STATISTICS]
    wanted += _cle_3d
    wanted += PHENOTYPE_COLUMNS
    wanted = set(wanted)
    return [n for n in schema.names if n in wanted]
