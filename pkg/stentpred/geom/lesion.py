"""
Lesion-level volumetric measurements

Voxels are anisotropic: ``pixel_spacing_mm`` in plane, ``frame_pitch_mm``
along the pullback. Convex volumes stack the per-frame convex hulls.
"""

import dataclasses
import math

import numpy as np
from scipy import ndimage

from stentpred.data.pullback import LUMEN, CALCIFICATION, PullbackError
from stentpred.geom import tools
from stentpred.geom.frame import GeometryError


__all__ = ["LumenLesionFeatures", "CalcLesionFeatures",
           "compute_lumen_lesion_features", "compute_calc_lesion_features"]


@dataclasses.dataclass(frozen=True)
class LumenLesionFeatures:
    volume_mm3: float
    equivalent_diameter_mm: float
    extent: float
    convex_volume_mm3: float
    solidity: float
    surface_area_mm2: float

    def values(self):
        return [float(getattr(self, f.name)) for f in dataclasses.fields(self)]


@dataclasses.dataclass(frozen=True)
class CalcLesionFeatures:
    volume_mm3: float = 0.0
    volume_index_mm3_per_mm: float = 0.0
    length_mm: float = 0.0
    equivalent_diameter_mm: float = 0.0
    extent: float = 0.0
    convex_volume_mm3: float = 0.0
    solidity: float = 0.0
    surface_area_mm2: float = 0.0
    num_deposits: int = 0
    calc_pct: float = 0.0

    def values(self):
        # calc_pct is a column of its own in the schema
        return [float(getattr(self, f.name)) for f in dataclasses.fields(self)
                if f.name != "calc_pct"]


def equivalent_diameter(volume):
    return (6*volume/math.pi)**(1/3)


def _lesion_volume(pullback, label):
    lesion = pullback.meta.lesion_frames
    return pullback.frames[lesion.start:lesion.stop] == label


def _surface(volume, spacing, pitch):
    axial, lateral = tools.exposed_faces(volume)
    return axial*spacing**2 + lateral*spacing*pitch


def _bbox_voxels(volume):
    coords = np.argwhere(volume)
    return int(np.prod(coords.max(axis=0) - coords.min(axis=0) + 1))


def _convex_voxels(volume):
    return sum(tools.convex_area(frame) for frame in volume if frame.any())


def compute_lumen_lesion_features(pullback):
    try:
        pullback.check_lesion_lumen()
    except PullbackError as e:
        raise GeometryError("empty lumen region", e.frame) from e
    meta = pullback.meta
    voxel = meta.pixel_spacing_mm**2*meta.frame_pitch_mm
    lumen = _lesion_volume(pullback, LUMEN)

    count = np.count_nonzero(lumen)
    convex = _convex_voxels(lumen)
    volume = count*voxel
    return LumenLesionFeatures(
        volume_mm3=volume,
        equivalent_diameter_mm=equivalent_diameter(volume),
        extent=count/_bbox_voxels(lumen),
        convex_volume_mm3=convex*voxel,
        solidity=count/convex,
        surface_area_mm2=_surface(lumen, meta.pixel_spacing_mm, meta.frame_pitch_mm))


def _longest_deposit(labels):
    """Label of the deposit spanning the most frames.

    Ties go to the larger deposit, then to the lowest label.
    """
    best, best_key = None, None
    for label, region in enumerate(ndimage.find_objects(labels), 1):
        if region is None:
            continue
        span = region[0].stop - region[0].start
        voxels = np.count_nonzero(labels[region] == label)
        key = (span, voxels, -label)
        if best_key is None or key > best_key:
            best, best_key = label, key
    return best, best_key[0]


def compute_calc_lesion_features(pullback):
    meta = pullback.meta
    spacing, pitch = meta.pixel_spacing_mm, meta.frame_pitch_mm
    voxel = spacing**2*pitch
    calc = _lesion_volume(pullback, CALCIFICATION)
    lesion_frames = calc.shape[0]
    if not calc.any():
        return CalcLesionFeatures()

    labels, count = tools.components(calc, 3)
    deposit, span = _longest_deposit(labels)
    longest = labels == deposit

    volume = np.count_nonzero(calc)*voxel
    longest_count = np.count_nonzero(longest)
    longest_convex = _convex_voxels(longest)
    calc_frames = np.count_nonzero(calc.any(axis=(1, 2)))
    return CalcLesionFeatures(
        volume_mm3=volume,
        volume_index_mm3_per_mm=volume/(lesion_frames*pitch),
        length_mm=span*pitch,
        equivalent_diameter_mm=equivalent_diameter(longest_count*voxel),
        extent=longest_count/_bbox_voxels(longest),
        convex_volume_mm3=longest_convex*voxel,
        solidity=longest_count/longest_convex,
        surface_area_mm2=_surface(calc, spacing, pitch),
        num_deposits=int(count),
        calc_pct=100.0*calc_frames/lesion_frames)
