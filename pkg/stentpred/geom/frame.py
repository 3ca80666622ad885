"""
Per-frame lumen and calcification measurements

Lengths are reported in mm and areas in mm^2. Region descriptors follow
the moment conventions of image region properties: axes are those of the
ellipse with the same normalized second central moments, extent is
area over bounding-box area and solidity is area over the pixel count of
the filled convex hull.
"""

import dataclasses
import math

import numpy as np
from skimage.measure import regionprops

from stentpred.data.pullback import LUMEN, CALCIFICATION
from stentpred.geom import tools
from stentpred.util.misc import StentpredError


__all__ = ["GeometryError", "LumenFrameFeatures", "CalcFrameFeatures",
           "compute_lumen_frame_features", "compute_calc_frame_features",
           "lumen_centroid"]


class GeometryError(StentpredError):
    def __init__(self, message, frame=None):
        self.frame = frame
        if frame is not None:
            message = "frame {}: {}".format(frame, message)
        StentpredError.__init__(self, message)


@dataclasses.dataclass(frozen=True)
class LumenFrameFeatures:
    area_mm2: float
    pct_area_stenosis: float
    major_axis_mm: float
    minor_axis_mm: float
    perimeter_mm: float
    extent: float
    eccentricity: float
    solidity: float
    circularity: float
    below_ref_050: bool
    below_ref_070: bool
    below_ref_090: bool

    def values(self):
        return [float(getattr(self, f.name)) for f in dataclasses.fields(self)]


@dataclasses.dataclass(frozen=True)
class CalcFrameFeatures:
    present: bool
    max_arc_angle_deg: float = 0.0
    max_thickness_mm: float = 0.0
    max_depth_mm: float = 0.0
    area_mm2: float = 0.0
    major_axis_mm: float = 0.0
    minor_axis_mm: float = 0.0
    perimeter_mm: float = 0.0
    extent: float = 0.0
    eccentricity: float = 0.0
    solidity: float = 0.0
    circularity: float = 0.0
    stretch_ratio: float = 1.0

    def values(self):
        # "present" is implied by area and is not a model input
        return [float(getattr(self, f.name)) for f in dataclasses.fields(self)
                if f.name != "present"]


def _shape(region, spacing):
    props = regionprops(region.astype(np.uint8))[0]
    area_px = float(props.area)
    major, minor, eccentricity = tools.moment_axes(props.inertia_tensor_eigvals)
    perimeter = tools.region_perimeter(region)
    return dict(
        area_px=area_px,
        major_axis_mm=major*spacing,
        minor_axis_mm=minor*spacing,
        perimeter_mm=perimeter*spacing,
        extent=float(props.extent),
        eccentricity=eccentricity,
        solidity=float(props.solidity),
        circularity=4*math.pi*area_px/perimeter**2,
    )


def lumen_centroid(mask, frame=None):
    coords = np.argwhere(mask == LUMEN)
    if not len(coords):
        raise GeometryError("empty lumen region", frame)
    return coords.mean(axis=0)


def compute_lumen_frame_features(mask, pixel_spacing_mm, reference_area_mm2,
                                 frame=None):
    if not reference_area_mm2 > 0:
        raise GeometryError("reference area must be positive, got {}".format(
            reference_area_mm2), frame)
    region = mask == LUMEN
    if not region.any():
        raise GeometryError("empty lumen region", frame)
    shape = _shape(region, pixel_spacing_mm)
    area = shape.pop("area_px")*pixel_spacing_mm**2
    return LumenFrameFeatures(
        area_mm2=area,
        pct_area_stenosis=(1 - area/reference_area_mm2)*100,
        below_ref_050=bool(area < 0.5*reference_area_mm2),
        below_ref_070=bool(area < 0.7*reference_area_mm2),
        below_ref_090=bool(area < 0.9*reference_area_mm2),
        **shape)


def compute_calc_frame_features(mask, pixel_spacing_mm, frame=None,
                                n_rays=360):
    calc = mask == CALCIFICATION
    if not calc.any():
        return CalcFrameFeatures(present=False)
    origin = lumen_centroid(mask, frame)

    profiles = tools.cast_rays(mask, origin, n_rays=n_rays)
    hits = [p.hit for p in profiles]
    arc = tools.longest_circular_run(hits)*360.0/n_rays
    thickness = max(p.thickness for p in profiles)
    depth = max((p.depth for p in profiles if p.hit), default=0.0)

    largest = tools.largest_component(calc, connectivity=2)
    shape = _shape(largest, pixel_spacing_mm)
    shape.pop("area_px")
    return CalcFrameFeatures(
        present=True,
        max_arc_angle_deg=arc,
        max_thickness_mm=thickness*pixel_spacing_mm,
        max_depth_mm=depth*pixel_spacing_mm,
        area_mm2=np.count_nonzero(calc)*pixel_spacing_mm**2,
        stretch_ratio=shape["major_axis_mm"]/shape["minor_axis_mm"],
        **shape)
