import dataclasses
import math

import numpy as np
from scipy import ndimage

from stentpred.data.pullback import Pullback, PullbackError


__all__ = ["RegistrationTransform", "rotate_mask", "align_post_to_pre"]


@dataclasses.dataclass(frozen=True)
class RegistrationTransform:
    """Rigid pre/post registration: an integer frame shift and a rotation

    Frame ``i`` of the aligned pullback is frame ``i + z_offset_frames`` of
    the input. Rotation is counter-clockwise positive in (column, row)
    coordinates about ((width - 1)/2, (height - 1)/2), so a pixel at
    (cx + 10, cy) lands on (cx, cy + 10) under 90 degrees.
    """
    z_offset_frames: int = 0
    rotation_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "z_offset_frames", int(self.z_offset_frames))
        object.__setattr__(self, "rotation_deg", float(self.rotation_deg) % 360.0)

    def inverse(self):
        return RegistrationTransform(-self.z_offset_frames,
                                     (360.0 - self.rotation_deg) % 360.0)


def rotate_mask(labels, rotation_deg):
    rotation_deg = float(rotation_deg) % 360.0
    if rotation_deg == 0.0:
        return np.array(labels, copy=True)
    height, width = labels.shape
    cy, cx = (height - 1)/2, (width - 1)/2
    theta = math.radians(rotation_deg)
    c, s = math.cos(theta), math.sin(theta)
    # affine_transform maps output (row, col) to input (row, col), so this
    # is the inverse rotation written in array index order
    matrix = np.array([[c, -s],
                       [s, c]])
    center = np.array([cy, cx])
    offset = center - matrix @ center
    return ndimage.affine_transform(labels, matrix, offset=offset, order=0,
                                    mode="constant", cval=0,
                                    output=np.uint8)


def _shift_bounds(start, end, shift, count):
    if start is None:
        return None, None
    start, end = start - shift, end - shift
    if end < 0 or start >= count:
        return None, None
    return max(start, 0), min(end, count - 1)


def align_post_to_pre(post, t):
    n = post.frame_count
    z = t.z_offset_frames
    if abs(z) >= n:
        raise PullbackError("|z_offset_frames| = {} must be below frame_count {}".format(
            abs(z), n), field="z_offset_frames")

    # output frame i is input frame i + z; trailing frames without a source
    # are dropped, leading ones (negative offsets) stay background
    count = min(n, n - z)
    frames = np.zeros((count, post.height, post.width), dtype=np.uint8)
    for i in range(max(0, -z), count):
        frames[i] = rotate_mask(post.frames[i + z], t.rotation_deg)
    shift = z

    meta = post.meta
    lesion = _shift_bounds(meta.lesion_start_frame, meta.lesion_end_frame,
                           shift, count)
    if lesion[0] is None:
        raise PullbackError("lesion falls outside the aligned frame range",
                            field="lesion_start_frame")
    stent = _shift_bounds(meta.stent_start_frame, meta.stent_end_frame,
                          shift, count)
    if meta.has_stent() and stent[0] is None:
        raise PullbackError("stent falls outside the aligned frame range",
                            field="stent_start_frame")
    meta = meta.replace(frame_count=count,
                        lesion_start_frame=lesion[0], lesion_end_frame=lesion[1],
                        stent_start_frame=stent[0], stent_end_frame=stent[1])
    return Pullback(meta, frames)
