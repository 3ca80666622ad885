import math

import numpy as np
from scipy import ndimage
from skimage import measure
from skimage.measure import regionprops

from stentpred.data.pullback import LUMEN, CALCIFICATION


# 8-neighbourhood in clockwise order (rows grow downwards), starting west.
# Even indices are axis moves, odd indices diagonal moves.
_moore = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)]
_moore_index = dict((d, i) for i, d in enumerate(_moore))

# Vossepoel-Smeulders weights for axis moves, diagonal moves and corners
_vs_even, _vs_odd, _vs_corner = 0.980, 1.406, 0.091


def components(region, connectivity):
    """Label connected components; returns (labels, count)."""
    return measure.label(region, connectivity=connectivity, return_num=True)


def largest_component(region, connectivity=2):
    labels, count = components(region, connectivity)
    if count == 0:
        return np.zeros_like(region, dtype=bool)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == int(np.argmax(sizes))


def trace_boundary(region):
    """Moore-neighbour trace of the outer boundary of a connected region.

    Returns the boundary pixel coordinates (row, col) in tracing order and
    the chain code of the moves between them (indices into the clockwise
    8-neighbourhood). A single pixel yields one coordinate and no moves.
    """
    padded = np.pad(np.asarray(region, dtype=bool), 1)
    nz = np.argwhere(padded)
    if not len(nz):
        return np.zeros((0, 2), dtype=int), []
    start = tuple(nz[0])  # topmost, then leftmost: its west neighbour is background

    def step(p, back):
        for k in range(1, 9):
            d = (back + k) % 8
            q = (p[0] + _moore[d][0], p[1] + _moore[d][1])
            if padded[q]:
                prev = _moore[(back + k - 1) % 8]
                b = (p[0] + prev[0] - q[0], p[1] + prev[1] - q[1])
                return q, _moore_index[b], d
        return None, back, None

    p, back = start, 0
    points = [start]
    moves = []
    q, back, d0 = step(p, back)
    if q is None:
        return np.array(points) - 1, moves
    first = (start, d0)
    moves.append(d0)
    p = q
    limit = 4*len(nz) + 8
    while len(moves) <= limit:
        q, nback, d = step(p, back)
        if (p, d) == first:
            break
        points.append(p)
        moves.append(d)
        p, back = q, nback
    return np.array(points) - 1, moves


def chain_perimeter(moves):
    """Perimeter in pixels of a closed chain code.

    This is the Vossepoel-Smeulders weighted length, which differs from the
    length of the polygon through the boundary pixel centers. Lumen
    circularity relies on it to score a digital disc within [0.95, 1.10].
    """
    if not moves:
        return 4.0
    moves = np.asarray(moves)
    odd = np.count_nonzero(moves % 2)
    even = len(moves) - odd
    corners = np.count_nonzero(moves != np.roll(moves, 1))
    return _vs_even*even + _vs_odd*odd - _vs_corner*corners


def region_perimeter(region):
    """Sum of the outer boundary lengths of the 8-connected components."""
    labels, count = components(region, 2)
    return sum(chain_perimeter(trace_boundary(labels == i)[1])
               for i in range(1, count + 1))


def convex_area(region):
    """Pixel count of the filled convex hull of a region.

    Counts pixels whose centers lie in the hull of the region's pixel edge
    midpoints, so it is never smaller than the region itself.
    """
    region = np.asarray(region, dtype=bool)
    if not region.any():
        return 0
    return int(regionprops(region.astype(np.uint8))[0].area_convex)


def moment_axes(eigvals):
    """Ellipse axes (major, minor) and eccentricity from inertia eigenvalues.

    Eigenvalues are floored at 1/12, the second moment of a unit pixel, so a
    single pixel has axes 4/sqrt(12).
    """
    lo = 1.0/12
    l1, l2 = sorted((max(float(e), lo) for e in eigvals), reverse=True)
    major, minor = 4*math.sqrt(l1), 4*math.sqrt(l2)
    eccentricity = math.sqrt(max(0.0, 1 - l2/l1))
    return major, minor, eccentricity


class RayProfile:
    """Calcification seen along one ray from the lumen centroid

    Lengths are in pixels; ``thickness`` is the longest calcified run and
    ``depth`` the gap between the lumen boundary and the first calcified
    sample.
    """
    __slots__ = ("angle_deg", "hit", "thickness", "depth")

    def __init__(self, angle_deg, hit=False, thickness=0.0, depth=0.0):
        self.angle_deg = angle_deg
        self.hit = hit
        self.thickness = thickness
        self.depth = depth

    def __repr__(self):
        return "RayProfile({}, hit={}, thickness={:.2f}, depth={:.2f})".format(
            self.angle_deg, self.hit, self.thickness, self.depth)


def _runs(flags):
    """(start, stop) sample index pairs of the true runs in ``flags``."""
    edges = np.diff(np.r_[0, flags.astype(np.int8), 0])
    return np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)


def _profile(angle_deg, lumen, calc, step):
    starts, stops = _runs(calc)
    if not len(starts):
        return RayProfile(angle_deg)
    # samples are points: a run of k samples spans (k - 1) steps
    thickness = float(np.max(stops - starts) - 1)*step
    outside = np.flatnonzero(~lumen)
    boundary = outside[0] - 1 if len(outside) else len(lumen) - 1
    depth = max(0.0, float(starts[0] - max(boundary, 0))*step)
    return RayProfile(angle_deg, True, thickness, depth)


def cast_rays(labels, origin, n_rays=360, step=0.25):
    """Sample label masks along rays from ``origin`` (row, col).

    Rays are spaced 360/n_rays degrees apart, counter-clockwise in
    (column, row) coordinates starting along +column, and sampled every
    ``step`` pixels. Each class indicator is interpolated bilinearly and
    read at the 0.5 level, which places region boundaries between pixel
    centers rather than on them.
    """
    angles = np.arange(n_rays)*(360.0/n_rays)
    theta = np.radians(angles)
    labeled = np.argwhere(labels != 0)
    if len(labeled):
        reach = np.max(np.hypot(labeled[:, 0] - origin[0],
                                labeled[:, 1] - origin[1])) + 2.0
    else:
        reach = 1.0
    # background beyond the farthest labeled pixel changes no profile
    t = np.arange(0.0, reach, step)
    rows = origin[0] + t[None, :]*np.sin(theta)[:, None]
    cols = origin[1] + t[None, :]*np.cos(theta)[:, None]
    coords = np.array([rows.ravel(), cols.ravel()])

    def sample(label):
        indicator = (labels == label).astype(float)
        values = ndimage.map_coordinates(indicator, coords, order=1,
                                         mode="constant", cval=0.0)
        return values.reshape(rows.shape) >= 0.5

    lumen, calc = sample(LUMEN), sample(CALCIFICATION)
    return [_profile(float(angles[k]), lumen[k], calc[k], step)
            for k in range(n_rays)]


def longest_circular_run(hits):
    hits = np.asarray(hits, dtype=bool)
    if hits.all():
        return len(hits)
    if not hits.any():
        return 0
    # start right after a miss so no run wraps around the end
    shift = int(np.flatnonzero(~hits)[0]) + 1
    rolled = np.roll(hits, -shift)
    best = run = 0
    for h in rolled:
        run = run + 1 if h else 0
        best = max(best, run)
    return best


def exposed_faces(volume):
    """Count exposed voxel faces of a (frames, rows, cols) boolean volume.

    Returns (faces normal to the frame axis, faces normal to in-plane axes).
    """
    padded = np.pad(np.asarray(volume, dtype=np.int8), 1)
    axial = np.count_nonzero(np.diff(padded, axis=0))
    lateral = (np.count_nonzero(np.diff(padded, axis=1)) +
               np.count_nonzero(np.diff(padded, axis=2)))
    return axial, lateral
