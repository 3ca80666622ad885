import dataclasses
import math
import unittest

import numpy as np
from skimage.morphology import convex_hull_image

from stentpred.data.pullback import LUMEN, CALCIFICATION
from stentpred.geom import tools
from stentpred.geom.frame import *
from stentpred.geom.lesion import *
from stentpred.test.support import (disc_mask, ellipse_mask, make_pullback,
                                    polar, wedge_mask)


def _blob(rng, size=64):
    """A chain of random discs, usually non-convex."""
    mask = np.zeros((size, size), dtype=np.uint8)
    cy, cx = rng.uniform(24, 40, 2)
    for _ in range(int(rng.integers(1, 4))):
        r = rng.uniform(4, 12)
        mask[disc_mask(size, r, center=(cy, cx)) == LUMEN] = LUMEN
        cy += rng.uniform(-r, r)
        cx += rng.uniform(-r, r)
        cy, cx = np.clip([cy, cx], 16, size - 17)
    return mask


class LumenFrameCase(unittest.TestCase):
    def test_disc(self):
        f = compute_lumen_frame_features(disc_mask(201, 50), 0.01, 1.0)
        self.assertAlmostEqual(f.area_mm2, math.pi*0.5**2,
                               delta=0.02*math.pi*0.5**2)
        self.assertLess(f.eccentricity, 0.05)
        self.assertGreaterEqual(f.circularity, 0.95)
        self.assertLessEqual(f.circularity, 1.10)
        self.assertAlmostEqual(f.major_axis_mm, 1.0, delta=0.02)
        self.assertGreater(f.solidity, 0.98)

    def test_ellipse(self):
        f = compute_lumen_frame_features(ellipse_mask(201, 40, 20), 0.01, 1.0)
        self.assertAlmostEqual(f.major_axis_mm/f.minor_axis_mm, 2.0, delta=0.06)
        self.assertAlmostEqual(f.eccentricity, math.sqrt(3)/2,
                               delta=0.03*math.sqrt(3)/2)

    def test_isoperimetric_ordering(self):
        disc = compute_lumen_frame_features(disc_mask(201, 50), 0.01, 1.0)
        ellipse = compute_lumen_frame_features(ellipse_mask(201, 40, 20), 0.01, 1.0)
        self.assertGreaterEqual(disc.circularity, ellipse.circularity)

    def test_reference_comparison(self):
        mask = disc_mask(101, 20)
        area = np.count_nonzero(mask)*0.01**2
        same = compute_lumen_frame_features(mask, 0.01, area)
        self.assertAlmostEqual(same.pct_area_stenosis, 0.0)
        self.assertFalse(same.below_ref_050 or same.below_ref_070 or same.below_ref_090)
        larger = compute_lumen_frame_features(mask, 0.01, area/0.8)
        self.assertAlmostEqual(larger.pct_area_stenosis, 20.0)
        self.assertEqual((larger.below_ref_050, larger.below_ref_070,
                          larger.below_ref_090), (False, False, True))

    def test_empty_lumen(self):
        with self.assertRaises(GeometryError) as cm:
            compute_lumen_frame_features(np.zeros((9, 9), np.uint8), 0.01, 1.0, 7)
        self.assertEqual(cm.exception.frame, 7)
        with self.assertRaises(GeometryError):
            compute_lumen_frame_features(disc_mask(9, 3), 0.01, 0.0)

    def test_pixel_counting_oracle(self):
        for seed in range(50):
            with self.subTest(seed=seed):
                mask = _blob(np.random.default_rng(seed))
                region = mask == LUMEN
                count = np.count_nonzero(region)
                rows, cols = np.nonzero(region)
                bbox = (np.ptp(rows) + 1)*(np.ptp(cols) + 1)
                hull = np.count_nonzero(convex_hull_image(region))
                f = compute_lumen_frame_features(mask, 0.03, 1.0)
                self.assertAlmostEqual(f.area_mm2/(count*0.03**2), 1.0, places=9)
                self.assertAlmostEqual(f.extent/(count/bbox), 1.0, places=9)
                self.assertAlmostEqual(f.solidity/(count/hull), 1.0, places=9)
                self.assertLessEqual(f.minor_axis_mm, f.major_axis_mm)

    def test_single_pixel(self):
        mask = np.zeros((9, 9), np.uint8)
        mask[4, 4] = LUMEN
        f = compute_lumen_frame_features(mask, 0.01, 1.0)
        self.assertAlmostEqual(f.major_axis_mm, 0.04/math.sqrt(12))
        self.assertAlmostEqual(f.minor_axis_mm, 0.04/math.sqrt(12))


class CalcFrameCase(unittest.TestCase):
    def test_absent(self):
        f = compute_calc_frame_features(disc_mask(41, 10), 0.01)
        self.assertFalse(f.present)
        self.assertEqual(f.max_arc_angle_deg, 0)
        self.assertEqual(f.area_mm2, 0)
        self.assertEqual(f.stretch_ratio, 1.0)

    def test_full_ring(self):
        mask = wedge_mask(size=101, lumen_radius=20, inner=25, outer=35,
                          arc_deg=360)
        self.assertEqual(compute_calc_frame_features(mask, 0.01).max_arc_angle_deg,
                         360)

    def test_wedge(self):
        f = compute_calc_frame_features(wedge_mask(), 0.01)
        self.assertTrue(f.present)
        self.assertAlmostEqual(f.max_arc_angle_deg, 90, delta=2)
        # digital circles leave about a pixel of slack in every radial length
        self.assertAlmostEqual(f.max_thickness_mm, 0.30, delta=0.015)
        self.assertAlmostEqual(f.max_depth_mm, 0.10, delta=0.015)
        self.assertGreaterEqual(f.stretch_ratio, 1.0)

    def test_arc_matches_pixel_histogram(self):
        for start, arc in ((0, 45), (30, 100), (200, 170), (300, 120)):
            with self.subTest(start=start, arc=arc):
                mask = wedge_mask(start_deg=start, arc_deg=arc)
                rr, theta = polar(mask.shape[0])
                bins = np.unique(np.floor(theta[mask == CALCIFICATION]).astype(int))
                f = compute_calc_frame_features(mask, 0.01)
                self.assertLessEqual(abs(f.max_arc_angle_deg - len(bins)), 1)

    def test_scale_equivariance(self):
        mask = wedge_mask(size=121, lumen_radius=20, inner=25, outer=45,
                          start_deg=15, arc_deg=130)
        a = compute_calc_frame_features(mask, 0.01)
        b = compute_calc_frame_features(mask, 0.02)
        for name in ("max_thickness_mm", "max_depth_mm", "major_axis_mm",
                     "minor_axis_mm", "perimeter_mm"):
            self.assertAlmostEqual(getattr(b, name), 2*getattr(a, name), places=12)
        self.assertAlmostEqual(b.area_mm2, 4*a.area_mm2, places=12)
        for name in ("max_arc_angle_deg", "extent", "eccentricity", "solidity",
                     "circularity", "stretch_ratio"):
            self.assertAlmostEqual(getattr(b, name), getattr(a, name), places=12)

    def test_rotation_invariance(self):
        mask = wedge_mask(size=121, lumen_radius=20, inner=25, outer=45,
                          start_deg=15, arc_deg=130)
        a = compute_calc_frame_features(mask, 0.01)
        b = compute_calc_frame_features(np.rot90(mask), 0.01)
        self.assertEqual(a.area_mm2, b.area_mm2)
        for field in dataclasses.fields(a):
            va, vb = getattr(a, field.name), getattr(b, field.name)
            with self.subTest(feature=field.name):
                # one ray sample of slack on top of the relative tolerance
                self.assertAlmostEqual(vb, va, delta=0.02*abs(va) + 0.0025)

    def test_union_and_largest_component(self):
        mask = wedge_mask(size=121, lumen_radius=20, inner=25, outer=45,
                          start_deg=0, arc_deg=60)
        second = wedge_mask(size=121, lumen_radius=20, inner=25, outer=30,
                            start_deg=180, arc_deg=20)
        mask[second == CALCIFICATION] = CALCIFICATION
        f = compute_calc_frame_features(mask, 0.01)
        self.assertAlmostEqual(f.area_mm2,
                               np.count_nonzero(mask == CALCIFICATION)*0.01**2)
        largest = compute_calc_frame_features(
            wedge_mask(size=121, lumen_radius=20, inner=25, outer=45,
                       start_deg=0, arc_deg=60), 0.01)
        self.assertAlmostEqual(f.major_axis_mm, largest.major_axis_mm)
        self.assertAlmostEqual(f.max_arc_angle_deg, largest.max_arc_angle_deg,
                               delta=1)


class ToolsCase(unittest.TestCase):
    def test_circular_run(self):
        self.assertEqual(tools.longest_circular_run([1, 1, 0, 0, 1, 1, 1]), 5)
        self.assertEqual(tools.longest_circular_run([0, 0]), 0)
        self.assertEqual(tools.longest_circular_run([1, 1, 1]), 3)

    def test_square_perimeter(self):
        region = np.zeros((12, 12), dtype=bool)
        region[2:10, 2:10] = True
        points, moves = tools.trace_boundary(region)
        self.assertEqual(len(moves), 28)
        self.assertEqual(len(points), 28)
        # 28 axis moves and 4 corners
        self.assertAlmostEqual(tools.chain_perimeter(moves), 28*0.980 - 4*0.091)

    def test_exposed_faces(self):
        volume = np.zeros((5, 6, 6), dtype=bool)
        volume[1:4, 1:3, 1:4] = True
        axial, lateral = tools.exposed_faces(volume)
        self.assertEqual(axial, 2*2*3)
        self.assertEqual(lateral, 3*(2*2 + 2*3))


def _calc_stack(n, calc_frames, size=21):
    """Lumen disc in every frame, a calcified block in ``calc_frames``."""
    frames = np.stack([disc_mask(size, 4)]*n)
    for i in calc_frames:
        frames[i, 1:4, 1:4] = CALCIFICATION
    return make_pullback(frames, lesion=(0, n - 1))


class LesionCase(unittest.TestCase):
    def test_disc_stack(self):
        mask = disc_mask(41, 12)
        area = np.count_nonzero(mask)*0.01**2
        f = compute_lumen_lesion_features(make_pullback([mask]*10, lesion=(0, 9)))
        self.assertAlmostEqual(f.volume_mm3, 2*area)
        self.assertAlmostEqual(f.equivalent_diameter_mm,
                               (6*2*area/math.pi)**(1/3))
        self.assertAlmostEqual(f.solidity, 1.0, delta=0.02)

    def test_single_voxel(self):
        mask = np.zeros((9, 9), np.uint8)
        mask[4, 4] = LUMEN
        f = compute_lumen_lesion_features(make_pullback([mask], lesion=(0, 0)))
        self.assertAlmostEqual(f.volume_mm3, 2e-5)
        self.assertEqual(f.extent, 1.0)

    def test_box_surface(self):
        mask = np.zeros((16, 16), np.uint8)
        mask[3:13, 3:13] = LUMEN
        pb = make_pullback([mask]*5, lesion=(0, 4), spacing=0.02, pitch=0.1)
        f = compute_lumen_lesion_features(pb)
        self.assertAlmostEqual(f.surface_area_mm2, 200*0.02**2 + 200*0.02*0.1)
        self.assertAlmostEqual(f.extent, 1.0)
        self.assertAlmostEqual(f.solidity, 1.0)

    def test_empty_lumen(self):
        frames = np.stack([disc_mask(21, 4)]*4)
        frames[2] = 0
        with self.assertRaises(GeometryError) as cm:
            compute_lumen_lesion_features(make_pullback(frames, lesion=(0, 3)))
        self.assertEqual(cm.exception.frame, 2)

    def test_no_calcification(self):
        f = compute_calc_lesion_features(_calc_stack(8, []))
        self.assertEqual(f, CalcLesionFeatures())
        self.assertEqual(f.values(), [0.0]*9)

    def test_deposit_length(self):
        f = compute_calc_lesion_features(_calc_stack(50, range(10, 20)))
        self.assertAlmostEqual(f.length_mm, 2.0)
        self.assertAlmostEqual(f.calc_pct, 20.0)
        self.assertEqual(f.num_deposits, 1)
        self.assertAlmostEqual(f.volume_mm3, 90*0.01**2*0.2)
        self.assertAlmostEqual(f.volume_index_mm3_per_mm, f.volume_mm3/10.0)

    def test_separate_deposits(self):
        f = compute_calc_lesion_features(_calc_stack(20, [2, 3, 4, 5, 8, 9]))
        self.assertEqual(f.num_deposits, 2)
        self.assertAlmostEqual(f.length_mm, 4*0.2)
        self.assertAlmostEqual(f.calc_pct, 30.0)
        longest = compute_calc_lesion_features(_calc_stack(20, [2, 3, 4, 5]))
        for name in ("equivalent_diameter_mm", "extent", "convex_volume_mm3",
                     "solidity"):
            with self.subTest(name=name):
                self.assertEqual(getattr(f, name), getattr(longest, name))
        self.assertAlmostEqual(f.volume_mm3, 1.5*longest.volume_mm3)
        self.assertGreater(f.surface_area_mm2, longest.surface_area_mm2)

    def test_only_lesion_frames_count(self):
        frames = _calc_stack(10, [0, 5]).frames
        f = compute_calc_lesion_features(make_pullback(frames, lesion=(2, 7)))
        self.assertAlmostEqual(f.calc_pct, 100/6)
        self.assertEqual(f.num_deposits, 1)
