import unittest

import numpy as np

from stentpred.data.pullback import LUMEN, CALCIFICATION, POST, PullbackError
from stentpred.data.registration import *
from stentpred.test.support import disc_mask, make_pullback, wedge_mask


def _post(n=10, size=41):
    frames = [disc_mask(size, 6 + (i % 4)) for i in range(n)]
    return make_pullback(frames, lesion=(0, n - 1), phase=POST,
                         stent=(4, 6))


class AlignCase(unittest.TestCase):
    def test_identity(self):
        post = _post()
        aligned = align_post_to_pre(post, RegistrationTransform())
        self.assertEqual(aligned, post)

    def test_shift(self):
        post = _post()
        aligned = align_post_to_pre(post, RegistrationTransform(3, 0))
        self.assertEqual(aligned.frame_count, 7)
        np.testing.assert_array_equal(aligned.frames[0], post.frames[3])
        self.assertEqual((aligned.meta.stent_start_frame,
                          aligned.meta.stent_end_frame), (1, 3))

    def test_negative_shift_pads(self):
        post = _post()
        aligned = align_post_to_pre(post, RegistrationTransform(-2, 0))
        self.assertEqual(aligned.frame_count, 10)
        self.assertFalse(aligned.frames[:2].any())
        np.testing.assert_array_equal(aligned.frames[2], post.frames[0])
        self.assertEqual(aligned.meta.stent_start_frame, 6)

    def test_shift_composition(self):
        post = _post()
        for a, b in ((1, 2), (3, 0), (2, 4)):
            with self.subTest(a=a, b=b):
                twice = align_post_to_pre(
                    align_post_to_pre(post, RegistrationTransform(a, 0)),
                    RegistrationTransform(b, 0))
                once = align_post_to_pre(post, RegistrationTransform(a + b, 0))
                np.testing.assert_array_equal(twice.frames, once.frames)

    def test_offset_too_large(self):
        with self.assertRaises(PullbackError):
            align_post_to_pre(_post(), RegistrationTransform(10, 0))

    def test_rotation_convention(self):
        mask = np.zeros((21, 21), dtype=np.uint8)
        mask[10, 20] = LUMEN
        rotated = rotate_mask(mask, 90)
        self.assertEqual(rotated[20, 10], LUMEN)
        self.assertEqual(np.count_nonzero(rotated), 1)

    def test_rotation_round_trip(self):
        mask = wedge_mask(size=121, lumen_radius=20, inner=25, outer=45,
                          start_deg=10, arc_deg=120)
        for r in (30.0, 45.0, 137.0):
            with self.subTest(rotation=r):
                back = rotate_mask(rotate_mask(mask, r), (360 - r) % 360)
                for label in (LUMEN, CALCIFICATION):
                    before = np.count_nonzero(mask == label)
                    after = np.count_nonzero(back == label)
                    self.assertLessEqual(abs(after - before), 0.02*before)

    def test_inverse(self):
        t = RegistrationTransform(3, 30)
        self.assertEqual(t.inverse(), RegistrationTransform(-3, 330))
