import os
import tempfile
import unittest

import numpy as np

from stentpred.data.pullback import *
from stentpred.data.pullback import META_FILENAME, frame_filename
from stentpred.test.support import disc_mask, disc_pullback, make_pullback


class MetaCase(unittest.TestCase):
    def test_text_round_trip(self):
        meta = disc_pullback([8, 6, 8], phenotype="sheet").meta
        self.assertEqual(PullbackMeta.from_text(meta.to_text()), meta)

    def test_optional_fields_default(self):
        text = ("pullback_id=A\nphase=pre\nframe_count=4\npixel_spacing_mm=0.01\n"
                "lesion_start_frame=1\nlesion_end_frame=2\npatient_id=P1\n")
        meta = PullbackMeta.from_text(text)
        self.assertEqual(meta.frame_pitch_mm, 0.2)
        self.assertIsNone(meta.stent_start_frame)
        self.assertIsNone(meta.phenotype)

    def test_errors_name_the_field(self):
        meta = disc_pullback([8, 6, 8]).meta
        cases = [
            (meta.to_text().replace("frame_count=3", "frame_count=x"), "frame_count"),
            (meta.to_text().replace("patient_id=P0001\n", ""), "patient_id"),
            (meta.to_text() + "colour=red\n", META_FILENAME),
            (meta.to_text().replace("phase=pre", "phase=post"), "stent_start_frame"),
        ]
        for text, field in cases:
            with self.subTest(field=field):
                with self.assertRaises(PullbackError) as cm:
                    PullbackMeta.from_text(text)
                self.assertEqual(cm.exception.field, field)

    def test_lesion_bounds(self):
        with self.assertRaises(PullbackError):
            disc_pullback([8, 6, 8], lesion=(1, 3))


class PullbackCase(unittest.TestCase):
    def test_frames_are_read_only(self):
        pb = disc_pullback([8, 6, 8])
        with self.assertRaises(ValueError):
            pb.frames[0, 0, 0] = 1

    def test_rejects_unknown_labels(self):
        frames = np.stack([disc_mask(21, 5)]*3)
        frames[1, 0, 0] = 7
        with self.assertRaises(PullbackError) as cm:
            make_pullback(frames)
        self.assertEqual(cm.exception.frame, 1)

    def test_lumen_areas(self):
        pb = disc_pullback([8, 6, 8], spacing=0.02)
        counts = [np.count_nonzero(disc_mask(41, r)) for r in (8, 6, 8)]
        np.testing.assert_allclose(pb.lumen_areas_mm2(), np.array(counts)*0.02**2)

    def test_save_load_identical(self):
        pb = disc_pullback([8, 6, 5, 8], phenotype="nodule",
                           stent=(1, 2))
        with tempfile.TemporaryDirectory() as d:
            save_pullback(pb, d)
            self.assertEqual(load_pullback(d), pb)

    def test_missing_frame(self):
        pb = disc_pullback([8, 6, 8])
        with tempfile.TemporaryDirectory() as d:
            save_pullback(pb, d)
            os.remove(os.path.join(d, frame_filename(2)))
            with self.assertRaises(PullbackError) as cm:
                load_pullback(d)
            self.assertEqual(cm.exception.frame, 2)

    def test_empty_lesion_lumen(self):
        frames = np.stack([disc_mask(21, 5)]*3)
        frames[1] = 0
        pb = make_pullback(frames)
        with tempfile.TemporaryDirectory() as d:
            save_pullback(pb, d)
            with self.assertRaises(PullbackError) as cm:
                load_pullback(d)
            self.assertEqual(cm.exception.frame, 1)

    def test_pgm_header_comment(self):
        labels = disc_mask(9, 3)
        with tempfile.TemporaryDirectory() as d:
            filename = os.path.join(d, "mask.pgm")
            with open(filename, "wb") as f:
                f.write(b"P5\n# written by hand\n9 9\n255\n" + labels.tobytes())
            np.testing.assert_array_equal(read_pgm(filename), labels)

    def test_pgm_truncated(self):
        with tempfile.TemporaryDirectory() as d:
            filename = os.path.join(d, "mask.pgm")
            with open(filename, "wb") as f:
                f.write(b"P5\n9 9\n255\n" + bytes(10))
            with self.assertRaises(PullbackError):
                read_pgm(filename)


class PairCase(unittest.TestCase):
    def setUp(self):
        self.pre = disc_pullback([8, 6, 8])
        self.post = disc_pullback([8, 8, 8], phase=POST, stent=(1, 1),
                                  pullback_id="PB0001-post")

    def test_matched(self):
        self.assertEqual(validate_pair(self.pre, self.post), [])

    def test_post_without_stent(self):
        post = disc_pullback([8, 8, 8], phase=POST)
        self.assertEqual(len(validate_pair(self.pre, post)), 1)

    def test_spacing_mismatch(self):
        post = disc_pullback([8, 8, 8], phase=POST, stent=(1, 1), spacing=0.02)
        report = validate_pair(self.pre, post)
        self.assertEqual(len(report), 1)
        self.assertIn("pixel_spacing_mm", report[0])
