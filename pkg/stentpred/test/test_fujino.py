import csv
import io
import unittest

import numpy as np

from stentpred.baseline.fujino import *
from stentpred.baseline.fujino import ML_COLUMNS
from stentpred.expansion import ReferencePair
from stentpred.features.assemble import LesionRecord, LesionTargets
from stentpred.features.schema import CALC_2D
from stentpred.geom.lesion import CalcLesionFeatures


def _record(angles, thicknesses, length, targets=None, lesion_id="L1"):
    calc = np.zeros((len(angles), len(CALC_2D)))
    calc[:, CALC_2D.index("calc_arc_angle")] = angles
    calc[:, CALC_2D.index("calc_thickness")] = thicknesses
    return LesionRecord(
        lesion_id=lesion_id, patient_id="P1", phenotype=None,
        frames=np.arange(3, 3 + len(angles)), lumen2d=None, calc2d=calc,
        lumen3d=None, calc3d=CalcLesionFeatures(length_mm=length),
        reference=ReferencePair(5.0, 5.0, 9, 0), targets=targets)


class ScoreCase(unittest.TestCase):
    def test_points(self):
        cases = [
            ((200.0, 0.6, 6.0), 4, True),
            ((180.0, 0.5, 5.0), 0, False),
            ((181.0, 0.0, 0.0), 2, False),
            ((90.0, 0.51, 5.1), 2, False),
            ((270.0, 0.2, 7.0), 3, False),
        ]
        for inputs, points, high_risk in cases:
            with self.subTest(inputs=inputs):
                score = fujino_score(*inputs)
                self.assertEqual(score.points, points)
                self.assertEqual(score.high_risk, high_risk)

    def test_custom_config(self):
        config = FujinoConfig(angle_threshold_deg=90.0, high_risk_points=2)
        self.assertTrue(fujino_score(100.0, 0.0, 0.0, config).high_risk)

    def test_negative_input(self):
        with self.assertRaises(BaselineError):
            fujino_score(-1.0, 0.0, 0.0)
        with self.assertRaises(BaselineError):
            FujinoConfig(length_points=-1).check()


class TableCase(unittest.TestCase):
    def setUp(self):
        targets = LesionTargets({4: 3.0, 5: 2.0},
                                reference=ReferencePair(4.0, 4.0, 7, 2))
        self.records = [_record([120.0, 200.0], [0.3, 0.6], 6.0, targets),
                        _record([0.0, 0.0], [0.0, 0.0], 0.0, lesion_id="L2")]

    def test_inputs(self):
        self.assertEqual(lesion_score_inputs(self.records[0]), (200.0, 0.6, 6.0))

    def test_table(self):
        lines = score_table(self.records).splitlines()
        self.assertEqual(len(lines), 3)
        self.assertEqual(lines[1], "L1,P1,200.0,0.6,6.0,4,1,50.0,under_expanded")
        self.assertEqual(lines[2], "L2,P1,0.0,0.0,0.0,0,0,,")

    def test_quoted_ids(self):
        record = _record([0.0], [0.0], 0.0, lesion_id='L,"3"')
        text = score_table([record])
        self.assertEqual(text.splitlines()[1], '"L,""3""",P1,0.0,0.0,0.0,0,0,,')
        self.assertEqual(next(csv.reader(io.StringIO(text.splitlines()[1])))[0],
                         'L,"3"')

    def test_ml_features(self):
        X = fujino_ml_features(self.records)
        self.assertEqual(X.names, ML_COLUMNS)
        np.testing.assert_array_equal(X.values, [[200.0, 0.6, 6.0], [0.0, 0.0, 0.0]])
        self.assertEqual(X.target[0], 2.0)
        self.assertTrue(np.isnan(X.target[1]))
        np.testing.assert_array_equal(X.frame_index, [5, -1])
