import csv
import io
import os
import tempfile
import unittest

import numpy as np

from stentpred.evaluate.report import *
from stentpred.evaluate.report import _format_auc
from stentpred.evaluate.runner import ExperimentConfig, run_experiment
from stentpred.expansion import ReferencePair, compute_sei_curve
from stentpred.test.support import DatasetCase


CONFIG = ExperimentConfig(mode="frame", feature_group="cle", model_kind="linear",
                          seed=4, k_folds=3)


class ReportCase(DatasetCase, unittest.TestCase):
    def setUp(self):
        DatasetCase.setUp(self)
        self.report = run_experiment(CONFIG, self.records)

    def _write(self, out_dir, plots=True):
        write_report(self.report, out_dir, plots)
        contents = dict()
        for name in sorted(os.listdir(out_dir)):
            with open(os.path.join(out_dir, name), "rb") as f:
                contents[name] = f.read()
        return contents

    def test_files(self):
        with tempfile.TemporaryDirectory() as d:
            contents = self._write(d)
        expected = ["lesions.csv", "report.json"] + [n + ".svg" for n in FIGURES]
        self.assertEqual(sorted(contents), sorted(expected))
        lines = contents["lesions.csv"].decode().splitlines()
        self.assertEqual(len(lines), len(self.records) + 1)
        self.assertTrue(lines[0].startswith("lesion_id,patient_id,phenotype,split"))
        self.assertNotIn(b"\r\n", contents["report.json"])
        for name in FIGURES:
            self.assertTrue(contents[name + ".svg"].lstrip().startswith(b"<?xml"))

    def test_reproducible(self):
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            self.assertEqual(self._write(a), self._write(b))

    def test_without_plots(self):
        with tempfile.TemporaryDirectory() as d:
            contents = self._write(os.path.join(d, "report"), plots=False)
        self.assertEqual(sorted(contents), ["lesions.csv", "report.json"])

    def test_lesion_table(self):
        table = lesion_table(self.report.data).splitlines()
        for line, lesion in zip(table[1:], self.report["lesions"]):
            cells = line.split(",")
            self.assertEqual(cells[0], lesion["lesion_id"])
            self.assertEqual(float(cells[5]), lesion["actual_msei"])

    def test_quoted_lesion_table(self):
        lesion = dict(lesion_id='L,"1"', patient_id="P1", phenotype=None,
                      split="train", fold=0, actual_msei=75.5, predicted_msei=80.0,
                      actual_label="under_expanded", predicted_label=None,
                      fujino_points=2)
        rows = list(csv.reader(io.StringIO(lesion_table(dict(lesions=[lesion])))))
        self.assertEqual(rows[1], ['L,"1"', "P1", "", "train", "0", "75.5", "80.0",
                                   "under_expanded", "", "2"])


class FigureCase(unittest.TestCase):
    def test_sei_curve(self):
        expansion = compute_sei_curve(np.array([6.0, 5.0, 7.0]),
                                     ReferencePair(8.0, 8.0, 9, 14), first_frame=10)
        with tempfile.TemporaryDirectory() as d:
            filename = os.path.join(d, "sei.svg")
            plot_sei_curve(expansion, filename, 80.0, "L0001")
            self.assertGreater(os.path.getsize(filename), 0)

    def test_format_auc(self):
        self.assertEqual(_format_auc(float("nan")), "n/a")
        self.assertEqual(_format_auc(None), "n/a")
        self.assertEqual(_format_auc(0.8125), "0.812")
