import unittest

import numpy as np
from scipy import stats

from stentpred.features.stats import *


class SummarizeCase(unittest.TestCase):
    def test_small_sequences(self):
        cases = [
            ([1, 2, 3], dict(mean=2, median=2, sd=1, min=1, max=3,
                             skewness=0, kurtosis=1.5)),
            ([0, 0, 0, 1], dict(mean=0.25, median=0, skewness=2/np.sqrt(3))),
            ([1, 2, 3, 4], dict(median=2.5, kurtosis=1.64)),
            ([2, 2, 2, 2], dict(sd=0, skewness=0, kurtosis=0)),
            ([5], dict(mean=5, sd=0, skewness=0, kurtosis=0)),
        ]
        for values, expected in cases:
            s = summarize(values)
            for name, value in expected.items():
                with self.subTest(values=values, statistic=name):
                    self.assertAlmostEqual(getattr(s, name), value, places=12)

    def test_oracle(self):
        rng = np.random.default_rng(3)
        for i in range(100):
            values = rng.normal(size=int(rng.integers(2, 40)))*rng.uniform(0.1, 10)
            s = summarize(values)
            with self.subTest(i=i):
                self.assertAlmostEqual(s.sd, np.std(values, ddof=1), places=10)
                self.assertAlmostEqual(s.skewness, stats.skew(values), places=9)
                self.assertAlmostEqual(
                    s.kurtosis, stats.kurtosis(values, fisher=False), places=9)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            summarize([])
        with self.assertRaises(ValueError):
            summarize([1.0, float("nan")])

    def test_columns_match_sequences(self):
        window = np.random.default_rng(1).normal(size=(9, 4))
        window[:, 2] = 3.0
        table = summarize_columns(window)
        self.assertEqual(table.shape, (4, len(STATISTICS)))
        for j in range(4):
            with self.subTest(column=j):
                np.testing.assert_allclose(table[j], summarize(window[:, j]),
                                           rtol=1e-10, atol=1e-12)


class WindowCase(unittest.TestCase):
    def test_clamped_windows(self):
        values = np.arange(10.0)[:, None]
        out = summarize_windows(values, 2)
        self.assertEqual(out.shape, (10, 1, len(STATISTICS)))
        np.testing.assert_allclose(out[0, 0], summarize([0, 1, 2]))
        np.testing.assert_allclose(out[5, 0], summarize([3, 4, 5, 6, 7]))
        np.testing.assert_allclose(out[9, 0], summarize([7, 8, 9]))

    def test_zero_half_width(self):
        values = np.random.default_rng(0).normal(size=(6, 3))
        out = summarize_windows(values, 0)
        np.testing.assert_array_equal(out[:, :, 0], values)
        np.testing.assert_array_equal(out[:, :, 2], 0)

    def test_window_wider_than_sequence(self):
        values = np.random.default_rng(2).normal(size=(4, 2))
        out = summarize_windows(values, 15)
        for i in range(4):
            np.testing.assert_allclose(out[i], summarize_columns(values))
