import unittest

import numpy as np

from stentpred.learn import ModelError
from stentpred.learn.gpr import *


def _pinned(**kwargs):
    return GPRConfig(signal_variance=1.0, length_scale=0.5, noise_variance=1e-8,
                     **kwargs)


class GPRCase(unittest.TestCase):
    def setUp(self):
        self.x = np.arange(8.0)[:, None]
        self.y = np.array([1.0, 3.0, 2.0, 5.0, 4.0, 4.5, 2.0, 1.0])

    def test_interpolates_with_pinned_hyperparameters(self):
        model = fit_gpr(self.x, self.y, _pinned())
        np.testing.assert_allclose((model.signal_variance, model.length_scale,
                                    model.noise_variance), (1.0, 0.5, 1e-8),
                                   rtol=1e-12)
        np.testing.assert_allclose(model.predict(self.x), self.y, atol=1e-6)

    def test_reverts_to_mean_far_away(self):
        model = fit_gpr(self.x, self.y, _pinned())
        self.assertAlmostEqual(model.predict([[1e6]])[0], self.y.mean(), delta=1e-3)

    def test_more_starts_never_worse(self):
        for seed in range(20):
            with self.subTest(seed=seed):
                rng = np.random.default_rng(100 + seed)
                x = rng.uniform(0, 5, size=(15, 2))
                y = np.sin(x[:, 0]) + 0.1*rng.normal(size=15)
                few = fit_gpr(x, y, GPRConfig(n_starts=2), np.random.default_rng(seed))
                many = fit_gpr(x, y, GPRConfig(n_starts=5), np.random.default_rng(seed))
                self.assertGreaterEqual(many.log_likelihood, few.log_likelihood)
                self.assertEqual(len(many.starts), 5)

    def test_smooth_function(self):
        x = np.linspace(0, 2*np.pi, 30)[:, None]
        model = fit_gpr(x, np.sin(x[:, 0]), GPRConfig(), np.random.default_rng(0))
        mid = (x[1:] + x[:-1])/2
        np.testing.assert_allclose(model.predict(mid), np.sin(mid[:, 0]), atol=0.05)

    def test_gradient(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(12, 2))
        r = rng.normal(size=12)
        sqdist = ((x[:, None, :] - x[None, :, :])**2).sum(axis=-1)
        theta = np.log([0.7, 1.3, 0.05])
        _, grad = log_marginal_likelihood(sqdist, r, *np.exp(theta), gradient=True)
        for i in range(3):
            step = np.zeros(3)
            step[i] = 1e-6
            up = log_marginal_likelihood(sqdist, r, *np.exp(theta + step))
            down = log_marginal_likelihood(sqdist, r, *np.exp(theta - step))
            with self.subTest(parameter=i):
                self.assertAlmostEqual(grad[i], (up - down)/2e-6, delta=1e-5)

    def test_row_cap(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(50, 1))
        model = fit_gpr(x, x[:, 0], GPRConfig(n_starts=1, max_search_rows=10,
                                              max_fit_rows=20), rng)
        self.assertEqual(len(model.inputs), 20)

    def test_invalid(self):
        for config in (GPRConfig(n_starts=0), GPRConfig(noise_variance=0.0),
                       GPRConfig(length_scale=-1.0), GPRConfig(max_fit_rows=1)):
            with self.subTest(config=config):
                with self.assertRaises(ModelError):
                    fit_gpr(self.x, self.y, config)
        with self.assertRaises(ModelError):
            fit_gpr(self.x[:1], self.y[:1])
        with self.assertRaises(ModelError):
            fit_gpr(self.x, np.r_[self.y[:-1], np.nan])


class RowOrderCase(unittest.TestCase):
    def _compare(self, n, config):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 3, size=(n, 2))
        y = np.sin(x[:, 0]) + x[:, 1] + 0.1*rng.normal(size=n)
        query = rng.uniform(0, 3, size=(50, 2))
        order = rng.permutation(n)
        a = fit_gpr(x, y, config, np.random.default_rng(5))
        b = fit_gpr(x[order], y[order], config, np.random.default_rng(5))
        self.assertLess(np.max(np.abs(a.predict(query) - b.predict(query))), 1e-9)
        self.assertAlmostEqual(a.length_scale, b.length_scale, delta=1e-9)

    def test_capped_rows(self):
        self._compare(120, GPRConfig(n_starts=2, max_search_rows=40, max_fit_rows=90))

    def test_beyond_default_search_cap(self):
        self._compare(650, GPRConfig(n_starts=1, max_iterations=25))

    def test_subset_follows_contents(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(60, 1))
        y = x[:, 0]**2
        config = GPRConfig(n_starts=1, max_search_rows=10, max_fit_rows=20)
        a = fit_gpr(x, y, config)
        order = rng.permutation(60)
        b = fit_gpr(x[order], y[order], config)
        np.testing.assert_array_equal(a.inputs, b.inputs)
