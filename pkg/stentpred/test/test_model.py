import json
import os
import tempfile
import unittest

import numpy as np

from stentpred.features.assemble import FeatureMatrix
from stentpred.learn import ModelError
from stentpred.learn.model import *


def _matrix(n=30, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    y = 5 + x[:, 0] - 0.5*x[:, 2] + 0.1*rng.normal(size=n)
    return FeatureMatrix.from_arrays(["a", "b", "c"], x, y,
                                     ["P{}".format(i % 6) for i in range(n)],
                                     ["L{}".format(i) for i in range(n)], np.zeros(n))


FAST = ModelConfig(gpr_starts=1, n_trees=5)


class ModelCase(unittest.TestCase):
    def test_save_load(self):
        X = _matrix()
        for kind in KINDS:
            with self.subTest(kind=kind), tempfile.TemporaryDirectory() as d:
                model = fit_model(kind, X, FAST, seed=1)
                model.metadata["lesions"] = ["L1", "L2"]
                filename = os.path.join(d, "model.npz")
                save_model(model, filename)
                loaded = load_model(filename)
                self.assertEqual(loaded.kind, kind)
                self.assertEqual(loaded.names, ("a", "b", "c"))
                self.assertEqual(loaded.training_rmse, model.training_rmse)
                self.assertEqual(loaded.config, model.config)
                self.assertEqual(loaded.metadata, dict(lesions=["L1", "L2"]))
                np.testing.assert_array_equal(predict(loaded, X), predict(model, X))

    def test_linear_fit(self):
        X = _matrix(200)
        model = fit_model("linear", X)
        self.assertLess(model.training_rmse, 0.15)
        np.testing.assert_allclose(model.estimator.weights, [1, 0, -0.5], atol=0.05)

    def test_schema_mismatch(self):
        X = _matrix()
        model = fit_model("linear", X)
        with self.assertRaises(ModelError):
            predict(model, X.select(["a", "c"]))
        with self.assertRaises(ModelError):
            predict(model, X.select(["c", "b", "a"]))

    def test_invalid_fits(self):
        X = _matrix()
        with self.assertRaises(ModelError):
            fit_model("svr", X)
        with self.assertRaises(ModelError):
            fit_model("tree", X.take(np.arange(4)))
        with self.assertRaises(ModelError):
            fit_model("linear", X.take(np.arange(0)))

    def test_bad_files(self):
        with tempfile.TemporaryDirectory() as d:
            garbage = os.path.join(d, "garbage.npz")
            with open(garbage, "wb") as f:
                f.write(b"not a model")
            foreign = os.path.join(d, "foreign.npz")
            np.savez(foreign, weights=np.zeros(3))
            future = os.path.join(d, "future.npz")
            header = dict(format="stentpred-model", version=99, kind="linear")
            np.savez(future, header=np.array(json.dumps(header)))
            for filename in (garbage, foreign, future, os.path.join(d, "missing.npz")):
                with self.subTest(filename=os.path.basename(filename)):
                    with self.assertRaises(ModelError):
                        load_model(filename)
