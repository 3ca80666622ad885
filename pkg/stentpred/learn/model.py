"""
Regression model family and its file container

Models are stored as ``.npz`` archives holding a JSON header (format name,
version, kind, column names, schema fingerprint, configuration) next to the
fitted arrays. Archives are read with ``allow_pickle=False``.
"""

import dataclasses
import json

import numpy as np

from stentpred.learn import ModelError
from stentpred.learn.gpr import GPRConfig, GPRModel, fit_gpr
from stentpred.learn.linear import RIDGE, fit_linear, predict_linear
from stentpred.learn.tree import (MIN_LEAF, MAX_DEPTH, N_TREES, RegressionTree,
                                  BaggedTrees, fit_tree, fit_bagged)
from stentpred.util.misc import jsonable, make_rng


__all__ = ["KINDS", "ModelConfig", "RegressionModel", "fit_model", "predict",
           "save_model", "load_model"]


KINDS = ("linear", "gpr", "tree", "bagged")

FORMAT = "stentpred-model"
VERSION = 1


@dataclasses.dataclass(frozen=True)
class ModelConfig:
    kind: str = "gpr"
    ridge: float = RIDGE
    gpr_starts: int = 5
    gpr_noise_variance: float = None
    gpr_signal_variance: float = None
    gpr_length_scale: float = None
    gpr_max_search_rows: int = 600
    gpr_max_fit_rows: int = 2000
    min_leaf: int = MIN_LEAF
    max_depth: int = MAX_DEPTH
    n_trees: int = N_TREES

    def check(self):
        if self.kind not in KINDS:
            raise ModelError("unknown model kind '{}' (expected one of {})".format(
                self.kind, ", ".join(KINDS)))
        if self.ridge < 0:
            raise ModelError("ridge must be non-negative")
        if self.min_leaf < 1 or self.max_depth < 0 or self.n_trees < 1:
            raise ModelError("tree settings must be positive")
        self.gpr_config().check()

    def gpr_config(self):
        return GPRConfig(
            n_starts=self.gpr_starts,
            noise_variance=self.gpr_noise_variance,
            signal_variance=self.gpr_signal_variance,
            length_scale=self.gpr_length_scale,
            max_search_rows=self.gpr_max_search_rows,
            max_fit_rows=self.gpr_max_fit_rows)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


class _Linear:
    def __init__(self, weights, intercept):
        self.weights = np.asarray(weights, dtype=float)
        self.intercept = float(intercept)

    def predict(self, values):
        return predict_linear(self.weights, self.intercept, values)


class RegressionModel:
    """A fitted regressor bound to the schema it was trained on

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    estimator : object
        The fitted estimator; anything with ``predict(values)``.
    names : tuple of str
        Training columns, in order.
    fingerprint : str
        :meth:`FeatureSchema.fingerprint` of the training columns.
    training_rmse : float
    config : ModelConfig
    metadata : dict
        JSON-serializable data stored alongside the model.
    """
    def __init__(self, kind, estimator, names, fingerprint, training_rmse,
                 config, metadata=None):
        self.kind = kind
        self.estimator = estimator
        self.names = tuple(names)
        self.fingerprint = fingerprint
        self.training_rmse = float(training_rmse)
        self.config = config
        self.metadata = dict(metadata or {})

    def __repr__(self):
        return "RegressionModel('{}', {} columns, training_rmse={:.4g})".format(
            self.kind, len(self.names), self.training_rmse)

    def predict_values(self, values):
        predicted = np.asarray(self.estimator.predict(values), dtype=float)
        if not np.all(np.isfinite(predicted)):
            raise ModelError("non-finite prediction")
        return predicted


def fit_model(kind, X, config=None, seed=0):
    if config is None:
        config = ModelConfig(kind=kind)
    elif config.kind != kind:
        config = config.replace(kind=kind)
    config.check()
    values, target = X.values, X.target
    if not len(target):
        raise ModelError("no training rows")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(target))):
        raise ModelError("non-finite value in training data")
    if kind in ("tree", "bagged") and len(target) < max(5, config.min_leaf):
        raise ModelError("{} needs at least {} rows, got {}".format(
            kind, max(5, config.min_leaf), len(target)))

    if kind == "linear":
        estimator = _Linear(*fit_linear(values, target, config.ridge))
    elif kind == "gpr":
        estimator = fit_gpr(values, target, config.gpr_config(), make_rng(seed))
    elif kind == "tree":
        estimator = fit_tree(values, target, config.min_leaf, config.max_depth)
    else:
        estimator = fit_bagged(values, target, seed, config.n_trees,
                               config.min_leaf, config.max_depth)
    residual = estimator.predict(values) - target
    rmse = float(np.sqrt(np.mean(residual**2)))
    return RegressionModel(kind, estimator, X.names, X.schema.fingerprint(),
                           rmse, config)


def predict(model, X):
    """Predicted post-stent lumen area (mm^2) of every row of ``X``."""
    if X.schema.fingerprint() != model.fingerprint:
        raise ModelError("feature schema does not match the model's training "
                         "columns ({} vs {} columns)".format(
                             len(X.names), len(model.names)))
    return model.predict_values(X.values)


def _arrays(model):
    e = model.estimator
    if model.kind == "linear":
        return dict(weights=e.weights, intercept=np.array(e.intercept))
    if model.kind == "gpr":
        return dict(hyperparameters=np.array([e.signal_variance, e.length_scale,
                                              e.noise_variance, e.mean,
                                              e.log_likelihood]),
                    inputs=e.inputs, dual_weights=e.dual_weights)
    if model.kind == "tree":
        return e.to_arrays("tree_")
    arrays = dict(seeds=np.array(e.seeds, dtype=np.uint64))
    for i, tree in enumerate(e.trees):
        arrays.update(tree.to_arrays("tree{}_".format(i)))
    return arrays


def _estimator(kind, arrays, header):
    if kind == "linear":
        return _Linear(arrays["weights"], arrays["intercept"])
    if kind == "gpr":
        s, l, n, mean, lml = arrays["hyperparameters"].tolist()
        return GPRModel(s, l, n, mean, arrays["inputs"], arrays["dual_weights"], lml)
    if kind == "tree":
        return RegressionTree.from_arrays(arrays, "tree_")
    seeds = tuple(int(s) for s in arrays["seeds"])
    trees = tuple(RegressionTree.from_arrays(arrays, "tree{}_".format(i))
                  for i in range(len(seeds)))
    return BaggedTrees(trees, seeds)


def save_model(model, filename):
    header = dict(
        format=FORMAT,
        version=VERSION,
        kind=model.kind,
        names=list(model.names),
        fingerprint=model.fingerprint,
        training_rmse=model.training_rmse,
        config=model.config.to_dict(),
        metadata=jsonable(model.metadata))
    arrays = _arrays(model)
    arrays["header"] = np.array(json.dumps(header, sort_keys=True))
    with open(filename, "wb") as f:
        np.savez(f, **arrays)


def load_model(filename):
    try:
        with np.load(filename, allow_pickle=False) as archive:
            arrays = dict((k, archive[k]) for k in archive.files)
    except (OSError, ValueError) as e:
        raise ModelError("cannot read model file {}: {}".format(filename, e)) from e
    if "header" not in arrays:
        raise ModelError("{} is not a model file".format(filename))
    header = json.loads(str(arrays.pop("header")))
    if header.get("format") != FORMAT:
        raise ModelError("{} is not a model file".format(filename))
    if header.get("version") != VERSION:
        raise ModelError("model file version {} is not supported (expected {})".format(
            header.get("version"), VERSION))
    kind = header["kind"]
    config = ModelConfig(**header["config"])
    return RegressionModel(kind, _estimator(kind, arrays, header), header["names"],
                           header["fingerprint"], header["training_rmse"],
                           config, header.get("metadata"))
