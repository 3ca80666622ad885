"""
LASSO by cyclic coordinate descent

Minimizes (1/2n)||y - Z b||^2 + lambda*||b||_1 over the standardized design
Z (columns centered, unit population variance) and a centered target, then
maps the coefficients back to the original column scale. The regularization
path is traced warm-started from the largest lambda; the final lambda is the
grouped cross-validation minimum of the mean squared error.
"""

import dataclasses
import logging

import numpy as np

from stentpred.evaluate.split import split_grouped_kfold
from stentpred.learn import ModelError


__all__ = ["LassoModel", "lambda_max", "make_lambda_grid", "lasso_path",
           "fit_lasso", "rank_features"]


logger = logging.getLogger(__name__)

TOLERANCE = 1e-7
MAX_SWEEPS = 10000
CV_FOLDS = 5


@dataclasses.dataclass(frozen=True, eq=False)
class LassoModel:
    """Sparse linear model at the selected lambda

    ``path`` holds one ``(lambda, active column names)`` pair per grid value
    in decreasing lambda order. ``cv_mse`` is the cross-validated error per
    grid value, or None when no cross-validation was run.
    """
    lambda_: float
    names: tuple
    coefficients: np.ndarray
    intercept: float
    path: tuple
    cv_mse: np.ndarray = None
    warnings: tuple = ()

    @property
    def active_set(self):
        return [n for n, c in zip(self.names, self.coefficients) if c != 0]

    def predict(self, values):
        return np.asarray(values, dtype=float) @ self.coefficients + self.intercept


def soft_threshold(x, t):
    return np.sign(x)*max(abs(x) - t, 0.0)


class _Standardized:
    def __init__(self, values, target):
        values = np.asarray(values, dtype=float)
        target = np.asarray(target, dtype=float)
        if values.ndim != 2 or values.shape[0] < 2:
            raise ModelError("LASSO needs at least 2 rows")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(target))):
            raise ModelError("non-finite value in LASSO input")
        self.n = values.shape[0]
        self.x_mean = values.mean(axis=0)
        self.x_scale = values.std(axis=0)
        self.live = self.x_scale > 0
        scale = np.where(self.live, self.x_scale, 1.0)
        z = (values - self.x_mean)/scale
        z[:, ~self.live] = 0.0
        self.y_mean = target.mean()
        yc = target - self.y_mean
        self.gram = z.T @ z/self.n
        self.corr = z.T @ yc/self.n

    def lambda_max(self):
        return float(np.max(np.abs(self.corr))) if len(self.corr) else 0.0

    def descend(self, lam, beta):
        """Coordinate descent from ``beta`` (modified in place)."""
        gram, corr = self.gram, self.corr
        live = np.flatnonzero(self.live)
        for _ in range(MAX_SWEEPS):
            change = 0.0
            for j in live:
                old = beta[j]
                rho = corr[j] - gram[j] @ beta + gram[j, j]*old
                new = soft_threshold(rho, lam)/gram[j, j]
                if new != old:
                    beta[j] = new
                    change = max(change, abs(new - old))
            if change < TOLERANCE:
                return beta
        logger.warning("coordinate descent stopped after %d sweeps at lambda %g",
                       MAX_SWEEPS, lam)
        return beta

    def unstandardize(self, beta):
        scale = np.where(self.live, self.x_scale, 1.0)
        coefficients = np.where(self.live, beta/scale, 0.0)
        return coefficients, float(self.y_mean - self.x_mean @ coefficients)


def lambda_max(values, target):
    """Smallest lambda for which every coefficient is zero."""
    return _Standardized(values, target).lambda_max()


def make_lambda_grid(values, target, count=50, ratio=1e-3):
    top = lambda_max(values, target)
    if top == 0:
        return np.array([0.0])
    return np.geomspace(top, top*ratio, count)


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float).ravel()
    if not len(grid):
        raise ModelError("empty lambda grid")
    if np.any(grid < 0) or not np.all(np.isfinite(grid)):
        raise ModelError("lambda grid must hold finite non-negative values")
    if np.any(np.diff(grid) > 0):
        raise ModelError("lambda grid must be decreasing")
    return grid


def lasso_path(values, target, grid):
    """Coefficients (original scale) and intercepts along ``grid``."""
    grid = _check_grid(grid)
    problem = _Standardized(values, target)
    beta = np.zeros(problem.gram.shape[0])
    coefficients, intercepts = [], []
    for lam in grid:
        problem.descend(lam, beta)
        c, b = problem.unstandardize(beta)
        coefficients.append(c)
        intercepts.append(b)
    return np.array(coefficients), np.array(intercepts)


def _cv_mse(values, target, group_id, grid, seed):
    patients = len(set(group_id))
    k = min(CV_FOLDS, patients)
    folds = split_grouped_kfold(group_id, k, seed).fold
    mse = np.zeros(len(grid))
    for fold in range(k):
        train, test = folds != fold, folds == fold
        coefficients, intercepts = lasso_path(values[train], target[train], grid)
        predicted = values[test] @ coefficients.T + intercepts
        mse += np.mean((predicted - target[test, None])**2, axis=0)
    return mse/k


def fit_lasso(X, lambda_grid=None, seed=0):
    """Fit the LASSO path on a feature matrix and select lambda.

    With a single grid value no cross-validation is run. With fewer than two
    patients the smallest lambda is kept and a warning recorded.
    """
    values, target = X.values, X.target
    if lambda_grid is None:
        lambda_grid = make_lambda_grid(values, target)
    grid = _check_grid(lambda_grid)
    coefficients, intercepts = lasso_path(values, target, grid)
    path = tuple((float(lam), tuple(n for n, c in zip(X.names, coef) if c != 0))
                 for lam, coef in zip(grid, coefficients))

    warnings = []
    cv_mse = None
    if len(grid) == 1:
        best = 0
    elif len(set(X.group_id)) < 2:
        best = len(grid) - 1
        msg = "fewer than 2 patients, no cross-validation; using lambda {}".format(
            grid[best])
        logger.warning(msg)
        warnings.append(msg)
    else:
        cv_mse = _cv_mse(values, target, X.group_id, grid, seed)
        # first minimum: ties go to the larger lambda
        best = int(np.argmin(cv_mse))
    logger.debug("LASSO lambda %g, %d active columns", grid[best],
                 np.count_nonzero(coefficients[best]))
    return LassoModel(
        lambda_=float(grid[best]),
        names=tuple(X.names),
        coefficients=coefficients[best],
        intercept=float(intercepts[best]),
        path=path,
        cv_mse=cv_mse,
        warnings=tuple(warnings))


def rank_features(model):
    """Every column, ranked by order of entry along decreasing lambda.

    Columns entering at the same lambda are ordered by their absolute
    coefficient at the selected lambda, then by name. Columns never active
    on the path follow in column order.
    """
    entry = dict()
    for position, (_, active) in enumerate(model.path):
        for name in active:
            entry.setdefault(name, position)
    magnitude = dict(zip(model.names, np.abs(model.coefficients)))
    ranked = sorted(entry, key=lambda n: (entry[n], -magnitude[n], n))
    return ranked + [n for n in model.names if n not in entry]
