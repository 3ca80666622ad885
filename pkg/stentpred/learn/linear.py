import numpy as np
from scipy import linalg

from stentpred.learn import ModelError


__all__ = ["RIDGE", "fit_linear", "predict_linear"]


RIDGE = 1e-8


def fit_linear(values, target, ridge=RIDGE):
    """Least squares with an intercept and a small ridge for conditioning.

    Solves the centered normal equations (Xc'Xc + ridge*I) w = Xc'yc, so the
    intercept is never penalized. Returns (weights, intercept).
    """
    values = np.asarray(values, dtype=float)
    target = np.asarray(target, dtype=float)
    if values.shape[0] < 2:
        raise ModelError("linear fit needs at least 2 rows")
    x_mean = values.mean(axis=0)
    y_mean = target.mean()
    xc = values - x_mean
    gram = xc.T @ xc + ridge*np.eye(values.shape[1])
    try:
        factor = linalg.cho_factor(gram)
    except linalg.LinAlgError as e:
        raise ModelError("design is singular beyond ridge {}".format(ridge)) from e
    weights = linalg.cho_solve(factor, xc.T @ (target - y_mean))
    if not np.all(np.isfinite(weights)):
        raise ModelError("design is singular beyond ridge {}".format(ridge))
    return weights, float(y_mean - x_mean @ weights)


def predict_linear(weights, intercept, values):
    return np.asarray(values, dtype=float) @ weights + intercept
