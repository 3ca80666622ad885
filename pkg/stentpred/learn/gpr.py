"""
Gaussian process regression

Constant mean (the training target mean) and an isotropic squared
exponential kernel

    k(x, x') = s * exp(-|x - x'|^2 / (2 l^2)) + n * [x == x']

Hyperparameters (s, l, n) maximize the log marginal likelihood by bounded
L-BFGS-B over their logarithms, from several seeded starting points.
"""

import dataclasses
import hashlib
import logging
import math

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import cdist, pdist

from stentpred.learn import ModelError


__all__ = ["GPRConfig", "GPRModel", "fit_gpr", "log_marginal_likelihood"]


logger = logging.getLogger(__name__)

JITTERS = (0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
MIN_NOISE = 1e-8


@dataclasses.dataclass(frozen=True)
class GPRConfig:
    n_starts: int = 5
    noise_variance: float = None
    signal_variance: float = None
    length_scale: float = None
    max_search_rows: int = 600
    max_fit_rows: int = 2000
    max_iterations: int = 200

    def check(self):
        if self.n_starts < 1:
            raise ModelError("n_starts must be positive")
        if self.noise_variance is not None and self.noise_variance < MIN_NOISE:
            raise ModelError("noise variance must be at least {}".format(MIN_NOISE))
        for name in ("signal_variance", "length_scale"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ModelError("{} must be positive".format(name))
        if self.max_search_rows < 2 or self.max_fit_rows < 2:
            raise ModelError("row limits must be at least 2")


@dataclasses.dataclass(frozen=True, eq=False)
class GPRModel:
    signal_variance: float
    length_scale: float
    noise_variance: float
    mean: float
    inputs: np.ndarray
    dual_weights: np.ndarray
    log_likelihood: float
    starts: tuple = ()

    def predict(self, values):
        values = np.asarray(values, dtype=float)
        cross = self.signal_variance*np.exp(
            -0.5*cdist(values, self.inputs, "sqeuclidean")/self.length_scale**2)
        return self.mean + cross @ self.dual_weights


def _cholesky(k):
    """Lower Cholesky factor, escalating diagonal jitter up to 1e-4."""
    for jitter in JITTERS:
        try:
            factor = linalg.cholesky(k + jitter*np.eye(len(k)), lower=True)
        except linalg.LinAlgError:
            continue
        if jitter:
            logger.debug("kernel matrix needed jitter %g", jitter)
        return factor, jitter
    raise ModelError("kernel matrix not positive definite after jitter {}".format(
        JITTERS[-1]))


def _kernel(sqdist, signal, length):
    return signal*np.exp(-0.5*sqdist/length**2)


def log_marginal_likelihood(sqdist, residual, signal, length, noise, gradient=False):
    """Log marginal likelihood and optionally its gradient in log-parameters."""
    n = len(residual)
    kf = _kernel(sqdist, signal, length)
    factor, _ = _cholesky(kf + noise*np.eye(n))
    alpha = linalg.cho_solve((factor, True), residual)
    lml = (-0.5*residual @ alpha - np.sum(np.log(np.diag(factor)))
           - 0.5*n*math.log(2*math.pi))
    if not gradient:
        return lml
    inner = np.outer(alpha, alpha) - linalg.cho_solve((factor, True), np.eye(n))
    grad = np.array([
        0.5*np.sum(inner*kf),
        0.5*np.sum(inner*kf*sqdist)/length**2,
        0.5*noise*np.trace(inner),
    ])
    return lml, grad


def _bounds(inputs, target):
    distances = pdist(inputs)
    median = float(np.median(distances)) if len(distances) else 1.0
    if not median > 0:
        median = 1.0
    variance = float(np.var(target))
    if not variance > 0:
        variance = 1.0
    return [
        (1e-4*variance, 1e4*variance),
        (1e-2*median, 1e2*median),
        (MIN_NOISE, max(variance, MIN_NOISE)),
    ]


def _row_keys(values, target):
    rows = np.ascontiguousarray(np.column_stack([values, target]) + 0.0)
    return [hashlib.blake2b(row.tobytes(), digest_size=8).digest() for row in rows]


def _canonical_order(values, target):
    """Row order that depends only on row contents, never on input order.

    Rows are ranked by a content hash, ties (identical rows) by position,
    so any prefix is a fixed pseudo-random subset of the data.
    """
    keys = _row_keys(values, target)
    return np.array(sorted(range(len(keys)), key=lambda i: keys[i]), dtype=int)


def fit_gpr(values, target, config=None, rng=None):
    """Fit hyperparameters and dual weights.

    Hyperparameters given in ``config`` are held fixed. The search uses at
    most ``max_search_rows`` rows and the final fit at most ``max_fit_rows``.
    Rows are first put in content-hash order and capped subsets are prefixes
    of that order, so permuting the training rows does not change the fit.
    ``rng`` only draws the optimizer starting points.
    """
    if config is None:
        config = GPRConfig()
    config.check()
    if rng is None:
        rng = np.random.default_rng(0)
    values = np.asarray(values, dtype=float)
    target = np.asarray(target, dtype=float)
    if values.shape[0] < 2:
        raise ModelError("GPR needs at least 2 rows")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(target))):
        raise ModelError("non-finite value in GPR input")
    order = _canonical_order(values, target)
    values, target = values[order], target[order]
    mean = float(target.mean())

    search = np.arange(min(len(target), config.max_search_rows))
    fit = np.arange(min(len(target), config.max_fit_rows))
    if len(fit) < len(target):
        logger.info("GPR fit on %d of %d rows", len(fit), len(target))

    x, r = values[search], target[search] - mean
    sqdist = cdist(x, x, "sqeuclidean")
    bounds = np.log(_bounds(x, target[search]))
    fixed = [config.signal_variance, config.length_scale, config.noise_variance]
    free = [i for i, v in enumerate(fixed) if v is None]

    # every start is drawn up front so that more starts only add candidates
    starts = [bounds[:, 0] + rng.random(3)*(bounds[:, 1] - bounds[:, 0])
              for _ in range(config.n_starts)]
    variance = max(float(np.var(target[search])), MIN_NOISE)
    starts[0] = np.clip(np.log([variance, math.sqrt(np.median(sqdist[sqdist > 0]))
                                if np.any(sqdist > 0) else 1.0,
                                0.1*variance]), bounds[:, 0], bounds[:, 1])

    def full(theta_free):
        theta = np.array([math.log(v) if v is not None else 0.0 for v in fixed])
        theta[free] = theta_free
        return theta

    def objective(theta_free):
        s, l, n = np.exp(full(theta_free))
        lml, grad = log_marginal_likelihood(sqdist, r, s, l, n, gradient=True)
        return -lml, -grad[free]

    results = []
    for start in starts:
        if free:
            try:
                opt = optimize.minimize(objective, start[free], jac=True,
                                        method="L-BFGS-B", bounds=bounds[free],
                                        options=dict(maxiter=config.max_iterations))
            except ModelError:
                continue
            theta, lml = full(opt.x), -float(opt.fun)
        else:
            theta = full([])
            lml = float(log_marginal_likelihood(sqdist, r, *np.exp(theta)))
        results.append((tuple(float(v) for v in np.exp(theta)), lml))
        if not free:
            break
    if not results:
        raise ModelError("every GPR start failed")
    (s, l, n), lml = max(results, key=lambda item: item[1])
    logger.debug("GPR hyperparameters s=%g l=%g n=%g lml=%g", s, l, n, lml)

    x = values[fit]
    k = _kernel(cdist(x, x, "sqeuclidean"), s, l) + n*np.eye(len(x))
    factor, _ = _cholesky(k)
    dual = linalg.cho_solve((factor, True), target[fit] - mean)
    return GPRModel(s, l, n, mean, x, dual, lml, tuple(results))
