import collections

import numpy as np
from scipy import stats


__all__ = ["STATISTICS", "StatSummary", "summarize", "summarize_columns",
           "summarize_windows"]


STATISTICS = ("mean", "median", "sd", "min", "max", "skewness", "kurtosis")

StatSummary = collections.namedtuple("StatSummary", STATISTICS)


def _moments(values):
    # population central moments; skewness and kurtosis are 0 for a
    # constant sequence, where rounding may leave a tiny nonzero m2
    m2, m3, m4 = stats.moment(values, [2, 3, 4], axis=-1)
    m2 = np.asarray(m2, dtype=float)
    flat = (m2 <= 0) | np.all(values == values[..., :1], axis=-1)
    safe = np.where(flat, 1.0, m2)
    skewness = np.where(flat, 0.0, m3/safe**1.5)
    kurtosis = np.where(flat, 0.0, m4/safe**2)
    return skewness, kurtosis


def summarize(values):
    """First-order statistics of a sequence.

    ``sd`` uses the n-1 denominator (0 for a single value); skewness is
    m3/m2^(3/2) and kurtosis the non-excess m4/m2^2, both from population
    central moments.
    """
    values = np.asarray(values, dtype=float).ravel()
    if not len(values):
        raise ValueError("cannot summarize an empty sequence")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite value in sequence")
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    skewness, kurtosis = _moments(values)
    # a constant sequence has exactly zero spread
    if np.all(values == values[0]):
        sd = 0.0
    return StatSummary(
        mean=float(np.mean(values)),
        median=float(np.median(values)),
        sd=sd,
        min=float(np.min(values)),
        max=float(np.max(values)),
        skewness=float(skewness),
        kurtosis=float(kurtosis))


def summarize_columns(window):
    """Statistics of each column of a (samples, columns) array.

    Returns (columns, 7) in :data:`STATISTICS` order.
    """
    window = np.asarray(window, dtype=float).T
    out = np.empty((window.shape[0], len(STATISTICS)))
    out[:, 0] = window.mean(axis=1)
    out[:, 1] = np.median(window, axis=1)
    if window.shape[1] > 1:
        out[:, 2] = window.std(axis=1, ddof=1)
    else:
        out[:, 2] = 0.0
    out[:, 3] = window.min(axis=1)
    out[:, 4] = window.max(axis=1)
    out[:, 5], out[:, 6] = _moments(window)
    constant = np.all(window == window[:, :1], axis=1)
    out[constant, 2] = 0.0
    return out


def summarize_windows(values, half_width):
    """Statistics of every clamped window ``[i - half_width, i + half_width]``.

    ``values`` is (frames, columns); the result is (frames, columns, 7).
    Windows are truncated at both ends, never padded.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    out = np.empty(values.shape + (len(STATISTICS),))
    for i in range(n):
        out[i] = summarize_columns(values[max(0, i - half_width):i + half_width + 1])
    return out
