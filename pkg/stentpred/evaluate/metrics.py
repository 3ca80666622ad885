import dataclasses

import numpy as np
from scipy import stats

from stentpred.expansion import DEFAULT_THRESHOLD, expansion_label, UNDER_EXPANDED
from stentpred.util.misc import StentpredError


__all__ = ["MetricsError", "RegressionMetrics", "ClassificationMetrics",
           "regression_metrics", "roc_curve", "roc_auc", "classification_metrics",
           "mean_sd"]


class MetricsError(StentpredError):
    pass


@dataclasses.dataclass(frozen=True)
class RegressionMetrics:
    rmse_mm2: float
    pearson_r: float
    bias_mm2: float
    residual_sd_mm2: float
    n: int
    pearson_undefined: bool = False

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    sensitivity: float
    specificity: float
    auc: float
    tp: int
    fp: int
    tn: int
    fn: int
    roc_points: tuple = ()

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["roc_points"] = [list(p) for p in self.roc_points]
        return d


def _pair(actual, predicted):
    actual = np.asarray(actual, dtype=float).ravel()
    predicted = np.asarray(predicted, dtype=float).ravel()
    if len(actual) != len(predicted):
        raise MetricsError("{} actual values against {} predictions".format(
            len(actual), len(predicted)))
    return actual, predicted


def regression_metrics(actual, predicted):
    """RMSE, Pearson correlation, bias (predicted - actual) and residual SD.

    When either side has zero variance the correlation is undefined; it is
    reported as 0 with ``pearson_undefined`` set.
    """
    actual, predicted = _pair(actual, predicted)
    if not len(actual):
        raise MetricsError("no rows to score")
    residual = predicted - actual
    undefined = len(actual) < 2 or np.ptp(actual) == 0 or np.ptp(predicted) == 0
    if undefined:
        r = 0.0
    else:
        r = float(np.clip(stats.pearsonr(actual, predicted)[0], -1.0, 1.0))
    return RegressionMetrics(
        rmse_mm2=float(np.sqrt(np.mean(residual**2))),
        pearson_r=r,
        bias_mm2=float(residual.mean()),
        residual_sd_mm2=float(residual.std(ddof=1)) if len(residual) > 1 else 0.0,
        n=len(actual),
        pearson_undefined=bool(undefined))


def roc_curve(scores, labels):
    """ROC points from a sweep over the unique scores, highest first.

    Returns ``(fpr, tpr)`` arrays starting at (0, 0) and ending at (1, 1);
    tied scores move both coordinates in one step.
    """
    scores, labels = _pair(scores, labels)
    positive = labels.astype(bool)
    n_pos = int(positive.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("ROC needs both classes, got {} positive and {} "
                           "negative".format(n_pos, n_neg))
    order = np.argsort(-scores, kind="stable")
    scores, positive = scores[order], positive[order]
    # last index of every run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(scores) != 0), len(scores) - 1]
    tp = np.cumsum(positive)[ends]
    fp = np.cumsum(~positive)[ends]
    tpr = np.r_[0.0, tp/n_pos]
    fpr = np.r_[0.0, fp/n_neg]
    return fpr, tpr


def roc_auc(scores, labels):
    """Area under the ROC curve by the trapezoid rule.

    Ties contribute half credit, so the result equals the Mann-Whitney
    U statistic over ``n_pos * n_neg``.
    """
    fpr, tpr = roc_curve(scores, labels)
    return float(np.sum(np.diff(fpr)*(tpr[1:] + tpr[:-1])/2))


def classification_metrics(predicted_msei, actual_msei, threshold=DEFAULT_THRESHOLD):
    """Under-expansion detection from predicted against actual mSEI.

    Under-expanded is the positive class. The ROC score is the negated
    predicted mSEI; with a single actual class the AUC is NaN.
    """
    predicted, actual = _pair(predicted_msei, actual_msei)
    if not len(actual):
        raise MetricsError("no lesions to score")
    predicted_under = np.array([expansion_label(v, threshold) == UNDER_EXPANDED
                                for v in predicted], dtype=bool)
    actual_under = np.array([expansion_label(v, threshold) == UNDER_EXPANDED
                             for v in actual], dtype=bool)
    tp = int(np.sum(predicted_under & actual_under))
    fp = int(np.sum(predicted_under & ~actual_under))
    tn = int(np.sum(~predicted_under & ~actual_under))
    fn = int(np.sum(~predicted_under & actual_under))
    if actual_under.all() or not actual_under.any():
        auc, points = float("nan"), ()
    else:
        fpr, tpr = roc_curve(-predicted, actual_under)
        auc = float(np.sum(np.diff(fpr)*(tpr[1:] + tpr[:-1])/2))
        points = tuple(zip(fpr.tolist(), tpr.tolist()))
    return ClassificationMetrics(
        accuracy=(tp + tn)/len(actual),
        sensitivity=tp/(tp + fn) if tp + fn else float("nan"),
        specificity=tn/(tn + fp) if tn + fp else float("nan"),
        auc=auc, tp=tp, fp=fp, tn=tn, fn=fn, roc_points=points)


def mean_sd(values):
    """(mean, sample SD) of the finite entries, NaN when there are none."""
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if not len(values):
        return float("nan"), float("nan")
    sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return float(values.mean()), sd
