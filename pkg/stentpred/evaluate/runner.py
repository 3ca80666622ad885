"""
End-to-end experiment

assemble -> split by patient -> for every cross-validation fold inside the
training lesions: fit normalizer and column selection on the fold's
training rows, fit the regressor, predict areas, derive SEI and classify
-> refit on all training rows -> score the held-out lesions.

Fitting is confined to :func:`fit_pipeline`, which only ever receives the
training rows of the current fold.
"""

import dataclasses
import json
import logging

import numpy as np

from stentpred.baseline.fujino import (FujinoConfig, fujino_score,
                                       fujino_ml_features, lesion_score_inputs)
from stentpred.evaluate.metrics import (regression_metrics, classification_metrics,
                                        roc_curve, roc_auc, mean_sd)
from stentpred.evaluate.split import (DEFAULT_TRAIN_FRACTION, split_grouped_kfold,
                                      holdout_split)
from stentpred.expansion import (DEFAULT_THRESHOLD, UNDER_EXPANDED,
                                 compute_sei_curve, expansion_label)
from stentpred.features.assemble import assemble, check_segment_length
from stentpred.features.normalize import (NormalizationParams, fit_normalizer,
                                          apply_normalizer)
from stentpred.features.schema import (MODES, FRAME, SEGMENTAL, LESION,
                                       FEATURE_GROUPS, cle_columns)
from stentpred.learn.lasso import fit_lasso, rank_features
from stentpred.learn.model import (KINDS, ModelConfig, fit_model, predict,
                                   save_model, load_model)
from stentpred.util.misc import StentpredError, derive_seed, jsonable, write_to_file


__all__ = ["ExperimentConfig", "ExperimentError", "FittedPipeline",
           "ExperimentReport", "SeedReport", "HEADLINE", "SWEEP_SEGMENT_LENGTHS",
           "fit_pipeline", "predict_areas", "predict_lesion", "run_experiment",
           "headline", "run_seeds", "sweep", "save_pipeline", "load_pipeline"]


logger = logging.getLogger(__name__)

TOP_K = 20
HEADLINE = ("heldout_rmse_mm2", "heldout_pearson_r", "heldout_auc", "cv_auc",
            "fujino_ml_auc", "fujino_rule_auc")
SWEEP_SEGMENT_LENGTHS = (3, 7, 15, 31, 63)


class ExperimentError(StentpredError):
    def __init__(self, stage, cause):
        StentpredError.__init__(self, "{} stage failed: {}".format(stage, cause))
        self.stage = stage
        self.cause = cause


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "segmental"
    segment_length: int = 31
    feature_group: str = "cle"
    model_kind: str = "gpr"
    include_phenotype: bool = False
    seed: int = 0
    threshold: float = DEFAULT_THRESHOLD
    k_folds: int = 5
    train_fraction: float = DEFAULT_TRAIN_FRACTION
    baselines: bool = True
    model: ModelConfig = dataclasses.field(default_factory=ModelConfig)
    fujino: FujinoConfig = dataclasses.field(default_factory=FujinoConfig)

    def check(self):
        if self.mode not in MODES:
            raise ExperimentError("config", "unknown mode '{}'".format(self.mode))
        if self.feature_group not in FEATURE_GROUPS:
            raise ExperimentError("config", "unknown feature group '{}'".format(
                self.feature_group))
        if self.model_kind not in KINDS:
            raise ExperimentError("config", "unknown model kind '{}'".format(
                self.model_kind))
        if not 0 < self.threshold < 100:
            raise ExperimentError("config", "threshold must lie in (0, 100)")
        if self.k_folds < 2:
            raise ExperimentError("config", "need at least 2 folds")
        try:
            check_segment_length(self.segment_length)
            self.model_config().check()
            self.fujino.check()
        except StentpredError as e:
            raise ExperimentError("config", e) from e

    def model_config(self):
        return self.model.replace(kind=self.model_kind)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["model"]["kind"] = self.model_kind
        return d


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ExperimentError:
        raise
    except StentpredError as e:
        raise ExperimentError(name, e) from e


class FittedPipeline:
    """Everything learned from one set of training rows

    Parameters
    ----------
    mode, segment_length, include_phenotype, feature_group :
        How raw rows are assembled and which columns are kept.
    normalizer : NormalizationParams
    columns : list of str
        Columns fed to the model, in schema order.
    model : RegressionModel
    lasso : dict or None
        Selected lambda, active set and ranking when LASSO ran.
    threshold : float
    """
    def __init__(self, mode, segment_length, include_phenotype, feature_group,
                 normalizer, columns, model, lasso=None,
                 threshold=DEFAULT_THRESHOLD):
        self.mode = mode
        self.segment_length = segment_length
        self.include_phenotype = include_phenotype
        self.feature_group = feature_group
        self.normalizer = normalizer
        self.columns = list(columns)
        self.model = model
        self.lasso = lasso
        self.threshold = threshold

    def describe(self):
        return dict(
            mode=self.mode,
            segment_length=self.segment_length,
            include_phenotype=self.include_phenotype,
            feature_group=self.feature_group,
            columns=self.columns,
            threshold=self.threshold,
            normalizer=self.normalizer.to_dict(),
            lasso=self.lasso)


def _select_columns(X, feature_group, seed):
    """Columns of ``X`` for a feature group, and the LASSO summary if run."""
    if feature_group == "all":
        return list(X.names), None
    cle = cle_columns(X.schema)
    if feature_group == "cle":
        return cle, None
    candidates = X if feature_group == "lasso_selected" else X.select(cle)
    lasso = fit_lasso(candidates, seed=seed)
    ranking = rank_features(lasso)
    if feature_group == "lasso_selected":
        chosen = set(lasso.active_set) or set(ranking[:1])
    else:
        chosen = set(ranking[:TOP_K])
    summary = dict(lambda_=lasso.lambda_, active_set=lasso.active_set,
                   ranking=ranking, warnings=list(lasso.warnings))
    return [n for n in X.names if n in chosen], summary


def fit_pipeline(train, config, seed):
    """Fit normalization, column selection and the regressor on ``train``."""
    normalizer = _stage("normalize", fit_normalizer, train)
    scaled = apply_normalizer(normalizer, train)
    columns, lasso = _stage("select", _select_columns, scaled,
                            config.feature_group, derive_seed(seed, 0))
    model = _stage("fit", fit_model, config.model_kind, scaled.select(columns),
                   config.model_config(), derive_seed(seed, 1))
    return FittedPipeline(config.mode, config.segment_length,
                          config.include_phenotype, config.feature_group,
                          normalizer, columns, model, lasso, config.threshold)


def predict_areas(pipeline, X):
    """Predicted post-stent lumen area (mm^2) for every row of raw ``X``."""
    scaled = _stage("normalize", apply_normalizer, pipeline.normalizer, X)
    return _stage("predict", predict, pipeline.model, scaled.select(pipeline.columns))


def _predicted_sei(frames, areas, reference, threshold):
    """Predicted expansion of one lesion from its per-row predicted areas.

    The curve covers the rows' own frames, the lesion frames that lie inside
    the stent, so it can be shorter than the observed curve over the whole
    stented span and need not be contiguous.
    """
    frames = np.asarray(frames)
    order = np.argsort(frames, kind="stable")
    # regressors may undershoot zero area
    return compute_sei_curve(np.maximum(np.asarray(areas)[order], 1e-9),
                             reference, threshold, frames=frames[order])


def predict_lesion(pipeline, record):
    """Predicted SEI curve of a single lesion record.

    References come from the pre-stent pullback. In lesion mode the curve
    has one entry, at the frame of the predicted minimum.
    """
    X = _stage("assemble", assemble, pipeline.mode, [record],
               pipeline.segment_length, pipeline.include_phenotype,
               require_targets=False)
    areas = predict_areas(pipeline, X)
    if pipeline.mode == LESION:
        frames = np.array([record.frames[0] if X.frame_index[0] < 0
                           else X.frame_index[0]])
    else:
        frames = X.frame_index
    return _stage("expansion", _predicted_sei, frames, areas, record.reference,
                  pipeline.threshold)


def _lesion_msei(X, predicted, records, threshold):
    """Predicted mSEI per lesion id from row predictions."""
    result = dict()
    for record in records:
        rows = np.flatnonzero(X.lesion_id == record.lesion_id)
        if not len(rows):
            continue
        expansion = _predicted_sei(X.frame_index[rows], predicted[rows],
                                   record.reference, threshold)
        result[record.lesion_id] = expansion.msei
    return result


def _score(X, rows, predicted, records, actual_msei, threshold):
    ids = [r.lesion_id for r in records]
    predicted_msei = _lesion_msei(X.take(rows), predicted, records, threshold)
    regression = regression_metrics(X.target[rows], predicted)
    classification = classification_metrics(
        [predicted_msei[i] for i in ids], [actual_msei[i] for i in ids], threshold)
    return regression, classification, predicted_msei


def _check_disjoint(train_ids, test_ids):
    leaked = set(train_ids) & set(test_ids)
    if leaked:
        raise ExperimentError("split", "lesion '{}' is in both training and "
                              "validation rows".format(sorted(leaked)[0]))


class ExperimentReport:
    """Results of :func:`run_experiment`

    ``data`` is the JSON-ready document; ``pipeline`` the model refitted on
    all training lesions; ``curves`` the held-out area curves.
    """
    def __init__(self, data, pipeline):
        self.data = data
        self.pipeline = pipeline

    def __getitem__(self, key):
        return self.data[key]

    def to_json(self):
        return json.dumps(jsonable(self.data), sort_keys=True, indent=2) + "\n"

    def write(self, filename):
        write_to_file(filename, self.to_json())


def _metrics_summary(per_fold):
    keys = ("rmse_mm2", "pearson_r", "bias_mm2", "residual_sd_mm2")
    summary = dict((k, mean_sd([f["regression"][k] for f in per_fold])) for k in keys)
    for k in ("accuracy", "sensitivity", "specificity", "auc"):
        summary[k] = mean_sd([f["classification"][k] for f in per_fold])
    return summary


def _fujino_rule(records, actual, config, threshold):
    """AUC and ROC of the score points against actual under-expansion."""
    labels = [expansion_label(actual[r.lesion_id], threshold) == UNDER_EXPANDED
              for r in records]
    points = [fujino_score(*lesion_score_inputs(r), config=config).points
              for r in records]
    if all(labels) or not any(labels):
        return dict(auc=float("nan"), roc_points=[])
    fpr, tpr = roc_curve(points, labels)
    return dict(auc=roc_auc(points, labels),
                roc_points=[list(p) for p in zip(fpr.tolist(), tpr.tolist())])


def _run_folds(config, X, train_records, actual, tag):
    """Cross-validate ``config`` over the training lesions of ``X``."""
    patients = [r.patient_id for r in train_records]
    k = min(config.k_folds, len(set(patients)))
    folds = _stage("split", split_grouped_kfold, patients, k,
                   derive_seed(config.seed, 1))
    per_fold, fold_of, oof = [], dict(), dict()
    for f in range(k):
        fit_records = [train_records[i] for i in folds.train_indices(f)]
        val_records = [train_records[i] for i in folds.indices(f)]
        _check_disjoint([r.lesion_id for r in fit_records],
                        [r.lesion_id for r in val_records])
        fit_rows = X.rows_of_lesions([r.lesion_id for r in fit_records])
        val_rows = X.rows_of_lesions([r.lesion_id for r in val_records])
        logger.info("%s fold %d/%d: %d training rows, %d validation rows",
                    tag, f + 1, k, len(fit_rows), len(val_rows))
        pipeline = fit_pipeline(X.take(fit_rows), config,
                                derive_seed(config.seed, 2, f))
        predicted = predict_areas(pipeline, X.take(val_rows))
        regression, classification, msei = _score(
            X, val_rows, predicted, val_records, actual, config.threshold)
        for r in val_records:
            fold_of[r.lesion_id] = f
        oof.update(msei)
        per_fold.append(dict(fold=f, lesions=[r.lesion_id for r in val_records],
                             regression=regression.to_dict(),
                             classification=classification.to_dict()))
    return per_fold, fold_of, oof


def _evaluate(config, X, records, train, heldout, actual, tag):
    train_records = [records[i] for i in train]
    heldout_records = [records[i] for i in heldout]
    per_fold, fold_of, oof = _run_folds(config, X, train_records, actual, tag)

    train_rows = X.rows_of_lesions([r.lesion_id for r in train_records])
    test_rows = X.rows_of_lesions([r.lesion_id for r in heldout_records])
    _check_disjoint(X.lesion_id[train_rows], X.lesion_id[test_rows])
    pipeline = fit_pipeline(X.take(train_rows), config, derive_seed(config.seed, 3))
    predicted = predict_areas(pipeline, X.take(test_rows))
    regression, classification, msei = _score(
        X, test_rows, predicted, heldout_records, actual, config.threshold)
    ids = [r.lesion_id for r in train_records]
    pooled = classification_metrics([oof[i] for i in ids], [actual[i] for i in ids],
                                    config.threshold)
    result = dict(
        folds=per_fold,
        cv_summary=_metrics_summary(per_fold),
        cv_pooled=pooled.to_dict(),
        heldout=dict(regression=regression.to_dict(),
                     classification=classification.to_dict()))
    return result, pipeline, fold_of, dict(oof, **msei), predicted, test_rows


def run_experiment(config, records):
    """Run the full evaluation of ``config`` over lesion records with targets."""
    config.check()
    records = sorted(records, key=lambda r: r.lesion_id)
    if len(records) < 2:
        raise ExperimentError("assemble", "need at least 2 lesions")
    actual = dict()
    for r in records:
        actual[r.lesion_id] = _stage("expansion", r.actual_expansion,
                                     config.threshold).msei
    X = _stage("assemble", assemble, config.mode, records, config.segment_length,
               config.include_phenotype)
    train, heldout = _stage("split", holdout_split,
                            [r.patient_id for r in records],
                            config.train_fraction, derive_seed(config.seed, 0))
    logger.info("%s/%d/%s/%s: %d training and %d held-out lesions",
                config.mode, config.segment_length, config.feature_group,
                config.model_kind, len(train), len(heldout))

    result, pipeline, fold_of, predicted_msei, heldout_predicted, test_rows = \
        _evaluate(config, X, records, train, heldout, actual, "model")

    baselines = dict()
    if config.baselines:
        ml_config = config.replace(mode=LESION, feature_group="all",
                                   include_phenotype=False)
        ml, *_ = _evaluate(ml_config, _stage("assemble", fujino_ml_features, records),
                           records, train, heldout, actual, "fujino-ml")
        heldout_records = [records[i] for i in heldout]
        train_records = [records[i] for i in train]
        baselines["fujino_ml"] = dict(
            cv_summary=ml["cv_summary"], cv_pooled=ml["cv_pooled"],
            heldout=ml["heldout"])
        baselines["fujino_rule"] = dict(
            config=config.fujino.to_dict(),
            cv_pooled=_fujino_rule(train_records, actual, config.fujino,
                                   config.threshold),
            heldout=_fujino_rule(heldout_records, actual, config.fujino,
                                 config.threshold))

    heldout_ids = set(records[i].lesion_id for i in heldout)
    lesions = []
    for r in records:
        inputs = lesion_score_inputs(r)
        pred = predicted_msei.get(r.lesion_id, float("nan"))
        lesions.append(dict(
            lesion_id=r.lesion_id,
            patient_id=r.patient_id,
            phenotype=r.phenotype,
            split="heldout" if r.lesion_id in heldout_ids else "train",
            fold=fold_of.get(r.lesion_id),
            actual_msei=actual[r.lesion_id],
            predicted_msei=pred,
            actual_label=expansion_label(actual[r.lesion_id], config.threshold),
            predicted_label=expansion_label(pred, config.threshold)
            if np.isfinite(pred) else None,
            fujino_points=fujino_score(*inputs, config=config.fujino).points))

    test = X.take(test_rows)
    curves = dict()
    for lesion_id in sorted(heldout_ids):
        rows = np.flatnonzero(test.lesion_id == lesion_id)
        curves[lesion_id] = dict(frames=test.frame_index[rows],
                                 actual_area_mm2=test.target[rows],
                                 predicted_area_mm2=heldout_predicted[rows])

    data = dict(
        config_echo=config.to_dict(),
        n_lesions=len(records),
        n_patients=len(set(r.patient_id for r in records)),
        n_rows=len(X),
        n_columns=len(X.names),
        train_lesions=[records[i].lesion_id for i in train],
        heldout_lesions=[records[i].lesion_id for i in heldout],
        selected_columns=pipeline.columns,
        lasso=pipeline.lasso,
        normalization_warnings=list(pipeline.normalizer.warnings),
        model=dict(kind=pipeline.model.kind,
                   training_rmse_mm2=pipeline.model.training_rmse),
        lesions=lesions,
        curves=curves,
        baselines=baselines,
        **result)
    return ExperimentReport(data, pipeline)


def headline(data):
    """Single-number results of one experiment report's ``data``.

    ``cv_auc`` is the mean over folds; the baseline AUCs are the pooled
    cross-validation values, NaN when baselines were not run.
    """
    heldout = data["heldout"]
    baselines = data.get("baselines") or {}
    nan = float("nan")
    return dict(
        heldout_rmse_mm2=heldout["regression"]["rmse_mm2"],
        heldout_pearson_r=heldout["regression"]["pearson_r"],
        heldout_auc=heldout["classification"]["auc"],
        cv_auc=data["cv_summary"]["auc"][0],
        fujino_ml_auc=baselines["fujino_ml"]["cv_pooled"]["auc"]
        if "fujino_ml" in baselines else nan,
        fujino_rule_auc=baselines["fujino_rule"]["cv_pooled"]["auc"]
        if "fujino_rule" in baselines else nan)


class SeedReport(ExperimentReport):
    """Results of :func:`run_seeds`

    ``data`` holds the per-seed headline metrics and their (mean, SD);
    ``reports`` the full report of every seed and ``pipeline`` the refitted
    pipeline of the first seed.
    """
    def __init__(self, data, reports):
        ExperimentReport.__init__(self, data, reports[0].pipeline)
        self.reports = reports


def run_seeds(config, records, seeds):
    """Repeat :func:`run_experiment` for every seed in ``seeds``.

    Each seed draws its own held-out split, folds and model randomness.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ExperimentError("config", "need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ExperimentError("config", "repeated seed in {}".format(seeds))
    reports = []
    for seed in seeds:
        logger.info("seed %d of %s", seed, seeds)
        reports.append(run_experiment(config.replace(seed=seed), records))
    per_seed = [dict(seed=s, **headline(r.data)) for s, r in zip(seeds, reports)]
    summary = dict((k, mean_sd([p[k] for p in per_seed])) for k in HEADLINE)
    data = dict(config_echo=config.to_dict(), seeds=seeds, per_seed=per_seed,
                summary=summary)
    return SeedReport(data, reports)


def sweep(config, records, seeds=None, segment_lengths=SWEEP_SEGMENT_LENGTHS,
          groups=FEATURE_GROUPS, kinds=KINDS):
    """Analysis-approach and feature-group by model comparisons.

    ``modes`` rows run frame mode, segmental mode at every length of
    ``segment_lengths`` and lesion mode, the rest of ``config`` fixed.
    ``groups`` rows cross feature groups with model kinds in ``config.mode``.
    Every row holds the (mean, SD) of the headline metrics over ``seeds``,
    ``config.seed`` alone by default. Baselines run only in the ``modes``
    table.
    """
    seeds = list(seeds or [config.seed])
    modes = []
    for mode, length in ([(FRAME, None)] + [(SEGMENTAL, s) for s in segment_lengths]
                         + [(LESION, None)]):
        changes = dict(mode=mode)
        if length is not None:
            changes["segment_length"] = length
        result = run_seeds(config.replace(**changes), records, seeds)
        modes.append(dict(mode=mode, segment_length=length, **result["summary"]))
    grid = []
    for group in groups:
        for kind in kinds:
            result = run_seeds(config.replace(feature_group=group, model_kind=kind,
                                              baselines=False), records, seeds)
            grid.append(dict(feature_group=group, model_kind=kind,
                             **result["summary"]))
    return dict(config_echo=config.to_dict(), seeds=seeds, modes=modes, groups=grid)


def save_pipeline(pipeline, filename):
    pipeline.model.metadata["pipeline"] = pipeline.describe()
    save_model(pipeline.model, filename)


def load_pipeline(filename):
    model = _stage("load", load_model, filename)
    try:
        d = model.metadata["pipeline"]
    except KeyError:
        raise ExperimentError("load", "{} holds a bare model, not a "
                              "pipeline".format(filename))
    return FittedPipeline(
        d["mode"], d["segment_length"], d["include_phenotype"], d["feature_group"],
        NormalizationParams.from_dict(d["normalizer"]), d["columns"], model,
        d.get("lasso"), d["threshold"])
