"""
Experiment report output

``report.json``, a per-lesion ``lesions.csv`` and SVG figures. SVGs are
written with a fixed hash salt and no date so repeated runs produce the
same files.
"""

import json
import logging
import os

import numpy as np
import matplotlib
from matplotlib.figure import Figure

from stentpred.evaluate.runner import HEADLINE
from stentpred.util.misc import csv_text, format_float, jsonable, write_to_file


__all__ = ["FIGURES", "lesion_table", "plot_scatter", "plot_residuals",
           "plot_msei_bars", "plot_area_curves", "plot_roc", "plot_sei_curve",
           "summary_table", "seed_table", "write_report", "write_seeds",
           "write_sweep"]


logger = logging.getLogger(__name__)

FIGURES = ("scatter", "residuals", "msei_bars", "area_curves", "roc")

_actual_color = "tab:blue"
_predicted_color = "tab:orange"


def _save(fig, filename):
    with matplotlib.rc_context({"svg.hashsalt": "stentpred",
                                "svg.fonttype": "none"}):
        fig.savefig(filename, format="svg", metadata={"Date": None})
    logger.debug("wrote %s", filename)


def _heldout_areas(data):
    actual, predicted = [], []
    for lesion_id in sorted(data["curves"]):
        curve = data["curves"][lesion_id]
        actual.extend(curve["actual_area_mm2"])
        predicted.extend(curve["predicted_area_mm2"])
    return np.array(actual, dtype=float), np.array(predicted, dtype=float)


def plot_scatter(data, filename):
    actual, predicted = _heldout_areas(data)
    fig = Figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot()
    ax.scatter(actual, predicted, s=6, color=_predicted_color)
    if len(actual):
        lo = min(actual.min(), predicted.min())
        hi = max(actual.max(), predicted.max())
        ax.plot([lo, hi], [lo, hi], color="gray", linewidth=0.8)
    r = data["heldout"]["regression"]
    ax.set_title("held-out r = {:.3f}, RMSE = {:.3f} mm$^2$".format(
        r["pearson_r"], r["rmse_mm2"]))
    ax.set_xlabel("actual post-stent lumen area (mm$^2$)")
    ax.set_ylabel("predicted post-stent lumen area (mm$^2$)")
    fig.tight_layout()
    _save(fig, filename)


def plot_residuals(data, filename):
    actual, predicted = _heldout_areas(data)
    residual = predicted - actual
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.scatter((actual + predicted)/2, residual, s=6, color=_predicted_color)
    if len(residual):
        bias, sd = residual.mean(), residual.std()
        for level, style in ((bias, "-"), (bias - 1.96*sd, "--"), (bias + 1.96*sd, "--")):
            ax.axhline(level, color="gray", linestyle=style, linewidth=0.8)
    ax.set_xlabel("mean of actual and predicted area (mm$^2$)")
    ax.set_ylabel("predicted - actual (mm$^2$)")
    fig.tight_layout()
    _save(fig, filename)


def plot_msei_bars(data, filename):
    lesions = [l for l in data["lesions"] if l["split"] == "heldout"]
    x = np.arange(len(lesions))
    fig = Figure(figsize=(max(5, 0.3*len(lesions)), 4))
    ax = fig.add_subplot()
    ax.bar(x - 0.2, [l["actual_msei"] for l in lesions], 0.4,
           color=_actual_color, label="actual")
    ax.bar(x + 0.2, [l["predicted_msei"] for l in lesions], 0.4,
           color=_predicted_color, label="predicted")
    ax.axhline(data["config_echo"]["threshold"], color="red", linewidth=0.8)
    ax.set_xticks(x)
    ax.set_xticklabels([l["lesion_id"] for l in lesions], rotation=90, fontsize=6)
    ax.set_ylabel("minimum SEI (%)")
    ax.legend()
    fig.tight_layout()
    _save(fig, filename)


def plot_area_curves(data, filename, limit=6):
    ids = sorted(data["curves"])[:limit]
    fig = Figure(figsize=(6, 1.8*max(len(ids), 1)))
    for i, lesion_id in enumerate(ids):
        curve = data["curves"][lesion_id]
        ax = fig.add_subplot(len(ids), 1, i + 1)
        ax.plot(curve["frames"], curve["actual_area_mm2"], color=_actual_color,
                label="actual")
        ax.plot(curve["frames"], curve["predicted_area_mm2"],
                color=_predicted_color, label="predicted")
        ax.set_ylabel(lesion_id, fontsize=7)
        if i == 0:
            ax.legend(fontsize=7)
    if ids:
        ax.set_xlabel("frame")
    fig.tight_layout()
    _save(fig, filename)


def _format_auc(auc):
    if auc is None or not np.isfinite(auc):
        return "n/a"
    return "{:.3f}".format(auc)


def plot_roc(data, filename):
    fig = Figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot()
    curves = [("model", data["heldout"]["classification"])]
    baselines = data.get("baselines") or {}
    if "fujino_ml" in baselines:
        curves.append(("Fujino ML", baselines["fujino_ml"]["heldout"]["classification"]))
    if "fujino_rule" in baselines:
        curves.append(("Fujino score", baselines["fujino_rule"]["heldout"]))
    for name, c in curves:
        if not c["roc_points"]:
            continue
        fpr, tpr = zip(*c["roc_points"])
        ax.plot(fpr, tpr, label="{} (AUC {})".format(
            name, _format_auc(c["auc"])))
    ax.plot([0, 1], [0, 1], color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("1 - specificity")
    ax.set_ylabel("sensitivity")
    ax.legend(loc="lower right", fontsize=7)
    fig.tight_layout()
    _save(fig, filename)


def plot_sei_curve(expansion, filename, threshold=None, title=None):
    """One lesion's predicted SEI along the stented span."""
    fig = Figure(figsize=(6, 3))
    ax = fig.add_subplot()
    ax.plot(expansion.frames, expansion.sei, color=_predicted_color)
    ax.plot([expansion.msei_frame], [expansion.msei], "o", color="red")
    if threshold is not None:
        ax.axhline(threshold, color="gray", linestyle="--", linewidth=0.8)
    ax.set_xlabel("frame")
    ax.set_ylabel("SEI (%)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, filename)


def lesion_table(data):
    columns = ("lesion_id", "patient_id", "phenotype", "split", "fold",
               "actual_msei", "predicted_msei", "actual_label", "predicted_label",
               "fujino_points")
    rows = []
    for lesion in data["lesions"]:
        rows.append([format_float(lesion[c]) if isinstance(lesion[c], float)
                     else lesion[c] for c in columns])
    return csv_text(columns, rows)


def write_report(report, out_dir, plots=True):
    """Write ``report.json``, ``lesions.csv`` and the figures to ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    report.write(os.path.join(out_dir, "report.json"))
    write_to_file(os.path.join(out_dir, "lesions.csv"), lesion_table(report.data))
    if not plots:
        return
    data = report.data
    for name, plot in zip(FIGURES, (plot_scatter, plot_residuals, plot_msei_bars,
                                    plot_area_curves, plot_roc)):
        plot(data, os.path.join(out_dir, name + ".svg"))


def summary_table(rows, keys):
    """CSV with the ``keys`` columns, then mean and SD of each headline metric."""
    header = list(keys) + [m + suffix for m in HEADLINE for suffix in ("_mean", "_sd")]
    table = []
    for row in rows:
        cells = [row[k] for k in keys]
        for m in HEADLINE:
            cells.extend(format_float(v) for v in row[m])
        table.append(cells)
    return csv_text(header, table)


def seed_table(data):
    rows = [[p["seed"]] + [format_float(p[m]) for m in HEADLINE]
            for p in data["per_seed"]]
    return csv_text(("seed",) + HEADLINE, rows)


def _write_json(filename, data):
    write_to_file(filename, json.dumps(jsonable(data), sort_keys=True, indent=2) + "\n")


def write_seeds(report, out_dir, plots=True):
    """``seeds.json``, ``seeds.csv`` and one report directory per seed."""
    os.makedirs(out_dir, exist_ok=True)
    report.write(os.path.join(out_dir, "seeds.json"))
    write_to_file(os.path.join(out_dir, "seeds.csv"), seed_table(report.data))
    for seed, r in zip(report["seeds"], report.reports):
        write_report(r, os.path.join(out_dir, "seed_{}".format(seed)), plots)


def write_sweep(result, out_dir):
    """``sweep.json`` plus the ``modes.csv`` and ``groups.csv`` tables."""
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, "sweep.json"), result)
    write_to_file(os.path.join(out_dir, "modes.csv"),
                  summary_table(result["modes"], ("mode", "segment_length")))
    write_to_file(os.path.join(out_dir, "groups.csv"),
                  summary_table(result["groups"], ("feature_group", "model_kind")))
