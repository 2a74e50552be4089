"""Render evaluation results as the delimited tables and figures analysts
read: a confusion-matrix table, a per-class accuracy table, a cross-model
comparison table, and bar/heatmap figures."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import IO, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ConfusionMatrix, EvaluationReport

# Stable ids inside SVG output so identical runs produce identical bytes.
matplotlib.rcParams["svg.hashsalt"] = "pendency"

_METRIC_ROWS = ("PR AUC", "ROC AUC", "Log loss", "F1 score", "Precision", "Recall")
_COMPARATIVE_ROWS = ("Accuracy",) + _METRIC_ROWS


def _fmt(value) -> str:
    return "" if value is None else f"{value:.2f}"


def write_confusion_table(cm: ConfusionMatrix, dest: IO[str]) -> None:
    """Confusion matrix with row-normalized whole-percent cells.

    Rows with zero support render as empty cells rather than NaN.
    """
    writer = csv.writer(dest)
    writer.writerow(["True/Predicted"] + cm.labels)
    pct = cm.percentages()
    for i, label in enumerate(cm.labels):
        row = pct[i]
        if np.isnan(row).all():
            writer.writerow([label] + [""] * len(cm.labels))
        else:
            writer.writerow([label] + [f"{round(v)}%" for v in row])


def write_metrics_table(report: EvaluationReport, dest: IO[str]) -> None:
    """Per-class accuracy table: metrics as rows, 'All Labels' + classes as
    columns, values to two decimals."""
    writer = csv.writer(dest)
    writer.writerow(["Metric", "All Labels"] + report.class_names)
    k = len(report.class_names)
    rows = {
        "PR AUC": [report.pr_auc] + [report.per_class_pr_auc[c] for c in range(k)],
        "ROC AUC": [report.roc_auc] + [report.per_class_roc_auc[c] for c in range(k)],
        "Log loss": [report.log_loss] + [report.per_class_log_loss[c] for c in range(k)],
        "F1 score": [report.weighted_f1] + [report.per_class[n]["f1"] for n in report.class_names],
        "Precision": [report.weighted_precision] + [report.per_class[n]["precision"] for n in report.class_names],
        "Recall": [report.weighted_recall] + [report.per_class[n]["recall"] for n in report.class_names],
    }
    for name in _METRIC_ROWS:
        writer.writerow([name] + [_fmt(v) for v in rows[name]])


def write_comparative_table(named_reports: Sequence[tuple[str, EvaluationReport]], dest: IO[str]) -> None:
    """Model-by-model comparison: metrics as rows, one column per model."""
    writer = csv.writer(dest)
    writer.writerow(["Metric"] + [name for name, _ in named_reports])
    rows = {
        "Accuracy": [r.accuracy for _, r in named_reports],
        "PR AUC": [r.pr_auc for _, r in named_reports],
        "ROC AUC": [r.roc_auc for _, r in named_reports],
        "Log loss": [r.log_loss for _, r in named_reports],
        "F1 score": [r.weighted_f1 for _, r in named_reports],
        "Precision": [r.weighted_precision for _, r in named_reports],
        "Recall": [r.weighted_recall for _, r in named_reports],
    }
    for name in _COMPARATIVE_ROWS:
        writer.writerow([name] + [_fmt(v) for v in rows[name]])


def write_importance_csv(feature_names: Sequence[str], weights: Sequence[float], dest: IO[str]) -> None:
    writer = csv.writer(dest)
    writer.writerow(["feature", "importance"])
    order = np.argsort(-np.asarray(weights, dtype=np.float64), kind="stable")
    for i in order:
        writer.writerow([feature_names[i], repr(float(weights[i]))])


def _save_deterministic(fig, path) -> None:
    path = Path(path)
    fig.savefig(path, format=path.suffix.lstrip("."), metadata={"Date": None})
    plt.close(fig)


def importance_figure(feature_names: Sequence[str], weights: Sequence[float], path, top: int = 20) -> None:
    """Horizontal bar chart of feature importance, largest on top."""
    weights = np.asarray(weights, dtype=np.float64)
    order = np.argsort(-weights, kind="stable")[:top]
    names = [feature_names[i] for i in order][::-1]
    vals = weights[order][::-1]
    fig, ax = plt.subplots(figsize=(8, max(2.5, 0.35 * len(names) + 1)))
    ax.barh(np.arange(len(names)), vals, color="#4878a8")
    ax.set_yticks(np.arange(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("importance weight")
    ax.set_title("Feature importance")
    fig.tight_layout()
    _save_deterministic(fig, path)


def confusion_figure(cm: ConfusionMatrix, path) -> None:
    """Heatmap of the row-normalized confusion matrix with percent labels."""
    pct = cm.percentages()
    display = np.nan_to_num(pct, nan=0.0)
    k = len(cm.labels)
    fig, ax = plt.subplots(figsize=(1.1 * k + 2.5, 1.0 * k + 2))
    im = ax.imshow(display, cmap="Blues", vmin=0.0, vmax=100.0)
    ax.set_xticks(np.arange(k))
    ax.set_yticks(np.arange(k))
    ax.set_xticklabels(cm.labels, rotation=30, ha="right", fontsize=8)
    ax.set_yticklabels(cm.labels, fontsize=8)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("True")
    for i in range(k):
        for j in range(k):
            if np.isnan(pct[i, j]):
                continue
            color = "white" if display[i, j] > 50 else "black"
            ax.text(j, i, f"{round(pct[i, j])}%", ha="center", va="center", color=color, fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title("Confusion matrix (row %)")
    fig.tight_layout()
    _save_deterministic(fig, path)


def write_attributions_csv(
    feature_names: Sequence[str],
    rows: Sequence[Mapping],
    dest: IO[str],
) -> None:
    """Per-row attribution table: row id, base value, one column per feature,
    and the attributed model output."""
    writer = csv.writer(dest)
    writer.writerow(["row", "base_value"] + list(feature_names) + ["output"])
    for entry in rows:
        writer.writerow(
            [entry["row"], repr(float(entry["base_value"]))]
            + [repr(float(v)) for v in entry["contributions"]]
            + [repr(float(entry["output"]))]
        )
