"""Classification metrics: confusion matrices, precision/recall/F1,
ROC AUC, average-precision PR AUC, and log loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError

DEFAULT_LOG_LOSS_EPS = 1e-15


@dataclass
class ConfusionMatrix:
    """Counts[i][j] = rows with true class i predicted as class j."""

    labels: list[str]
    counts: np.ndarray

    def percentages(self) -> np.ndarray:
        """Row-normalized percentages; rows with zero support come back NaN
        (rendered as empty cells, never NaN text)."""
        totals = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(totals > 0, 100.0 * self.counts / totals, np.nan)

    def to_json_dict(self) -> dict:
        return {"labels": self.labels, "counts": self.counts.tolist()}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "ConfusionMatrix":
        return cls(list(data["labels"]), np.asarray(data["counts"], dtype=np.int64))


def confusion(y_true, y_pred, labels: Sequence) -> ConfusionMatrix:
    """Count matrix over the supplied label order; unknown labels error."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise DataError(f"{y_true.shape[0]} truths vs {y_pred.shape[0]} predictions")
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true.tolist(), y_pred.tolist()):
        if t not in index:
            raise DataError(f"unknown true label {t!r}")
        if p not in index:
            raise DataError(f"unknown predicted label {p!r}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix([str(l) for l in labels], counts)


def classification_metrics(y_true, y_pred, labels: Sequence | None = None) -> dict:
    """Accuracy plus per-class and support-weighted precision/recall/F1.

    Undefined ratios (empty denominators) are reported as 0 so downstream
    tables stay numeric; classes absent from the truth carry zero weight.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape[0] != y_pred.shape[0] or y_true.shape[0] < 1:
        raise DataError("y_true and y_pred must be equal-length and nonempty")
    if labels is None:
        labels = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    n = y_true.shape[0]
    accuracy = float((y_true == y_pred).sum() / n)

    per_class = {}
    w_precision = w_recall = w_f1 = 0.0
    for label in labels:
        tp = int(((y_true == label) & (y_pred == label)).sum())
        fp = int(((y_true != label) & (y_pred == label)).sum())
        fn = int(((y_true == label) & (y_pred != label)).sum())
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": support,
        }
        w_precision += support * precision
        w_recall += support * recall
        w_f1 += support * f1
    return {
        "accuracy": accuracy,
        "per_class": per_class,
        "weighted_precision": w_precision / n,
        "weighted_recall": w_recall / n,
        "weighted_f1": w_f1 / n,
    }


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    sx = x[order]
    n = x.shape[0]
    starts = np.nonzero(np.r_[True, sx[1:] != sx[:-1]])[0]
    ends = np.r_[starts[1:], n]
    group_rank = (starts + 1 + ends) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def roc_auc(scores, labels) -> float:
    """Probability a random positive outscores a random negative, ties at 1/2
    (rank / Mann-Whitney formulation)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC AUC needs both classes present")
    ranks = _average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def pr_auc(scores, labels) -> float:
    """Average precision: sum of precision times recall gained, sweeping
    distinct scores descending with ties handled as one block."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise DataError("PR AUC needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    ys = (labels[order] == 1).astype(np.float64)
    ss = scores[order]
    n = scores.shape[0]
    block_ends = np.r_[np.nonzero(ss[:-1] != ss[1:])[0], n - 1]
    tp = np.cumsum(ys)[block_ends]
    n_pred = block_ends + 1.0
    precision = tp / n_pred
    recall = tp / n_pos
    delta = np.diff(np.r_[0.0, recall])
    return float((delta * precision).sum())


def one_vs_rest_roc_auc(proba: np.ndarray, y_true, class_count: int | None = None):
    """Per-class one-vs-rest ROC AUC plus the support-weighted aggregate.

    Classes absent from the truth have no defined AUC and are reported None
    with zero weight.
    """
    proba = np.asarray(proba, dtype=np.float64)
    y_true = np.asarray(y_true)
    k = class_count or proba.shape[1]
    per_class: list[float | None] = []
    weighted = 0.0
    n = y_true.shape[0]
    for c in range(k):
        mask = (y_true == c).astype(np.int64)
        support = int(mask.sum())
        if support == 0 or support == n:
            per_class.append(None)
            continue
        auc = roc_auc(proba[:, c], mask)
        per_class.append(auc)
        weighted += support * auc
    covered = sum(
        int((y_true == c).sum()) for c in range(k) if per_class[c] is not None
    )
    return per_class, (weighted / covered if covered else None)


def one_vs_rest_pr_auc(proba: np.ndarray, y_true, class_count: int | None = None):
    proba = np.asarray(proba, dtype=np.float64)
    y_true = np.asarray(y_true)
    k = class_count or proba.shape[1]
    per_class: list[float | None] = []
    weighted = 0.0
    for c in range(k):
        mask = (y_true == c).astype(np.int64)
        support = int(mask.sum())
        if support == 0:
            per_class.append(None)
            continue
        ap = pr_auc(proba[:, c], mask)
        per_class.append(ap)
        weighted += support * ap
    covered = sum(
        int((y_true == c).sum()) for c in range(k) if per_class[c] is not None
    )
    return per_class, (weighted / covered if covered else None)


def log_loss(proba, labels, eps: float = DEFAULT_LOG_LOSS_EPS) -> float:
    """Mean negative log likelihood of the true class, eps-clipped."""
    proba = np.asarray(proba, dtype=np.float64)
    labels = np.asarray(labels)
    if proba.ndim != 2:
        raise DataError("probability input must be (rows, classes)")
    if np.any(proba < -1e-9) or np.any(proba > 1.0 + 1e-9):
        raise DataError("probabilities must lie within [0, 1]")
    if labels.min() < 0 or labels.max() >= proba.shape[1]:
        raise DataError(
            f"label outside [0, {proba.shape[1]}): {labels.min()}..{labels.max()}"
        )
    p_true = proba[np.arange(proba.shape[0]), labels]
    return float(-np.mean(np.log(np.clip(p_true, eps, 1.0 - eps))))


def per_class_log_loss(proba, labels, eps: float = DEFAULT_LOG_LOSS_EPS):
    """Log loss restricted to the rows of each true class (None when absent)."""
    proba = np.asarray(proba, dtype=np.float64)
    labels = np.asarray(labels)
    out: list[float | None] = []
    for c in range(proba.shape[1]):
        rows = labels == c
        if not rows.any():
            out.append(None)
            continue
        p = np.clip(proba[rows, c], eps, 1.0 - eps)
        out.append(float(-np.mean(np.log(p))))
    return out


@dataclass
class EvaluationReport:
    """Full metric suite for one model on one dataset."""

    n_rows: int
    class_names: list[str]
    accuracy: float
    per_class: dict
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    roc_auc: float | None
    pr_auc: float | None
    log_loss: float
    per_class_roc_auc: list
    per_class_pr_auc: list
    per_class_log_loss: list
    confusion: ConfusionMatrix

    def to_json_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "class_names": self.class_names,
            "accuracy": self.accuracy,
            "per_class": self.per_class,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "roc_auc": self.roc_auc,
            "pr_auc": self.pr_auc,
            "log_loss": self.log_loss,
            "per_class_roc_auc": self.per_class_roc_auc,
            "per_class_pr_auc": self.per_class_pr_auc,
            "per_class_log_loss": self.per_class_log_loss,
            "confusion": self.confusion.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "EvaluationReport":
        fields_ = {k: data[k] for k in (
            "n_rows", "class_names", "accuracy", "weighted_precision",
            "weighted_recall", "weighted_f1", "roc_auc", "pr_auc", "log_loss",
            "per_class_roc_auc", "per_class_pr_auc", "per_class_log_loss",
        )}
        per_class = {k: dict(v) for k, v in data["per_class"].items()}
        return cls(
            per_class=per_class,
            confusion=ConfusionMatrix.from_json_dict(data["confusion"]),
            **fields_,
        )


def evaluate_classifier(y_true, proba, class_names: Sequence[str]) -> EvaluationReport:
    """Score argmax predictions from a probability matrix.

    Binary models report the positive class's ROC/PR AUC; multiclass models
    report the support-weighted one-vs-rest aggregates, with per-class values
    alongside either way.
    """
    proba = np.asarray(proba, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.int64)
    k = proba.shape[1]
    if len(class_names) != k:
        raise DataError(f"{len(class_names)} class names for {k} probability columns")
    preds = np.argmax(proba, axis=1)

    metrics = classification_metrics(y_true, preds, labels=list(range(k)))
    per_class = {
        class_names[c]: metrics["per_class"][c] for c in range(k)
    }

    pc_roc, weighted_roc = one_vs_rest_roc_auc(proba, y_true, k)
    pc_pr, weighted_pr = one_vs_rest_pr_auc(proba, y_true, k)
    if k == 2 and pc_roc[1] is not None:
        headline_roc = pc_roc[1]
        headline_pr = pc_pr[1]
    else:
        headline_roc = weighted_roc
        headline_pr = weighted_pr

    cm_names = [class_names[c] for c in range(k)]
    cm = confusion([cm_names[i] for i in y_true], [cm_names[i] for i in preds], cm_names)

    return EvaluationReport(
        n_rows=int(y_true.shape[0]),
        class_names=list(class_names),
        accuracy=metrics["accuracy"],
        per_class=per_class,
        weighted_precision=metrics["weighted_precision"],
        weighted_recall=metrics["weighted_recall"],
        weighted_f1=metrics["weighted_f1"],
        roc_auc=headline_roc,
        pr_auc=headline_pr,
        log_loss=log_loss(proba, y_true),
        per_class_roc_auc=pc_roc,
        per_class_pr_auc=pc_pr,
        per_class_log_loss=per_class_log_loss(proba, y_true),
        confusion=cm,
    )
