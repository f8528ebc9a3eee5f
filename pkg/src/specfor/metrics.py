"""Evaluation metrics with explicit tie handling.

roc_auc sweeps descending unique score thresholds and sums trapezoids,
which equals the pair-counting statistic (concordant + 0.5 * tied) /
(P * N). average_precision is the step-wise sum over the same sweep,
with tied scores entering as one atomic group. confusion predicts
positive on score >= threshold, so a score sitting exactly on the
threshold counts as a positive call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInputError,
    LengthMismatchError,
    NoPositivesError,
    OneClassOnlyError,
)
from .features import FeatureVector
from .model import LinearModel, bce_loss, predict_proba

# Published ResNet50 frequency-vs-spatial baselines; reports quote these
# for orientation only, nothing is tested against them.
REFERENCE_RESULTS = {
    "freq": {"accuracy_pct": 92.82, "f1": 0.917, "auc": 0.95, "ap": 0.95},
    "spatial": {"accuracy_pct": 81.5, "f1": 0.802, "auc": 0.85, "ap": 0.85},
}


@dataclass(frozen=True)
class EvalReport:
    n: int
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    f1: float
    auc: float
    ap: float
    mean_loss: float
    threshold: float


def _check_pair(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise LengthMismatchError(f"{scores.shape} scores vs {labels.shape} labels")
    if scores.size == 0:
        raise EmptyInputError("no samples")
    if not np.all(np.isin(labels, (0, 1))):
        raise ValueError("labels must be 0 or 1")
    return scores, labels.astype(np.int64)


def confusion(scores, labels, threshold: float) -> tuple[int, int, int, int]:
    """(tp, tn, fp, fn) at the given threshold; score >= threshold is positive."""
    scores, labels = _check_pair(scores, labels)
    pred = scores >= threshold
    tp = int(np.sum(pred & (labels == 1)))
    tn = int(np.sum(~pred & (labels == 0)))
    fp = int(np.sum(pred & (labels == 0)))
    fn = int(np.sum(~pred & (labels == 1)))
    return tp, tn, fp, fn


def accuracy_f1(tp: int, tn: int, fp: int, fn: int) -> tuple[float, float]:
    """Accuracy and F1 = 2tp / (2tp + fp + fn); empty denominators give 0."""
    total = tp + tn + fp + fn
    acc = (tp + tn) / total if total else 0.0
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom else 0.0
    return acc, f1


def _desc_groups(scores: np.ndarray, labels: np.ndarray):
    """Cumulative (tp, fp) after each group of tied scores, descending."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    lab = labels[order]
    boundaries = np.nonzero(np.diff(s))[0]
    ends = np.append(boundaries, len(s) - 1)
    cum_tp = np.cumsum(lab == 1)[ends]
    cum_fp = np.cumsum(lab == 0)[ends]
    return cum_tp, cum_fp


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve with tied pairs counted half."""
    scores, labels = _check_pair(scores, labels)
    pos = int(np.sum(labels == 1))
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise OneClassOnlyError(f"need both classes, got {pos} positives of {len(labels)}")
    cum_tp, cum_fp = _desc_groups(scores, labels)
    tpr = np.concatenate([[0.0], cum_tp / pos])
    fpr = np.concatenate([[0.0], cum_fp / neg])
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


def average_precision(scores, labels) -> float:
    """Step-wise AP over descending unique thresholds.

    AP = sum_k (R_k - R_{k-1}) * P_k; with every score tied this is a
    single step of height 1 at the prevalence, so AP equals prevalence.
    """
    scores, labels = _check_pair(scores, labels)
    pos = int(np.sum(labels == 1))
    if pos == 0:
        raise NoPositivesError("average precision needs at least one positive")
    cum_tp, cum_fp = _desc_groups(scores, labels)
    recall = cum_tp / pos
    precision = cum_tp / (cum_tp + cum_fp)
    prev = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev) * precision))


def roc_points(scores, labels) -> list[tuple[float, float]]:
    """(fpr, tpr) sweep points for plotting, from (0, 0) to (1, 1)."""
    scores, labels = _check_pair(scores, labels)
    pos = int(np.sum(labels == 1))
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise OneClassOnlyError("need both classes for a ROC curve")
    cum_tp, cum_fp = _desc_groups(scores, labels)
    pts = [(0.0, 0.0)]
    pts.extend((fp / neg, tp / pos) for tp, fp in zip(cum_tp, cum_fp))
    return pts


def evaluate(
    model: LinearModel, test_set: list[tuple[FeatureVector, int]], threshold: float = 0.5
) -> EvalReport:
    """Score a labeled set and assemble the full report.

    Rank metrics need both classes / a positive; on degenerate sets they
    fall back to chance values (auc 0.5, ap 0.0) instead of failing, so
    single-class smoke tests still produce a report.
    """
    if not test_set:
        raise EmptyInputError("empty evaluation set")
    scores = np.array([predict_proba(model, x) for x, _ in test_set])
    labels = np.array([y for _, y in test_set])
    tp, tn, fp, fn = confusion(scores, labels, threshold)
    acc, f1 = accuracy_f1(tp, tn, fp, fn)
    try:
        auc = roc_auc(scores, labels)
    except OneClassOnlyError:
        auc = 0.5
    try:
        ap = average_precision(scores, labels)
    except NoPositivesError:
        ap = 0.0
    mean_loss = float(np.mean([bce_loss(p, int(y)) for p, y in zip(scores, labels)]))
    return EvalReport(
        n=len(test_set),
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
        accuracy=acc,
        f1=f1,
        auc=auc,
        ap=ap,
        mean_loss=mean_loss,
        threshold=threshold,
    )
