"""ROC analysis of outlier rankings and recovery of planted subnetworks."""

from __future__ import annotations

from statistics import median
from typing import Iterable, Mapping

import numpy as np

from .errors import EvaluationError


def roc_auc(
    scores: Mapping[str, float], labels: Mapping[str, int]
) -> tuple[list[tuple[float, float]], float]:
    """ROC curve and area for "higher score = more outlying".

    The curve steps through distinct score values in descending order, so a
    group of tied scores contributes one diagonal segment and tied
    outlier/inlier pairs earn half credit.  The area is the trapezoid sum
    over that curve.

    Raises
    ------
    EvaluationError
        Only one class present, or a labelled sample has no score.
    """
    missing = [s for s in labels if s not in scores]
    if missing:
        raise EvaluationError(f"no score for labelled samples {missing[:5]}")
    ids = sorted(labels)
    y = np.array([int(labels[s]) for s in ids])
    s = np.array([float(scores[i]) for i in ids])
    P = int((y == 1).sum())
    N = int((y == 0).sum())
    if P == 0 or N == 0:
        raise EvaluationError("ROC needs both outliers and inliers in the labels")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of every run of equal scores
    cut = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(y == 1)[cut]
    fp = np.cumsum(y == 0)[cut]
    fpr = np.r_[0.0, fp / N]
    tpr = np.r_[0.0, tp / P]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return list(zip(fpr.tolist(), tpr.tolist())), auc


def subnetwork_recovery(found: Iterable[int], truth: Iterable[int]) -> dict[str, float]:
    """Precision, recall and F1 of a recovered node set against the planted one."""
    found, truth = set(found), set(truth)
    if not truth:
        raise EvaluationError("the true node set must be nonempty")
    hit = len(found & truth)
    precision = hit / len(found) if found else 0.0
    recall = hit / len(truth)
    f1 = 2 * precision * recall / (precision + recall) if hit else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def evaluate_report(report, truth, top: int = 10) -> dict:
    """AUC plus per-outlier recovery; ``top_f1_median`` covers true outliers in the top ``top`` ranks.

    ``top_f1_median`` is 0 when no true outlier reaches the top ``top``.
    """
    scores = {sid: r.score for sid, r in report.samples.items()}
    _, auc = roc_auc(scores, truth.labels)
    rank = {sid: k + 1 for k, sid in enumerate(report.ranking)}
    recovery = {}
    for sid, nodes in sorted(truth.planted.items()):
        stats = subnetwork_recovery(report.samples[sid].explanation.selected_nodes, nodes)
        recovery[sid] = {**stats, "rank": rank[sid]}
    top_f1 = [v["f1"] for v in recovery.values() if v["rank"] <= top]
    return {
        "auc": auc,
        "recovery": recovery,
        "top": top,
        "top_outliers": len(top_f1),
        "top_f1_median": median(top_f1) if top_f1 else 0.0,
        "top_f1_mean": float(np.mean(top_f1)) if top_f1 else 0.0,
    }
