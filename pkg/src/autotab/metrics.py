"""Evaluation primitives: ROC/AUC, confusion metrics, and lift tables."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

log = logging.getLogger(__name__)


class MetricsError(Exception):
    pass


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative, ties count half.

    Computed from midranks in O(n log n); equals the pairwise Mann-Whitney
    statistic exactly.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("auc requires both classes present")
    ranks = rankdata(scores)
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def to_json(self) -> dict:
        return {"fpr": self.fpr.tolist(), "tpr": self.tpr.tolist(),
                "thresholds": self.thresholds.tolist(), "auc": self.auc}


def roc_curve(scores, labels) -> RocCurve:
    """ROC points at every distinct score threshold, descending."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("roc_curve requires both classes present")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    tps = np.cumsum(y == 1)
    fps = np.cumsum(y == 0)
    # keep only the last index of each run of equal scores
    distinct = np.r_[s[1:] != s[:-1], True]
    tps, fps, thr = tps[distinct], fps[distinct], s[distinct]
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    thr = np.r_[np.inf, thr]
    area = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thr, auc=area)


def confusion_metrics(scores, labels, threshold: float = 0.5) -> dict:
    """Accuracy/precision/recall/F1 at a hard cutoff (predict 1 iff >= threshold)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pred = scores >= threshold
    tp = int((pred & (labels == 1)).sum())
    fp = int((pred & (labels == 0)).sum())
    fn = int((~pred & (labels == 1)).sum())
    tn = int((~pred & (labels == 0)).sum())
    if tp + fp == 0:
        log.debug("no predicted positives at threshold %.3g; precision set to 0", threshold)
        precision = 0.0
    else:
        precision = tp / (tp + fp)
    recall = tp / (tp + fn) if tp + fn else 0.0
    accuracy = (tp + tn) / len(labels) if len(labels) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}


@dataclass(frozen=True)
class LiftBin:
    bin: int
    n: int
    events: int
    response_rate: float
    cum_n: int
    cum_events: int
    cum_capture_rate: float
    cum_lift: float


@dataclass(frozen=True)
class LiftTable:
    bins: list[LiftBin]
    total_n: int
    total_events: int
    clamped: bool = False

    def to_json(self) -> dict:
        return {"total_n": self.total_n, "total_events": self.total_events,
                "clamped": self.clamped,
                "bins": [vars(b) for b in self.bins]}


def lift_table(scores, labels, groups: int) -> LiftTable:
    """Gains table over score-descending bins of near-equal size.

    Ties in score are broken by original row index so the table is
    deterministic. Earlier bins absorb the size remainder.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n = len(scores)
    if n == 0:
        raise MetricsError("lift_table requires at least one row")
    clamped = groups > n
    if clamped:
        log.debug("lift groups %d clamped to n=%d", groups, n)
        groups = n
    order = np.lexsort((np.arange(n), -scores))
    y = np.asarray(labels)[order]
    total_events = int((labels == 1).sum())
    base = n // groups
    rem = n % groups
    bins = []
    start = 0
    cum_n = 0
    cum_events = 0
    overall_rate = total_events / n
    for g in range(groups):
        size = base + (1 if g < rem else 0)
        chunk = y[start:start + size]
        events = int((chunk == 1).sum())
        cum_n += size
        cum_events += events
        capture = cum_events / total_events if total_events else 0.0
        lift = (cum_events / cum_n) / overall_rate if overall_rate else 0.0
        bins.append(LiftBin(bin=g + 1, n=size, events=events,
                            response_rate=events / size if size else 0.0,
                            cum_n=cum_n, cum_events=cum_events,
                            cum_capture_rate=capture, cum_lift=lift))
        start += size
    return LiftTable(bins=bins, total_n=n, total_events=total_events, clamped=clamped)
