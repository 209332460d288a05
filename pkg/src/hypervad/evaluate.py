"""Frame-level evaluation: score expansion, rank-based AUC-ROC, and AP.

AUC uses the Mann-Whitney statistic with ties contributing half credit; AP
sweeps descending-score thresholds with tied scores grouped into a single
step. Metrics are reported as explicitly undefined when a class is missing,
never defaulted to 0 or NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata


class UndefinedMetricError(ValueError):
    """Raised when a metric's preconditions (both classes present) fail."""


@dataclass(frozen=True)
class EvalReport:
    """AUC-ROC and AP with explicit undefined states."""

    auc_roc: Optional[float]
    average_precision: Optional[float]
    frame_count: int
    positive_count: int
    undefined_reason: Optional[str] = None

    @property
    def defined(self) -> bool:
        return self.auc_roc is not None and self.average_precision is not None

    def as_dict(self) -> dict:
        return {
            "auc_roc": self.auc_roc,
            "average_precision": self.average_precision,
            "frame_count": self.frame_count,
            "positive_count": self.positive_count,
            "defined": self.defined,
            "undefined_reason": self.undefined_reason,
        }


def expand_to_frames(window_scores, segment_to_window, segments) -> np.ndarray:
    """Piecewise-constant expansion: every frame in segment t gets the score
    of t's window. Raises on any uncovered frame range."""
    window_scores = np.asarray(window_scores, dtype=np.float64)
    segment_to_window = np.asarray(segment_to_window, dtype=np.int64)
    if len(segment_to_window) != len(segments):
        raise ValueError("segment_to_window must map every segment")
    if len(segments) == 0:
        return np.zeros(0)
    total = segments[-1].frame_end + 1
    out = np.full(total, np.nan)
    for seg in segments:
        w = segment_to_window[seg.index]
        if not 0 <= w < len(window_scores):
            raise ValueError(f"segment {seg.index} maps to missing window {w}")
        out[seg.frame_start : seg.frame_end + 1] = window_scores[w]
    uncovered = np.nonzero(np.isnan(out))[0]
    if uncovered.size:
        raise ValueError(
            f"frames {uncovered[0]}..{uncovered[-1]} not covered by any segment"
        )
    return out


def _check_binary(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"scores and labels must be equal-length vectors, got {scores.shape} vs {labels.shape}")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return scores, labels.astype(np.int64)


def auc_roc(scores, labels) -> float:
    """Rank-based AUC: P(score+ > score-) + 0.5 * P(score+ = score-).

    Computed from average ranks, which reproduces the pairwise tie-aware
    statistic exactly.
    """
    scores, labels = _check_binary(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC-ROC needs both classes present")
    ranks = rankdata(scores, method="average")
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(scores, labels) -> float:
    """AP = sum_k (R_k - R_{k-1}) P_k over descending unique-score thresholds."""
    scores, labels = _check_binary(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(sorted_labels)
    fp = np.cumsum(1 - sorted_labels)
    # last position of each tied-score group marks one threshold step
    boundaries = np.nonzero(np.diff(sorted_scores))[0]
    idx = np.concatenate([boundaries, [scores.size - 1]])
    precision = tp[idx] / (tp[idx] + fp[idx])
    recall = tp[idx] / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(((recall - prev_recall) * precision).sum())


def build_report(scores, labels) -> EvalReport:
    """Evaluate both metrics, flagging undefined states instead of raising."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int((labels == 1).sum()) if labels.size else 0
    try:
        auc = auc_roc(scores, labels)
        ap = average_precision(scores, labels)
        return EvalReport(auc, ap, int(scores.size), n_pos)
    except UndefinedMetricError as exc:
        return EvalReport(None, None, int(scores.size), n_pos, undefined_reason=str(exc))
