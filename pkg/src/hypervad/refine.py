"""Covariance-aware score refinement.

Fits mean and shrunk covariance of the visual embedding distribution, scores
each summary's visual plausibility as exp(-Mahalanobis distance), and smooths
anomaly scores by plausibility-weighted aggregation over cosine nearest
neighbors in text-embedding space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import EmbeddingMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VisualStats:
    """Mean and precision (inverse covariance) of the visual distribution."""

    mean: np.ndarray
    precision: np.ndarray
    shrinkage: float
    sample_count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        prec = np.asarray(self.precision, dtype=np.float64)
        if prec.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("precision must be d x d for a d-dimensional mean")
        if not np.allclose(prec, prec.T, atol=1e-10):
            raise ValueError("precision must be symmetric")
        mean.flags.writeable = False
        prec.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "precision", prec)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_visual_stats(visual_embs: EmbeddingMatrix, shrinkage: float) -> VisualStats:
    """Column mean plus precision of the shrunk unbiased sample covariance.

    Sigma = (1 - s) * Sigma_sample + s * (tr(Sigma_sample) / d) * I.
    The precision comes from a Cholesky factorization, which also certifies
    positive definiteness; failure reports the smallest eigenvalue.
    """
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError(f"shrinkage must lie in [0, 1], got {shrinkage}")
    X = visual_embs.data
    n, d = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows to fit covariance, got {n}")
    mean = X.mean(axis=0)
    centered = X - mean
    sample_cov = centered.T @ centered / (n - 1)
    target = (np.trace(sample_cov) / d) * np.eye(d)
    cov = (1.0 - shrinkage) * sample_cov + shrinkage * target
    try:
        factor = cho_factor(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        smallest = float(np.linalg.eigvalsh(cov)[0])
        raise ValueError(
            f"covariance not positive definite even after shrinkage {shrinkage} "
            f"(smallest eigenvalue ~ {smallest:.3e})"
        ) from exc
    precision = cho_solve(factor, np.eye(d))
    precision = (precision + precision.T) / 2.0
    return VisualStats(mean=mean, precision=precision, shrinkage=shrinkage, sample_count=n)


def mahalanobis(x: np.ndarray, stats: VisualStats) -> float:
    """sqrt((x - mean)^T precision (x - mean)); zero at the mean."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != stats.mean.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs mean {stats.mean.shape}")
    delta = x - stats.mean
    q = float(delta @ stats.precision @ delta)
    return float(np.sqrt(max(q, 0.0)))


def neighbor_sets(text_embs: EmbeddingMatrix, k: int) -> np.ndarray:
    """K nearest rows per row by cosine distance, always including self.

    Self is a forced member; the remaining k-1 slots go to the nearest other
    rows, ties broken by lower index. Rows are returned sorted by rank
    (self first, then increasing distance).
    """
    n = text_embs.count
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    norms = np.linalg.norm(text_embs.data, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = text_embs.data / safe[:, None]
    cos_dist = 1.0 - unit @ unit.T

    out = np.empty((n, k), dtype=np.int64)
    for t in range(n):
        order = np.argsort(cos_dist[t], kind="stable")  # stable sort keeps lower index first on ties
        others = order[order != t][: k - 1]
        out[t, 0] = t
        out[t, 1:] = others
    return out


def refine_scores(
    scores: np.ndarray,
    text_embs: EmbeddingMatrix,
    stats: VisualStats,
    k: int,
) -> np.ndarray:
    """Weighted KNN aggregation: a'_t = sum_j w_j a_j / sum_j w_j over K_t.

    w_j = exp(-D_M(text_embs[j], stats)), computed with a per-neighborhood
    log-space shift so large distances cannot underflow the whole sum. If a
    neighborhood still degenerates, it falls back to the unweighted mean and
    logs the event.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = text_embs.count
    if scores.shape != (n,):
        raise ValueError(f"need one score per text row, got {scores.shape} vs {n}")
    if n == 0:
        return scores.copy()
    sets = neighbor_sets(text_embs, k)
    dm = [mahalanobis(text_embs.data[j], stats) for j in range(n)]

    # Plain left-to-right accumulation in neighbor-rank order keeps results
    # reproducible down to the last bit across platforms.
    refined = np.empty(n)
    for t in range(n):
        idx = sets[t]
        shift = min(dm[j] for j in idx)
        weights = [math.exp(-(dm[j] - shift)) for j in idx]
        total = sum(weights)
        if not math.isfinite(total) or total <= 0.0:
            log.warning("refine: weight underflow at segment %d, using unweighted mean", t)
            refined[t] = float(scores[idx].mean())
        else:
            refined[t] = sum(w * scores[j] for w, j in zip(weights, idx)) / total
    return np.clip(refined, 0.0, 1.0)
