"""Test-time adaptation of a continuous prompt vector against a pluggable
scorer, by full-batch gradient descent on an unsupervised objective:

    L(q) = sum_t H(a_t) + sparsity_weight * |sum_t a_t - target_mass|

where a_t = scorer(q, summary_t) and H is binary entropy. Confident scores
minimize the first term; the second ties total anomaly mass to a prior
target. No labels are involved anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .core import seeded_unit_vector

# Scores are clamped to [EPS_P, 1 - EPS_P] inside the entropy derivative
# only; ln((1-a)/a) is unbounded at the endpoints.
EPS_P = 1e-7


def binary_entropy(p: float) -> float:
    """H(p) = -p ln p - (1-p) ln(1-p), with H(0) = H(1) = 0 by continuity."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def _entropy_vec(scores: np.ndarray) -> np.ndarray:
    out = np.zeros_like(scores)
    interior = (scores > 0.0) & (scores < 1.0)
    s = scores[interior]
    out[interior] = -s * np.log(s) - (1.0 - s) * np.log(1.0 - s)
    return out


def total_loss(scores, target_mass: float, sparsity_weight: float) -> float:
    """Confidence-sparsity objective over one batch of scores."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
        raise ValueError("scores must lie in [0, 1]")
    entropy = float(_entropy_vec(scores).sum())
    return entropy + sparsity_weight * abs(float(scores.sum()) - target_mass)


def loss_score_gradient(scores: np.ndarray, target_mass: float, sparsity_weight: float) -> np.ndarray:
    """dL/da_t = ln((1-a)/a) + sparsity_weight * sign(sum a - target).

    Uses subgradient 0 for the absolute value exactly on target, and clamps
    a into [EPS_P, 1-EPS_P] inside the log only.
    """
    a = np.clip(scores, EPS_P, 1.0 - EPS_P)
    entropy_term = np.log((1.0 - a) / a)
    gap = float(scores.sum()) - target_mass
    sign = 0.0 if gap == 0.0 else math.copysign(1.0, gap)
    return entropy_term + sparsity_weight * sign


@dataclass(frozen=True)
class ScorerInfo:
    name: str
    deterministic: bool
    gradient_mode: str  # "analytic" or "finite-difference"


class Scorer(Protocol):
    """Backend that maps (prompt, summary) to an anomaly likelihood in [0, 1].

    ``text`` carries the decoded summary string for backends that prompt a
    language model; numeric backends may ignore it. ``fused`` optionally
    carries the window's fused ball point.
    """

    info: ScorerInfo

    def score(self, q: np.ndarray, emb: np.ndarray, text: str = "", fused=None) -> float: ...

    def grad_q(self, q: np.ndarray, emb: np.ndarray, text: str = "", fused=None) -> np.ndarray: ...


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class StubScorer:
    """Deterministic differentiable stand-in for a frozen language model.

    score(q, s) = sigmoid(w . q + u . s + b) with (w, u, b) derived from the
    seed by a fixed PRNG scheme: w ~ N(0, 1/prompt_dim), b ~ N(0, 1), and u
    is the seed's unit vector from :func:`seeded_unit_vector`. A synthetic
    dataset built with the same seed therefore has its anomaly shift aligned
    with u, making the classes linearly separable to this scorer.

    Any of w, u, b may be overridden for targeted tests.
    """

    def __init__(
        self,
        prompt_dim: int,
        emb_dim: int,
        seed: int,
        w: Optional[np.ndarray] = None,
        u: Optional[np.ndarray] = None,
        b: Optional[float] = None,
    ):
        rng = np.random.default_rng([seed, 0x57AB])
        self.prompt_dim = prompt_dim
        self.emb_dim = emb_dim
        self.seed = seed
        self.w = np.asarray(w, dtype=np.float64) if w is not None else rng.standard_normal(prompt_dim) / math.sqrt(prompt_dim)
        self.b = float(b) if b is not None else float(rng.standard_normal())
        self.u = np.asarray(u, dtype=np.float64) if u is not None else seeded_unit_vector(seed, emb_dim)
        if self.w.shape != (prompt_dim,):
            raise ValueError("w must have prompt_dim entries")
        if self.u.shape != (emb_dim,):
            raise ValueError("u must have emb_dim entries")
        self.info = ScorerInfo(name="stub", deterministic=True, gradient_mode="analytic")

    def logit(self, q: np.ndarray, emb: np.ndarray) -> float:
        return float(self.w @ q + self.u @ emb + self.b)

    def score(self, q: np.ndarray, emb: np.ndarray, text: str = "", fused=None) -> float:
        return _sigmoid(self.logit(q, emb))

    def grad_q(self, q: np.ndarray, emb: np.ndarray, text: str = "", fused=None) -> np.ndarray:
        s = self.score(q, emb)
        return s * (1.0 - s) * self.w


@dataclass
class PromptState:
    """Optimized prompt plus its loss trajectory (loss_history[0] is the
    initial loss, so its length is iteration + 1)."""

    q: np.ndarray
    iteration: int
    loss_history: list

    def __post_init__(self):
        if len(self.loss_history) != self.iteration + 1:
            raise ValueError("loss_history must include the initial loss and one entry per step")

    @property
    def monotone_fraction(self) -> float:
        """Fraction of steps that did not increase the loss (diagnostic)."""
        if self.iteration == 0:
            return 1.0
        h = self.loss_history
        drops = sum(1 for a, b in zip(h, h[1:]) if b <= a)
        return drops / self.iteration


def resolve_target_mass(explicit: Optional[float], n_summaries: int) -> float:
    """Default anomaly mass is 10% of the summaries, the prior rarity."""
    if explicit is not None:
        return float(explicit)
    return 0.1 * n_summaries


def score_all(scorer: Scorer, q: np.ndarray, embs: np.ndarray, texts: Sequence[str], fused=None) -> np.ndarray:
    n = embs.shape[0]
    out = np.empty(n)
    for t in range(n):
        f = fused[t] if fused is not None else None
        s = scorer.score(q, embs[t], text=texts[t] if texts else "", fused=f)
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"scorer returned {s} outside [0, 1] for summary {t}")
        out[t] = s
    return out


def optimize_prompt(
    q0: np.ndarray,
    summaries,
    scorer: Scorer,
    *,
    learning_rate: float,
    opt_iters: int,
    target_mass: Optional[float] = None,
    sparsity_weight: float = 1.0,
    fused=None,
):
    """Run opt_iters steps of q <- q - lr * grad L(q); return the final state
    and the scores under the optimized prompt.

    With opt_iters = 0 the prompt is untouched and the initial scores are
    returned. Aborts with the iteration index if the gradient goes
    non-finite.
    """
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    if opt_iters < 0:
        raise ValueError("opt_iters must be non-negative")
    q = np.array(q0, dtype=np.float64)
    embs = summaries.embeddings.data
    texts = summaries.texts
    n = embs.shape[0]
    mu = resolve_target_mass(target_mass, n)

    scores = score_all(scorer, q, embs, texts, fused)
    history = [total_loss(scores, mu, sparsity_weight)]

    for k in range(opt_iters):
        coeff = loss_score_gradient(scores, mu, sparsity_weight)
        grad = np.zeros_like(q)
        for t in range(n):
            f = fused[t] if fused is not None else None
            grad += coeff[t] * scorer.grad_q(q, embs[t], text=texts[t] if texts else "", fused=f)
        if not np.all(np.isfinite(grad)):
            raise ValueError(f"non-finite prompt gradient at iteration {k}")
        q = q - learning_rate * grad
        scores = score_all(scorer, q, embs, texts, fused)
        history.append(total_loss(scores, mu, sparsity_weight))

    state = PromptState(q=q, iteration=opt_iters, loss_history=history)
    return state, scores


def analytic_total_gradient(
    q: np.ndarray,
    embs: np.ndarray,
    scorer: Scorer,
    target_mass: float,
    sparsity_weight: float,
) -> np.ndarray:
    """Closed-form gradient of the objective for gradient checking."""
    scores = np.array([scorer.score(q, e) for e in embs])
    coeff = loss_score_gradient(scores, target_mass, sparsity_weight)
    grad = np.zeros_like(q)
    for t, e in enumerate(embs):
        grad += coeff[t] * scorer.grad_q(q, e)
    return grad


def finite_difference_total_gradient(
    q: np.ndarray,
    embs: np.ndarray,
    scorer: Scorer,
    target_mass: float,
    sparsity_weight: float,
    step: float = 1e-6,
) -> np.ndarray:
    """Central-difference gradient of the objective, one loss per probe."""

    def loss_at(qq: np.ndarray) -> float:
        scores = np.array([scorer.score(qq, e) for e in embs])
        return total_loss(scores, target_mass, sparsity_weight)

    grad = np.zeros_like(q, dtype=np.float64)
    for i in range(q.size):
        probe = np.zeros_like(q)
        probe[i] = step
        grad[i] = (loss_at(q + probe) - loss_at(q - probe)) / (2.0 * step)
    return grad
