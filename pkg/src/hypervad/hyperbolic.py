"""Poincare-ball geometry: exp/log maps, Mobius addition, geodesic distance,
and the weighted geodesic (Karcher) mean used for modality fusion.

Convention: the ball of curvature c > 0 is {x : c * ||x||^2 < 1}, radius
1/sqrt(c). All operations project their outputs to radius
(1 - ball_eps) / sqrt(c) because artanh blows up at the boundary.

Formulas follow the standard gyrovector-space treatment (Ungar; Ganea et al.,
"Hyperbolic neural networks", NeurIPS 2018):

    x (+) y   = ((1 + 2c<x,y> + c|y|^2) x + (1 - c|x|^2) y)
                / (1 + 2c<x,y> + c^2 |x|^2 |y|^2)
    d(x, y)   = (2 / sqrt(c)) artanh(sqrt(c) |(-x) (+) y|)
    exp_0(v)  = tanh(sqrt(c) |v|) v / (sqrt(c) |v|)
    log_0(p)  = artanh(sqrt(c) |p|) p / (sqrt(c) |p|)
    lambda_x  = 2 / (1 - c |x|^2)                     (conformal factor)
    exp_x(v)  = x (+) tanh(sqrt(c) lambda_x |v| / 2) v / (sqrt(c) |v|)
    log_x(p)  = (2 / (sqrt(c) lambda_x)) artanh(sqrt(c) |u|) u / |u|,
                u = (-x) (+) p

The basepoint maps are the origin maps transported by Mobius translation,
which is what the Karcher loop needs.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_BALL_EPS = 1e-5
DEFAULT_KARCHER_TOL = 1e-10
DEFAULT_KARCHER_MAX_ITER = 200

_MIN_NORM = 1e-15


def project_to_ball(coords: np.ndarray, curvature: float, ball_eps: float = DEFAULT_BALL_EPS) -> np.ndarray:
    """Scale ``coords`` radially so that sqrt(c)*||x|| <= 1 - ball_eps."""
    coords = np.asarray(coords, dtype=np.float64)
    max_radius = (1.0 - ball_eps) / np.sqrt(curvature)
    norm = np.linalg.norm(coords)
    if norm > max_radius:
        coords = coords * (max_radius / norm)
    return coords


@dataclass(frozen=True)
class PoincarePoint:
    """A point strictly inside the curvature-c Poincare ball.

    Direct construction validates containment; use :meth:`project` to build
    from arbitrary coordinates with the standard margin projection.
    """

    coords: np.ndarray
    curvature: float

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.coords, dtype=np.float64))
        if arr.ndim != 1:
            raise ValueError(f"point coordinates must be a 1-D vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("point coordinates must be finite")
        if self.curvature <= 0:
            raise ValueError(f"curvature must be positive, got {self.curvature}")
        if np.sqrt(self.curvature) * np.linalg.norm(arr) >= 1.0:
            raise ValueError("point lies on or outside the ball boundary")
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    @classmethod
    def project(cls, coords, curvature: float, ball_eps: float = DEFAULT_BALL_EPS) -> "PoincarePoint":
        return cls(project_to_ball(coords, curvature, ball_eps), curvature)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]


def _check_pair(x: PoincarePoint, y: PoincarePoint):
    if x.curvature != y.curvature:
        raise ValueError(f"curvature mismatch: {x.curvature} vs {y.curvature}")
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")


def mobius_add_coords(x: np.ndarray, y: np.ndarray, curvature: float) -> np.ndarray:
    """Mobius addition on raw coordinate arrays (no projection)."""
    c = curvature
    x2 = float(np.dot(x, x))
    y2 = float(np.dot(y, y))
    xy = float(np.dot(x, y))
    num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
    denom = 1.0 + 2.0 * c * xy + c * c * x2 * y2
    return num / max(denom, _MIN_NORM)


def mobius_add(x: PoincarePoint, y: PoincarePoint, ball_eps: float = DEFAULT_BALL_EPS) -> PoincarePoint:
    """Mobius addition x (+) y on the shared curvature ball."""
    _check_pair(x, y)
    out = mobius_add_coords(x.coords, y.coords, x.curvature)
    return PoincarePoint.project(out, x.curvature, ball_eps)


def mobius_neg(x: PoincarePoint) -> PoincarePoint:
    return PoincarePoint(-x.coords, x.curvature)


def exp_map_origin(v, curvature: float, ball_eps: float = DEFAULT_BALL_EPS) -> PoincarePoint:
    """Map a tangent vector at the origin onto the ball.

    exp_0(0) is the origin exactly; other inputs land strictly inside the
    ball after the margin projection.
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("tangent vector must be finite")
    sqrt_c = np.sqrt(curvature)
    norm = float(np.linalg.norm(v))
    if norm < _MIN_NORM:
        return PoincarePoint(np.zeros_like(v), curvature)
    coords = np.tanh(sqrt_c * norm) * v / (sqrt_c * norm)
    return PoincarePoint.project(coords, curvature, ball_eps)


def log_map_origin(p: PoincarePoint) -> np.ndarray:
    """Inverse of exp_map_origin: tangent vector at the origin reaching p."""
    sqrt_c = np.sqrt(p.curvature)
    norm = float(np.linalg.norm(p.coords))
    if norm < _MIN_NORM:
        return np.zeros_like(p.coords)
    scaled = sqrt_c * norm
    if scaled >= 1.0:
        raise ValueError("point lies on or outside the ball boundary")
    return np.arctanh(scaled) * p.coords / (sqrt_c * norm)


def _conformal_factor(x: np.ndarray, c: float) -> float:
    return 2.0 / max(1.0 - c * float(np.dot(x, x)), _MIN_NORM)


def exp_map(base: PoincarePoint, v: np.ndarray, ball_eps: float = DEFAULT_BALL_EPS) -> PoincarePoint:
    """Exponential map at an arbitrary basepoint, via Mobius translation."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("tangent vector must be finite")
    c = base.curvature
    sqrt_c = np.sqrt(c)
    norm = float(np.linalg.norm(v))
    if norm < _MIN_NORM:
        return base
    lam = _conformal_factor(base.coords, c)
    second = np.tanh(sqrt_c * lam * norm / 2.0) * v / (sqrt_c * norm)
    out = mobius_add_coords(base.coords, second, c)
    return PoincarePoint.project(out, c, ball_eps)


def log_map(base: PoincarePoint, p: PoincarePoint) -> np.ndarray:
    """Logarithmic map at an arbitrary basepoint, via Mobius translation."""
    _check_pair(base, p)
    c = base.curvature
    sqrt_c = np.sqrt(c)
    u = mobius_add_coords(-base.coords, p.coords, c)
    norm = float(np.linalg.norm(u))
    if norm < _MIN_NORM:
        return np.zeros_like(u)
    lam = _conformal_factor(base.coords, c)
    scaled = min(sqrt_c * norm, 1.0 - 1e-15)
    return (2.0 / (sqrt_c * lam)) * np.arctanh(scaled) * u / norm


def distance(x: PoincarePoint, y: PoincarePoint) -> float:
    """Geodesic distance d(x, y) = (2/sqrt(c)) artanh(sqrt(c) |(-x) (+) y|)."""
    _check_pair(x, y)
    sqrt_c = np.sqrt(x.curvature)
    diff = mobius_add_coords(-x.coords, y.coords, x.curvature)
    norm = float(np.linalg.norm(diff))
    scaled = min(sqrt_c * norm, 1.0 - 1e-15)
    return float(2.0 / sqrt_c * np.arctanh(scaled))


@dataclass(frozen=True)
class KarcherResult:
    """Outcome of the weighted geodesic mean iteration.

    ``converged`` is False when max_iter was exhausted; the point is then the
    best effort found, never a silent success.
    """

    point: PoincarePoint
    residual: float
    iterations: int
    converged: bool


def weighted_geodesic_mean(
    points: Sequence[PoincarePoint],
    weights: Sequence[float],
    tol: float = DEFAULT_KARCHER_TOL,
    max_iter: int = DEFAULT_KARCHER_MAX_ITER,
    ball_eps: float = DEFAULT_BALL_EPS,
) -> KarcherResult:
    """Weighted Karcher mean: the point minimizing sum_i w_i d(m, x_i)^2.

    Iterates m <- exp_m(step * u) with u = sum_i w_i log_m(x_i) / sum_i w_i,
    starting from the weight-normalized Euclidean average of the coordinates
    (projected into the ball) and stopping when ||u|| drops below ``tol``.

    The raw fixed-point iteration (step 1) oscillates once points sit more
    than about two units of geodesic distance from the mean: the squared
    distance Hessian has eigenvalues up to sqrt(c) d coth(sqrt(c) d), so a
    unit step overshoots. The step is therefore damped to 1/H with H the
    largest such factor over the support, which restores guaranteed descent
    while keeping the same fixed point and the same residual definition.
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    c = points[0].curvature
    dim = points[0].dim
    for p in points:
        if p.curvature != c:
            raise ValueError("all points must share one curvature")
        if p.dim != dim:
            raise ValueError("all points must share one dimension")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(points),):
        raise ValueError("one weight per point required")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    total = float(w.sum())
    if total <= 0:
        raise ValueError("weights must sum to a positive value")
    w = w / total

    single = max(range(len(points)), key=lambda i: w[i])
    if w[single] == 1.0:
        # degenerate weighting: the mean is that point exactly
        return KarcherResult(points[single], 0.0, 0, True)

    coords = np.stack([p.coords for p in points])
    mean = PoincarePoint.project(w @ coords, c, ball_eps)
    sqrt_c = np.sqrt(c)

    residual = np.inf
    for it in range(1, max_iter + 1):
        update = np.zeros(dim)
        smoothness = 1.0
        for wi, p in zip(w, points):
            if wi == 0.0:
                continue
            tangent = log_map(mean, p)
            update += wi * tangent
            # the log map norm is the geodesic distance to p
            t = sqrt_c * float(np.linalg.norm(tangent))
            if t > 1e-8:
                smoothness = max(smoothness, t / math.tanh(t))
        residual = float(np.linalg.norm(update))
        if residual < tol:
            return KarcherResult(mean, residual, it, True)
        mean = exp_map(mean, update / smoothness, ball_eps)
    return KarcherResult(mean, residual, max_iter, False)


def karcher_objective(m: PoincarePoint, points: Sequence[PoincarePoint], weights: Sequence[float]) -> float:
    """Weighted sum of squared geodesic distances, the quantity the mean minimizes."""
    w = np.asarray(weights, dtype=np.float64)
    return float(sum(wi * distance(m, p) ** 2 for wi, p in zip(w, points)))
