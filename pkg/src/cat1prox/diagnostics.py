"""Trace analysis: comparison inequalities, asymptotic centers, the g-function.

Every ``*_residual`` helper returns lhs - rhs of an inequality that should hold,
so a healthy value is >= 0 up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from . import geometry as geo
from .algorithms import IterationTrace
from .errors import InvalidInputError
from .functions import COARSE_RESOLUTION, ConvexFunction
from .geometry import AdmissibleSpace, Point

MARGIN = 1e-6
PASS_TOL = 1e-8
REFINE_STEP = 1e-10
_CHUNK = 4096


def _cosd(a: Point, b: Point) -> float:
    return math.cos(geo.distance(a, b))


# ---------------------------------------------------------------------------
# three-point comparison inequalities
# ---------------------------------------------------------------------------

def cat1_residual(x1: Point, x2: Point, x3: Point, alpha: float) -> float:
    """cos d(αx1 ⊕ (1-α)x2, x3) - α cos d(x1, x3) - (1-α) cos d(x2, x3)."""
    m = geo.interpolate(x1, x2, alpha)
    return _cosd(m, x3) - alpha * _cosd(x1, x3) - (1.0 - alpha) * _cosd(x2, x3)


def ks_residual(x1: Point, x2: Point, x3: Point, alpha: float) -> float:
    """Sine-weighted comparison inequality (exact on a great circle)."""
    m = geo.interpolate(x1, x2, alpha)
    d12 = geo.distance(x1, x2)
    lhs = _cosd(m, x3) * math.sin(d12)
    rhs = _cosd(x1, x3) * math.sin(alpha * d12) + _cosd(x2, x3) * math.sin((1.0 - alpha) * d12)
    return lhs - rhs


def halpern_beta(d12: float, alpha: float) -> float:
    if d12 == 0.0:
        return alpha
    return 1.0 - math.sin((1.0 - alpha) * d12) / math.sin(d12)


def halpern_lemma_residual(x1: Point, x2: Point, x3: Point, alpha: float) -> float:
    """Anchor-weighted comparison inequality used for Halpern steps (x1 the anchor)."""
    m = geo.interpolate(x1, x2, alpha)
    d12 = geo.distance(x1, x2)
    beta = halpern_beta(d12, alpha)
    denom = math.sin(d12) * math.tan(0.5 * alpha * d12) + math.cos(d12)
    rhs = (1.0 - beta) * _cosd(x2, x3) + beta * _cosd(x1, x3) / denom
    return _cosd(m, x3) - rhs


# ---------------------------------------------------------------------------
# asymptotic centers and boundedness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticCenterEstimate:
    center: Point
    radius_estimate: float
    tail_start: int
    grid_resolution: float


def _tail(points, tail_start: Optional[int]) -> tuple[np.ndarray, int]:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(points) == 0:
        raise InvalidInputError("empty point sequence")
    if tail_start is None:
        tail_start = len(pts) // 2
    if not 0 <= tail_start < len(pts):
        raise InvalidInputError(f"tail_start {tail_start} leaves an empty tail of {len(pts)} points")
    return pts[tail_start:], tail_start


def _max_dist(tail: np.ndarray):
    def obj(y):
        return float(geo.distances_to(tail, y).max())
    return obj


def enclosing_cap_center(points: np.ndarray) -> Optional[Point]:
    """Center of the smallest spherical cap containing ``points``.

    Maximizing min_k <c, p_k> over unit c is the least-distance program
    min |w| s.t. <w, p_k> >= 1 (c = w/|w|), solved through its NNLS dual.
    Returns None when the points do not fit in an open hemisphere.
    """
    P = np.atleast_2d(points)
    n = P.shape[1]
    E = np.vstack([P.T, np.ones(len(P))])
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    u, _ = nnls(E, rhs, maxiter=50 * len(P) + 100)
    r = E @ u - rhs
    # r[n] = -cos²R/(1 + cos²R) for a cap of radius R; ~0 means no hemisphere fits
    if -r[n] <= 1e-12:
        return None
    w = -r[:n] / r[n]
    nw = np.linalg.norm(w)
    return None if nw == 0 else w / nw


def asymptotic_center(points, tail_start: Optional[int], space: AdmissibleSpace,
                      resolution: float = COARSE_RESOLUTION) -> AsymptoticCenterEstimate:
    """Grid-plus-refinement minimizer of y -> max_{k >= tail_start} d(y, p_k).

    The default window is the last half of the sequence.  Compass search
    stalls on the kinks of a max of distances, so the refinement also tries
    the exact enclosing-cap center and keeps whichever is better.
    """
    tail, start = _tail(points, tail_start)
    grid = geo.cap_grid(space.pole, space.radius, resolution)
    # max distance <=> min cosine; evaluate in chunks to bound memory
    worst = np.empty(len(grid))
    for i in range(0, len(grid), _CHUNK):
        worst[i:i + _CHUNK] = (grid[i:i + _CHUNK] @ tail.T).min(axis=1)
    best = grid[int(np.argmax(worst))]
    obj = _max_dist(tail)
    center = geo.pattern_search(obj, best, space, step=resolution, min_step=REFINE_STEP)
    cap = enclosing_cap_center(tail)
    if cap is not None:
        cap = space.project(cap)
        if obj(cap) <= obj(center):
            center = cap
    return AsymptoticCenterEstimate(center, obj(center), start, resolution)


@dataclass(frozen=True)
class BoundednessCertificate:
    spherically_bounded_estimate: bool
    tail_inf_sup: float
    sup_step_distance: float
    tail_start: int
    threshold: float = math.pi / 2
    margin: float = MARGIN

    @property
    def steps_below_threshold(self) -> bool:
        return self.sup_step_distance < self.threshold


def boundedness_certificate(trace: IterationTrace, tail_start: Optional[int], space: AdmissibleSpace,
                            resolution: float = COARSE_RESOLUTION, threshold: float = math.pi / 2,
                            margin: float = MARGIN) -> BoundednessCertificate:
    """Finite-window evidence that the resolvent points are spherically bounded."""
    if not trace.resolvent_points:
        raise InvalidInputError("trace has no resolvent points")
    ac = asymptotic_center(trace.resolvent_points, tail_start, space, resolution)
    sup_step = float(max(s.step_dist for s in trace.steps))
    return BoundednessCertificate(bool(ac.radius_estimate < threshold - margin), ac.radius_estimate,
                                  sup_step, ac.tail_start, threshold, margin)


# ---------------------------------------------------------------------------
# the g-function of a weighted resolvent sequence
# ---------------------------------------------------------------------------

def mann_beta_weights(trace: IterationTrace) -> np.ndarray:
    """β_n = (1 - α_n) λ_n C² / (1 + C²) with C = cos d(z_n, x_n)."""
    a = trace.column("alpha")
    lam = trace.column("lam")
    C = np.cos(trace.column("step_dist"))
    return (1.0 - a) * lam * C**2 / (1.0 + C**2)


@dataclass(frozen=True)
class GFunctionEstimate:
    beta_weights: np.ndarray
    sigma_n: np.ndarray
    maximizer: Point
    max_value: float
    grid_max_value: float
    direction: np.ndarray = field(repr=False)

    def value(self, y: Point) -> float:
        return float(np.dot(y, self.direction))

    def values(self, ys: np.ndarray) -> np.ndarray:
        return np.asarray(ys) @ self.direction


def g_maximizer(resolvent_points, beta_weights, space: AdmissibleSpace,
                resolution: float = COARSE_RESOLUTION) -> GFunctionEstimate:
    """Maximize g_N(y) = (1/σ_N) Σ β_k cos d(y, z_k) over X.

    g_N(y) = <y, w>/σ_N with w = Σ β_k z_k, so its maximizer over the ball is
    the projection of w/|w| onto X.  A grid search is kept as a cross-check.
    """
    z = np.atleast_2d(np.asarray(resolvent_points, dtype=float))
    beta = np.asarray(beta_weights, dtype=float)
    if len(beta) != len(z) or len(z) == 0:
        raise InvalidInputError("need one positive weight per resolvent point")
    if not np.all(beta > 0):
        raise InvalidInputError("g-function weights must be positive")
    sigma = np.cumsum(beta)
    w = (beta[:, None] * z).sum(axis=0) / sigma[-1]
    peak = space.project(w / np.linalg.norm(w))
    grid_max = math.nan
    if space.ambient_dim == 3:
        grid = geo.cap_grid(space.pole, space.radius, resolution)
        grid_max = float((grid @ w).max())
    return GFunctionEstimate(beta, sigma, peak, float(np.dot(peak, w)), grid_max, w)


def g_lipschitz_residuals(g: GFunctionEstimate, ys: np.ndarray, yps: np.ndarray) -> np.ndarray:
    """d(y, y') - |g(y) - g(y')| on sample pairs."""
    d = 2.0 * np.arctan2(np.linalg.norm(ys - yps, axis=1), np.linalg.norm(ys + yps, axis=1))
    return d - np.abs(g.values(ys) - g.values(yps))


def g_concavity_residuals(g: GFunctionEstimate, ys: np.ndarray, yps: np.ndarray,
                          alphas: np.ndarray) -> np.ndarray:
    """g(αy ⊕ (1-α)y') - α g(y) - (1-α) g(y') on sample triples."""
    mids = np.array([geo.interpolate(y, yp, a) for y, yp, a in zip(ys, yps, alphas)])
    return g.values(mids) - alphas * g.values(ys) - (1.0 - alphas) * g.values(yps)


# ---------------------------------------------------------------------------
# per-step inequality chains along a trace
# ---------------------------------------------------------------------------

@dataclass
class TraceInequalityReport:
    residuals: dict
    tol: float = PASS_TOL

    @property
    def minima(self) -> dict:
        return {k: (float(np.min(v)) if len(v) else 0.0) for k, v in self.residuals.items()}

    @property
    def min_residual(self) -> float:
        return min(self.minima.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.min_residual >= -self.tol


def check_trace_inequalities(trace: IterationTrace, f: ConvexFunction, u: Point,
                             tol: float = PASS_TOL) -> TraceInequalityReport:
    """Residuals of the per-step chains behind the convergence proofs.

    For Mann and PPA traces u is a minimizer; for Halpern traces u = Pv.
    """
    n = trace.n_steps
    xs, zs = trace.iterates, trace.resolvent_points
    du_x = np.array([geo.distance(u, x) for x in xs])
    du_z = np.array([geo.distance(u, z) for z in zs])
    C = np.cos(trace.column("step_dist")) if n else np.zeros(0)
    alpha = trace.column("alpha") if n else np.zeros(0)
    res = {"quasi_firm": C * np.cos(du_z) - np.cos(du_x[:n])}
    if trace.algorithm == "halpern":
        v = trace.anchor
        duv = geo.distance(u, v)
        res["chain"] = du_x[:n] - np.maximum(du_z, trace.column("step_dist") if n else du_z)
        res["anchor_cat1"] = np.cos(du_x[1:]) - (alpha * math.cos(duv) + (1 - alpha) * np.cos(du_z))
        lemma = []
        for k in range(n):
            dzv = geo.distance(zs[k], v)
            beta = halpern_beta(dzv, alpha[k])
            denom = math.sin(dzv) * math.tan(0.5 * alpha[k] * dzv) + math.cos(dzv)
            rhs = (1 - beta) * math.cos(du_x[k]) + beta * math.cos(duv) / denom
            lemma.append(math.cos(du_x[k + 1]) - rhs)
        res["anchor_lemma"] = np.array(lemma)
        res["bounded"] = max(duv, du_x[0]) - du_x
    else:
        res["cat1_step"] = np.cos(du_x[1:]) - (alpha * np.cos(du_x[:n]) + (1 - alpha) * np.cos(du_z))
        res["fejer"] = du_x[:n] - du_x[1:]
        fx = np.array([f.value(x) for x in xs])
        with np.errstate(invalid="ignore"):
            mono = fx[:n] - fx[1:]
        res["f_monotone"] = np.where(np.isnan(mono), 0.0, mono)
    return TraceInequalityReport(res, tol)
