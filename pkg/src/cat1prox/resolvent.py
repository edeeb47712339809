"""The tan-sin resolvent R_{λf} x = argmin_y { f(y) + (1/λ) tan d(y,x) sin d(y,x) }.

The general solver runs projected Riemannian descent on the total objective
(min-norm element of the ε-active gradients, Armijo backtracking, projection
onto the feasible ball) and then polishes the active set with a Newton
solve of the KKT system.  Numerically the objective is handled in the scaled
form min(1, λ)·(f + pen/λ), whose two coefficients are both at most one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry as geo
from .errors import ConvergenceError, DomainError, InvalidInputError
from .functions import ConvexFunction, NegCosDistance
from .geometry import AdmissibleSpace, Point

STATIONARITY_TOL = 1e-10
MAX_ITER = 10_000
PROBE_RADIUS = 1e-4
N_PROBES = 32
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def penalty(t: float) -> float:
    """tan t · sin t, +inf from pi/2 on."""
    if t >= math.pi / 2:
        return math.inf
    return math.sin(t) ** 2 / math.cos(t)


def penalty_derivative(t: float) -> float:
    return math.sin(t) + math.tan(t) / math.cos(t)


def penalty_second_derivative(t: float) -> float:
    sec = 1.0 / math.cos(t)
    return math.cos(t) + sec**3 + math.tan(t) ** 2 * sec


@dataclass(frozen=True, eq=False)
class ResolventQuery:
    f: ConvexFunction
    lam: float
    x: Point
    space: AdmissibleSpace

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidInputError(f"lambda must be a positive real, got {self.lam!r}")
        if not self.space.contains(self.x):
            raise DomainError("query point x lies outside the space")


@dataclass(frozen=True, eq=False)
class ResolventResult:
    minimizer: Point
    objective: float
    penalty_distance: float
    cosine_C: float
    inner_residual: float
    lam: float = field(default=math.nan)
    method: str = "general"
    probe_gap: float = math.nan


def objective(f: ConvexFunction, lam: float, x: Point, y: Point) -> float:
    return f.value(y) + penalty(geo.distance(y, x)) / lam


def _result(f, lam, x, y, residual, method, probe_gap=math.nan) -> ResolventResult:
    d = geo.distance(y, x)
    return ResolventResult(y, objective(f, lam, x, y), d, math.cos(d), float(residual),
                           lam, method, probe_gap)


# ---------------------------------------------------------------------------
# geodesic fast path
# ---------------------------------------------------------------------------

def golden_section(g: Callable[[float], float], a: float, b: float, tol: float = 1e-12,
                   max_iter: int = 200) -> tuple[float, float]:
    """Shrink [a, b] around the minimizer of a unimodal ``g`` to width ``tol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + GOLDEN * (b - a)
            gd = g(d)
    return a, b


def _scales(lam: float) -> tuple[float, float]:
    return min(1.0, lam), min(1.0, 1.0 / lam)


def resolvent_on_geodesic(f: ConvexFunction, lam: float, x: Point, attractor: Point) -> ResolventResult:
    """Resolvent of a single-anchor NegCosDistance, which lies on [x, anchor].

    Golden-section search on t -> f(c(t)) + (1/λ) tan t sin t over [0, d(x, z)]
    brackets the minimizer; safeguarded Newton steps on the derivative then
    pin it down below the resolution of value comparisons.
    """
    if not isinstance(f, NegCosDistance):
        raise InvalidInputError(f"geodesic fast path needs NegCosDistance, got {f.kind}")
    if not lam > 0:
        raise InvalidInputError(f"lambda must be positive, got {lam!r}")
    z = f.anchor
    if geo.distance(z, attractor) > 1e-14:
        raise InvalidInputError("attractor must be the anchor of the NegCosDistance term")
    D = geo.distance(x, z)
    if D == 0.0:
        return _result(f, lam, x, np.array(x, dtype=float), 0.0, "geodesic")
    cf, cp = _scales(lam)

    def g(t):
        return cf * 2.0 * math.sin(0.5 * (D - t)) ** 2 + cp * penalty(t)

    def dg(t):
        return -cf * math.sin(D - t) + cp * penalty_derivative(t)

    a, b = golden_section(g, 0.0, D)
    t = 0.5 * (a + b)
    # value comparisons cannot localize t beyond ~1e-8, so the Newton
    # safeguard keeps the full sign bracket dg(0) < 0 < dg(D)
    lo, hi = 0.0, D
    for _ in range(100):
        slope = dg(t)
        if slope == 0.0:
            break
        if slope > 0:
            hi = t
        else:
            lo = t
        step = slope / (cf * math.cos(D - t) + cp * penalty_second_derivative(t))
        t_new = t - step
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if t_new == t or hi - lo <= 4e-16 * D:
            break
        t = t_new
    direction = geo.log_map(x, z) / D
    y = geo.exp_map(x, t * direction)
    return _result(f, lam, x, y, abs(dg(t)), "geodesic")


# ---------------------------------------------------------------------------
# general solver
# ---------------------------------------------------------------------------

def min_norm_in_hull(vectors: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm point of conv(vectors) and its barycentric weights.

    Exact by enumeration of supporting subsets; meant for a handful of vectors.
    """
    V = np.array(vectors)
    k = len(V)
    if k == 1:
        return V[0].copy(), np.ones(1)
    best, best_w, best_n = None, None, math.inf
    for size in range(1, k + 1):
        for subset in itertools.combinations(range(k), size):
            S = V[list(subset)]
            G = S @ S.T
            A = np.zeros((size + 1, size + 1))
            A[:size, :size] = G
            A[:size, size] = 1.0
            A[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
            lam = sol[:size]
            if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-9:
                continue
            lam = np.clip(lam, 0.0, None)
            lam /= lam.sum()
            p = lam @ S
            n = np.linalg.norm(p)
            if n < best_n - 1e-18:
                w = np.zeros(k)
                w[list(subset)] = lam
                best, best_w, best_n = p, w, n
    return best, best_w


class _Problem:
    """Scaled resolvent objective with its piece/constraint structure."""

    def __init__(self, f: ConvexFunction, lam: float, x: Point, space: AdmissibleSpace):
        self.f, self.lam, self.x, self.space = f, lam, x, space
        self.pieces = f.pieces()
        self.cf, self.cp = _scales(lam)
        con = f.constraint()
        self.center, self.radius = con if con is not None else (space.pole, space.radius)

    def project(self, y):
        return geo.project_to_cap(self.center, self.radius, y)

    def piece_values(self, y) -> np.ndarray:
        return np.array([self.cf * p.value(y) for p in self.pieces])

    def pen(self, y) -> float:
        return self.cp * penalty(geo.distance(y, self.x))

    def F(self, y) -> float:
        pv = self.piece_values(y)
        return (pv.max() if len(pv) else 0.0) + self.pen(y)

    def pen_grad(self, y) -> np.ndarray:
        c = float(np.dot(self.x, y))
        v = self.x - c * y
        v -= np.dot(v, y) * y
        return -self.cp * (1.0 + 1.0 / (c * c)) * v

    def piece_grad(self, i, y) -> np.ndarray:
        return self.cf * self.pieces[i].gradient(y)

    def h(self, y) -> float:
        return geo.distance(self.center, y) - self.radius

    def h_grad(self, y) -> np.ndarray:
        v = geo.log_map(y, self.center)
        n = np.linalg.norm(v)
        return -v / n if n > 0 else np.zeros_like(y)

    def candidates(self, y, eps) -> tuple[list[int], list[np.ndarray]]:
        gp = self.pen_grad(y)
        if not self.pieces:
            return [], [gp]
        pv = self.piece_values(y)
        active = [i for i in range(len(pv)) if pv[i] >= pv.max() - eps]
        return active, [self.piece_grad(i, y) + gp for i in active]

    def residual_vector(self, w, y) -> np.ndarray:
        # drop the outward normal component when the boundary blocks descent
        if self.h(y) >= -1e-10:
            n = self.h_grad(y)
            if np.dot(w, n) < 0:
                return w - np.dot(w, n) * n
        return w


def _descend(prob: _Problem, y: Point, max_iter: int):
    eps = 1e-3
    step = 0.1
    res = math.inf
    Fy = prob.F(y)
    for it in range(max_iter):
        _, grads = prob.candidates(y, eps)
        w, _ = min_norm_in_hull(grads)
        res = float(np.linalg.norm(prob.residual_vector(w, y)))
        smooth = len(prob.pieces) <= 1
        if res <= 1e-9 and (smooth or eps <= 1e-9):
            return y, res, it, True
        if res <= eps and eps > 1e-12 and not smooth:
            eps *= 0.1
            continue
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return y, res, it, True
        s = min(step * 4.0, 0.5 / nw)
        accepted = False
        while s * nw > 1e-16:
            trial = prob.project(geo.exp_map(y, -s * w))
            delta = geo.distance(y, trial)
            Ft = prob.F(trial)
            if Ft <= Fy - 1e-4 * delta * delta / s and delta > 0:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            if len(prob.pieces) > 1 and eps > 1e-12:
                eps *= 0.1
                continue
            return y, res, it, True
        y, Fy, step = trial, Ft, s
    return y, res, max_iter, False


def _kkt_residual(prob, y, B, active, mu, bnd, nu):
    gp = prob.pen_grad(y)
    stat = gp.copy() if not active else sum(m * (prob.piece_grad(i, y) + gp) for i, m in zip(active, mu))
    if bnd:
        stat = stat + nu * prob.h_grad(y)
    parts = [B @ stat]
    if len(active) > 1:
        pv = prob.piece_values(y)
        parts.append(np.array([pv[i] - pv[active[0]] for i in active[1:]]))
    if bnd:
        parts.append(np.array([prob.h(y)]))
    if active:
        parts.append(np.array([np.sum(mu) - 1.0]))
    return np.concatenate(parts), float(np.linalg.norm(B @ stat))


def _newton_polish(prob: _Problem, y0: Point, active: list[int], bnd: bool, iters: int = 30):
    k = len(active)
    mu = np.full(k, 1.0 / k) if k else np.zeros(0)
    nu = 0.0
    y = y0
    best = None
    for _ in range(iters):
        B = geo.tangent_basis(y)
        r, stat = _kkt_residual(prob, y, B, active, mu, bnd, nu)
        rn = float(np.linalg.norm(r))
        if best is None or rn < best[0]:
            best = (rn, y, mu.copy(), nu, stat)
        if rn <= 1e-15:
            break
        m = B.shape[0]
        cols = []
        h = 1e-7
        for j in range(m):
            yp = geo.exp_map(y, h * B[j])
            ym = geo.exp_map(y, -h * B[j])
            rp, _ = _kkt_residual(prob, yp, B, active, mu, bnd, nu)
            rm, _ = _kkt_residual(prob, ym, B, active, mu, bnd, nu)
            cols.append((rp - rm) / (2 * h))
        gp = prob.pen_grad(y)
        for idx, i in enumerate(active):
            col = np.zeros_like(r)
            col[:m] = B @ (prob.piece_grad(i, y) + gp)
            col[-1] = 1.0
            cols.append(col)
        if bnd:
            col = np.zeros_like(r)
            col[:m] = B @ prob.h_grad(y)
            cols.append(col)
        J = np.column_stack(cols)
        delta = np.linalg.lstsq(J, -r, rcond=None)[0]
        du = delta[:m]
        nd = np.linalg.norm(du)
        if nd > 0.1:
            delta *= 0.1 / nd
            du = delta[:m]
        y = geo.exp_map(y, B.T @ du)
        mu = mu + delta[m:m + k]
        if bnd:
            nu = nu + delta[m + k]
    return best


def _valid_polish(prob: _Problem, cand, active, bnd, F_ref) -> Optional[tuple]:
    rn, y, mu, nu, stat = cand
    if np.any(mu < -1e-10) or (bnd and nu < -1e-10):
        return None
    if prob.h(y) > 1e-12:
        return None
    if active:
        pv = prob.piece_values(y)
        if pv.max() > max(pv[i] for i in active) + 1e-12:
            return None
    Fy = prob.F(y)
    if Fy > F_ref + 1e-9:
        return None
    return Fy, y, stat


def _probe_gap(f, lam, x, y, prob: _Problem) -> float:
    rng = np.random.default_rng(0)
    base = objective(f, lam, x, y)
    B = geo.tangent_basis(y)
    coeffs = rng.standard_normal((N_PROBES, B.shape[0]))
    coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    probes = [prob.project(geo.exp_map(y, PROBE_RADIUS * (c @ B))) for c in coeffs]
    known = f.known_minimizer
    if known is not None:
        probes.append(known)
    return min(objective(f, lam, x, p) for p in probes) - base


def resolvent(q: ResolventQuery, max_iter: int = MAX_ITER, tol: float = STATIONARITY_TOL) -> ResolventResult:
    """General solver for R_{λf} x on the admissible ball."""
    f, lam, x, space = q.f, q.lam, np.asarray(q.x, dtype=float), q.space
    prob = _Problem(f, lam, x, space)
    y0 = x if prob.h(x) <= geo.CONTAINS_TOL else prob.project(x)
    if not math.isfinite(f.value(y0)):
        raise DomainError(f"{f.kind} is not finite at the starting point")

    y, res, iters, converged = _descend(prob, y0, max_iter)
    F_desc = prob.F(y)

    # active-set polish
    pv = prob.piece_values(y)
    act_tol = 1e-6
    cand_active = [i for i in range(len(pv)) if pv[i] >= pv.max() - act_tol] if len(pv) else []
    bnd_options = [True, False] if prob.h(y) >= -act_tol else [False]
    best = None
    subsets = [list(s) for r in range(len(cand_active), 0, -1)
               for s in itertools.combinations(cand_active, r)] or [[]]
    for active in subsets:
        for bnd in bnd_options:
            polished = _newton_polish(prob, y, active, bnd)
            ok = _valid_polish(prob, polished, active, bnd, F_desc)
            if ok is not None and ok[2] <= tol and (best is None or ok[0] < best[0] - 1e-15):
                best = ok
        if best is not None:
            break
    if best is not None:
        y, res = best[1], best[2]
    elif not converged or res > tol:
        raise ConvergenceError(
            f"resolvent solver stalled (residual {res:.3e} after {iters} iterations)", best=y, residual=res)
    return _result(f, lam, x, y, res, "general", _probe_gap(f, lam, x, y, prob))


def solve(f: ConvexFunction, lam: float, x: Point, space: AdmissibleSpace, fast_path: bool = True) -> ResolventResult:
    """Dispatch: geodesic fast path for single-anchor NegCosDistance, else the general solver."""
    if fast_path and isinstance(f, NegCosDistance):
        return resolvent_on_geodesic(f, lam, x, f.anchor)
    return resolvent(ResolventQuery(f, lam, x, space))


# ---------------------------------------------------------------------------
# resolvent inequality certificates (signed residuals, lhs - rhs)
# ---------------------------------------------------------------------------

def _cos(a, b) -> float:
    return math.cos(geo.distance(a, b))


def check_quasi_firm(q: ResolventQuery, u: Point, result: Optional[ResolventResult] = None) -> float:
    """cos d(Rx, x) cos d(u, Rx) - cos d(u, x), for u in Argmin f."""
    r = result if result is not None else solve(q.f, q.lam, q.x, q.space)
    return r.cosine_C * _cos(u, r.minimizer) - _cos(u, q.x)


def check_firm_pair(q1: ResolventQuery, q2: ResolventQuery,
                    r1: Optional[ResolventResult] = None, r2: Optional[ResolventResult] = None) -> float:
    """Two-point firmness inequality for R_{λf} x and R_{μf} y, implemented verbatim."""
    r1 = r1 if r1 is not None else solve(q1.f, q1.lam, q1.x, q1.space)
    r2 = r2 if r2 is not None else solve(q2.f, q2.lam, q2.x, q2.space)
    lam, mu = q1.lam, q2.lam
    cx, cy = r1.cosine_C, r2.cosine_C
    a = lam * cx**2 * (1 + cy**2)
    b = mu * cy**2 * (1 + cx**2)
    lhs = (a * cy + b * cx) * _cos(r1.minimizer, r2.minimizer)
    rhs = a * _cos(r1.minimizer, q2.x) + b * _cos(r2.minimizer, q1.x)
    return lhs - rhs


def check_firm_single(f, x, y, space) -> float:
    """The λ = μ = 1 form of the firmness inequality, from its own formula."""
    rx, ry = solve(f, 1.0, x, space), solve(f, 1.0, y, space)
    cx, cy = rx.cosine_C, ry.cosine_C
    lhs = (cx**2 * (1 + cy**2) * cy + cy**2 * (1 + cx**2) * cx) * _cos(rx.minimizer, ry.minimizer)
    rhs = cx**2 * (1 + cy**2) * _cos(rx.minimizer, y) + cy**2 * (1 + cx**2) * _cos(ry.minimizer, x)
    return lhs - rhs


def check_sq_firm(q: ResolventQuery, u: Point, result: Optional[ResolventResult] = None) -> float:
    """(π/2)(1/C² + 1)(C cos d(u, Rx) - cos d(u, x)) - λ(f(Rx) - f(u)), u in Argmin f."""
    r = result if result is not None else solve(q.f, q.lam, q.x, q.space)
    C = r.cosine_C
    lhs = 0.5 * math.pi * (1.0 / C**2 + 1.0) * (C * _cos(u, r.minimizer) - _cos(u, q.x))
    # f(Rx) - f(u) is shift invariant, so the stored (shifted) values are used as is
    gap = q.f.value(r.minimizer) - q.f.value(u)
    return lhs - q.lam * gap
