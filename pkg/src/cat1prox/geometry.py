"""Spherical geometry on S^{n-1} and the admissible ball X.

Points are plain float64 numpy vectors of unit norm.  Every operation is a
pure function; nothing is mutated in place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeodesicError, InvalidInputError

Point = np.ndarray

NORM_TOL = 1e-10
ANTIPODAL_GAP = 1e-8
TANGENT_TOL = 1e-9
CONTAINS_TOL = 1e-12
DEFAULT_RADIUS = math.pi / 4 - 0.01
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def make_point(coords) -> Point:
    """Normalize ``coords`` onto the unit sphere."""
    p = np.array(coords, dtype=np.float64).reshape(-1)
    if p.size < 2:
        raise InvalidInputError(f"points need ambient dimension >= 2, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("point has non-finite coordinates")
    nrm = np.linalg.norm(p)
    if nrm == 0.0:
        raise InvalidInputError("cannot normalize the zero vector")
    return p / nrm


def _pt(x) -> Point:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidInputError(f"expected a 1-d point with n >= 2, got shape {x.shape}")
    if abs(np.dot(x, x) - 1.0) > NORM_TOL:
        raise InvalidInputError(f"point is not unit norm (|x|^2 = {np.dot(x, x)!r})")
    return x


def _pair(x, y):
    x, y = _pt(x), _pt(y)
    if x.size != y.size:
        raise InvalidInputError(f"dimension mismatch: {x.size} vs {y.size}")
    return x, y


def _renormalize(p: Point) -> Point:
    return p / np.linalg.norm(p)


def distance(x: Point, y: Point) -> float:
    """Great-circle distance arccos<x, y>.

    Evaluated as 2*atan2(|x - y|, |x + y|), which equals the clamped arccos
    for unit vectors but keeps full relative precision for nearby points.
    """
    x, y = _pair(x, y)
    return 2.0 * math.atan2(np.linalg.norm(x - y), np.linalg.norm(x + y))


def pairwise_cos(points: np.ndarray, ref: Point) -> np.ndarray:
    """Clamped inner products of each row of ``points`` with ``ref``."""
    return np.clip(np.asarray(points) @ ref, -1.0, 1.0)


def distances_to(points: np.ndarray, ref: Point) -> np.ndarray:
    """Vectorized distance from every row of ``points`` to ``ref``."""
    points = np.atleast_2d(points)
    a = np.linalg.norm(points - ref, axis=1)
    b = np.linalg.norm(points + ref, axis=1)
    return 2.0 * np.arctan2(a, b)


def _check_not_antipodal(d: float) -> None:
    if d > math.pi - ANTIPODAL_GAP:
        raise DegenerateGeodesicError(f"endpoints are (nearly) antipodal: d = {d!r}")


def log_map(base: Point, target: Point) -> np.ndarray:
    """Tangent vector at ``base`` pointing to ``target`` with norm d(base, target)."""
    base, target = _pair(base, target)
    d = distance(base, target)
    if d == 0.0:
        return np.zeros_like(base)
    _check_not_antipodal(d)
    u = target - np.dot(base, target) * base
    u = u - np.dot(u, base) * base
    nu = np.linalg.norm(u)
    if nu == 0.0:
        return np.zeros_like(base)
    return (d / nu) * u


def exp_map(base: Point, tangent) -> Point:
    base = _pt(base)
    v = np.asarray(tangent, dtype=np.float64)
    if v.shape != base.shape:
        raise InvalidInputError(f"tangent shape {v.shape} does not match point {base.shape}")
    if abs(np.dot(v, base)) > TANGENT_TOL:
        raise InvalidInputError(f"vector is not tangent at base (<v, base> = {np.dot(v, base)!r})")
    t = np.linalg.norm(v)
    if t >= math.pi:
        raise InvalidInputError(f"tangent norm {t!r} is not below pi")
    if t == 0.0:
        return base.copy()
    return _renormalize(math.cos(t) * base + (math.sin(t) / t) * v)


def interpolate(x: Point, y: Point, alpha: float) -> Point:
    """The point alpha*x (+) (1 - alpha)*y, i.e. c((1 - alpha) d(x, y)) on [x, y]."""
    x, y = _pair(x, y)
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha!r}")
    _check_not_antipodal(distance(x, y))
    if alpha == 1.0:
        return x.copy()
    if alpha == 0.0:
        return y.copy()
    return exp_map(x, (1.0 - alpha) * log_map(x, y))


@dataclass(frozen=True)
class GeodesicSegment:
    start: Point
    end: Point
    length: float

    def point_at(self, t: float) -> Point:
        """Point at arclength ``t`` from ``start``."""
        if not -1e-15 <= t <= self.length + 1e-15:
            raise InvalidInputError(f"arclength {t!r} outside [0, {self.length!r}]")
        if self.length == 0.0:
            return self.start.copy()
        v = log_map(self.start, self.end)
        return exp_map(self.start, (t / self.length) * v)


def segment(x: Point, y: Point) -> GeodesicSegment:
    x, y = _pair(x, y)
    d = distance(x, y)
    _check_not_antipodal(d)
    return GeodesicSegment(x, y, d)


def tangent_basis(p: Point) -> np.ndarray:
    """Rows form an orthonormal basis of the tangent space at ``p``."""
    p = _pt(p)
    _, _, vt = np.linalg.svd(p.reshape(1, -1))
    basis = vt[1:]
    # svd sign conventions vary; orient for reproducible grids
    for i in range(basis.shape[0]):
        j = int(np.argmax(np.abs(basis[i])))
        if basis[i, j] < 0:
            basis[i] = -basis[i]
    return basis


def offset_point(center: Point, dist: float, angle: float = 0.0) -> Point:
    """Point at distance ``dist`` from ``center`` in tangent direction ``angle``."""
    basis = tangent_basis(center)
    if basis.shape[0] == 1:
        direction = basis[0] * (1.0 if math.cos(angle) >= 0 else -1.0)
    else:
        direction = math.cos(angle) * basis[0] + math.sin(angle) * basis[1]
    return exp_map(center, dist * direction)


def project_to_cap(center: Point, radius: float, p: Point) -> Point:
    """Metric projection onto the closed geodesic ball B(center, radius)."""
    center, p = _pair(center, p)
    d = distance(center, p)
    if d <= radius + CONTAINS_TOL:
        return p.copy()
    _check_not_antipodal(d)
    v = log_map(center, p)
    return exp_map(center, (radius / d) * v)


@dataclass(frozen=True, eq=False)
class AdmissibleSpace:
    """Closed geodesic ball of radius < pi/4 about ``pole``.

    Its diameter is below pi/2, so every pair of members is at distance
    < pi/2 and the ball is an admissible complete CAT(1) space.
    """

    pole: Point
    radius: float = DEFAULT_RADIUS
    ambient_dim: int = field(default=0)

    def __post_init__(self):
        pole = make_point(self.pole)
        object.__setattr__(self, "pole", pole)
        if self.ambient_dim == 0:
            object.__setattr__(self, "ambient_dim", pole.size)
        if self.ambient_dim != pole.size:
            raise InvalidInputError(f"pole has dimension {pole.size}, expected {self.ambient_dim}")
        if not 0.0 < self.radius < math.pi / 4:
            raise InvalidInputError(f"radius must lie in (0, pi/4), got {self.radius!r}")

    @classmethod
    def default(cls, ambient_dim: int = 3, radius: float = DEFAULT_RADIUS) -> "AdmissibleSpace":
        pole = np.zeros(ambient_dim)
        pole[-1] = 1.0
        return cls(pole, radius)

    def contains(self, p: Point) -> bool:
        return contains(self, p)

    def project(self, p: Point) -> Point:
        return project_to_ball(self, p)


def contains(space: AdmissibleSpace, p: Point) -> bool:
    return distance(space.pole, p) <= space.radius + CONTAINS_TOL


def project_to_ball(space: AdmissibleSpace, p: Point) -> Point:
    return project_to_cap(space.pole, space.radius, p)


def sample_points(space: AdmissibleSpace, rng: np.random.Generator, size: int) -> np.ndarray:
    """Random points of X, area-uniform on S^2 caps; returns shape (size, n)."""
    n = space.ambient_dim
    g = rng.standard_normal((size, n))
    g -= np.outer(g @ space.pole, space.pole)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    u = rng.random(size)
    t = np.arccos(1.0 - u * (1.0 - math.cos(space.radius)))
    pts = np.cos(t)[:, None] * space.pole + np.sin(t)[:, None] * g
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def cap_grid(center: Point, radius: float, resolution: float) -> np.ndarray:
    """Quasi-uniform grid of the closed cap B(center, radius) on S^2.

    Fibonacci-spiral nodes with spacing about ``resolution``, plus the center
    and a ring of nodes exactly on the boundary circle.
    """
    center = _pt(center)
    if center.size != 3:
        raise NotImplementedError("cap grids are only available on S^2 (ambient_dim = 3)")
    e1, e2 = tangent_basis(center)
    area = 2.0 * math.pi * (1.0 - math.cos(radius))
    n = max(int(math.ceil(area / resolution**2)), 1)
    i = np.arange(n) + 0.5
    h = 1.0 - (1.0 - math.cos(radius)) * i / n
    s = np.sqrt(np.clip(1.0 - h * h, 0.0, 1.0))
    phi = GOLDEN_ANGLE * np.arange(n)
    inner = h[:, None] * center + s[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
    m = max(int(math.ceil(2.0 * math.pi * math.sin(radius) / resolution)), 8)
    psi = 2.0 * math.pi * np.arange(m) / m
    ring = math.cos(radius) * center + math.sin(radius) * (
        np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2
    )
    pts = np.vstack([center[None, :], inner, ring])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def pattern_search(obj, start: Point, space: AdmissibleSpace, step: float,
                   min_step: float = 1e-10, max_iter: int = 20_000, project=None) -> Point:
    """Derivative-free compass search on S^2, kept inside the ball X.

    Eight directions per poll, rotated by the golden angle after every
    contraction; only strict improvements are accepted.  ``project`` replaces
    the projection onto X (e.g. by one onto a smaller feasible cap).
    """
    project = project or (lambda q: project_to_ball(space, q))
    p, fp = start, obj(start)
    shrinks = 0
    for _ in range(max_iter):
        if step < min_step:
            break
        basis = tangent_basis(p)
        offset = shrinks * GOLDEN_ANGLE
        improved = False
        for k in range(8):
            ang = offset + k * math.pi / 4
            direction = math.cos(ang) * basis[0] + math.sin(ang) * basis[1]
            trial = project(exp_map(p, step * direction))
            ft = obj(trial)
            if ft < fp:
                p, fp, improved = trial, ft, True
                break
        if not improved:
            step *= 0.5
            shrinks += 1
    return p
