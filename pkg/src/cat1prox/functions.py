"""Catalog of proper lsc geodesically convex functions on X.

Every catalog member restricted to X is a pointwise maximum of "pieces"
Σ_j w_j (1 - cos d(y, p_j)), optionally plus the indicator of one geodesic
ball.  The resolvent solver works from that piece representation; the
per-kind ``value`` methods evaluate the defining formulas directly.

NegCos-type terms are stored shifted, 1 - cos d instead of -cos d.  The
shift does not move minimizers or resolvents and is exposed as ``shift``
(f_unshifted = f - shift).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry as geo
from .errors import DomainError, InvalidInputError
from .geometry import AdmissibleSpace, Point

COARSE_RESOLUTION = 5e-3


def _half_sq(points: np.ndarray, p: Point) -> np.ndarray:
    # 1 - cos d(y, p) == |y - p|^2 / 2 for unit vectors, without cancellation
    diff = np.atleast_2d(points) - p
    return 0.5 * np.einsum("ij,ij->i", diff, diff)


@dataclass(frozen=True, eq=False)
class Piece:
    """Σ_j w_j (1 - cos d(y, p_j)); smooth on the sphere."""

    weights: np.ndarray
    anchors: np.ndarray

    @property
    def q(self) -> np.ndarray:
        return self.weights @ self.anchors

    def value(self, y: Point) -> float:
        return float(sum(w * _half_sq(y, p)[0] for w, p in zip(self.weights, self.anchors)))

    def values(self, ys: np.ndarray) -> np.ndarray:
        out = np.zeros(len(np.atleast_2d(ys)))
        for w, p in zip(self.weights, self.anchors):
            out += w * _half_sq(ys, p)
        return out

    def gradient(self, y: Point) -> np.ndarray:
        """Riemannian gradient at ``y`` (tangent vector)."""
        # Σ w (p - y) equals q - W y; its tangent part is q - <q, y> y, but the
        # difference form vanishes exactly at a single anchor
        diff = self.weights @ (self.anchors - y)
        return -(diff - np.dot(diff, y) * y)


class ConvexFunction:
    kind: str = "abstract"

    # --- contract -------------------------------------------------------
    def value(self, y: Point) -> float:
        raise NotImplementedError

    def values(self, ys: np.ndarray) -> np.ndarray:
        return np.array([self.value(y) for y in np.atleast_2d(ys)])

    def pieces(self) -> list[Piece]:
        """Smooth pieces whose pointwise max is f on its domain (empty for pure indicators)."""
        raise NotImplementedError

    def constraint(self) -> Optional[tuple[Point, float]]:
        """(center, radius) of the indicator ball, if any."""
        return None

    @property
    def shift(self) -> float:
        return 0.0

    @property
    def known_minimizer(self) -> Optional[Point]:
        return None

    def anchor_points(self) -> list[Point]:
        return []

    def to_dict(self) -> dict:
        raise NotImplementedError

    # --- derived --------------------------------------------------------
    def is_finite_at(self, y: Point) -> bool:
        return math.isfinite(self.value(y))

    def project_to_argmin(self, v: Point) -> Optional[Point]:
        """Metric projection onto Argmin f when it has a closed form."""
        return self.known_minimizer

    def validate(self, space: AdmissibleSpace) -> None:
        for p in self.anchor_points():
            if not space.contains(p):
                raise DomainError(f"{self.kind}: anchor {p} lies outside the space")
        c = self.constraint()
        if c is not None:
            center, radius = c
            if geo.distance(space.pole, center) + radius > space.radius + geo.CONTAINS_TOL:
                raise DomainError(f"{self.kind}: indicator ball is not contained in the space")


def _anchor_array(points) -> np.ndarray:
    arr = np.array([geo.make_point(p) for p in points])
    if arr.ndim != 2 or len(arr) == 0:
        raise InvalidInputError("at least one anchor point is required")
    return arr


@dataclass(frozen=True, eq=False)
class NegCosDistance(ConvexFunction):
    anchor: Point
    kind = "NegCosDistance"

    def __post_init__(self):
        object.__setattr__(self, "anchor", geo.make_point(self.anchor))

    def value(self, y):
        return float(_half_sq(y, self.anchor)[0])

    def values(self, ys):
        return _half_sq(ys, self.anchor)

    def pieces(self):
        return [Piece(np.ones(1), self.anchor[None, :])]

    @property
    def shift(self):
        return 1.0

    @property
    def known_minimizer(self):
        return self.anchor

    def anchor_points(self):
        return [self.anchor]

    def to_dict(self):
        return {"kind": self.kind, "anchor": self.anchor.tolist()}


@dataclass(frozen=True, eq=False)
class WeightedNegCos(ConvexFunction):
    anchors: np.ndarray
    weights: np.ndarray
    kind = "WeightedNegCos"

    def __post_init__(self):
        a = _anchor_array(self.anchors)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.size != len(a):
            raise InvalidInputError("one weight per anchor is required")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise InvalidInputError("weights must be finite and strictly positive")
        object.__setattr__(self, "anchors", a)
        object.__setattr__(self, "weights", w)

    def value(self, y):
        return float(self.values(y)[0])

    def values(self, ys):
        return Piece(self.weights, self.anchors).values(ys)

    def pieces(self):
        return [Piece(self.weights, self.anchors)]

    @property
    def shift(self):
        return float(self.weights.sum())

    @property
    def known_minimizer(self):
        # f = W - <q, y>, minimized on the sphere at q/|q|, which lies in the
        # spherical hull of the anchors and hence in X
        return geo.make_point(self.weights @ self.anchors)

    def anchor_points(self):
        return list(self.anchors)

    def to_dict(self):
        return {"kind": self.kind, "anchors": self.anchors.tolist(), "weights": self.weights.tolist()}


def minimax_center(anchors: np.ndarray) -> Point:
    """Center of the smallest spherical cap containing ``anchors``.

    Exhaustive over supporting subsets: a subset's candidate center is the
    normalized combination of its points that is equidistant from all of
    them, kept when its barycentric weights are nonnegative and the cap
    covers every anchor.
    """
    anchors = np.atleast_2d(anchors)
    m, n = anchors.shape
    best, best_cos = None, -np.inf
    for k in range(1, min(m, n) + 1):
        for subset in itertools.combinations(range(m), k):
            ps = anchors[list(subset)]
            gram = ps @ ps.T
            try:
                beta = np.linalg.solve(gram, np.ones(k))
            except np.linalg.LinAlgError:
                continue
            if np.any(beta < -1e-12):
                continue
            c = beta @ ps
            nc = np.linalg.norm(c)
            if nc == 0:
                continue
            c = c / nc
            cos_r = float(np.min(ps @ c))
            if np.all(anchors @ c >= cos_r - 1e-12) and cos_r > best_cos:
                best, best_cos = c, cos_r
    if best is None:  # pragma: no cover - only for anchors spread over a hemisphere
        raise InvalidInputError("anchors admit no enclosing cap center")
    return best


@dataclass(frozen=True, eq=False)
class MaxNegCos(ConvexFunction):
    anchors: np.ndarray
    kind = "MaxNegCos"

    def __post_init__(self):
        object.__setattr__(self, "anchors", _anchor_array(self.anchors))

    def value(self, y):
        return float(self.values(y)[0])

    def values(self, ys):
        return np.max(np.stack([_half_sq(ys, p) for p in self.anchors]), axis=0)

    def pieces(self):
        return [Piece(np.ones(1), p[None, :]) for p in self.anchors]

    @property
    def shift(self):
        return 1.0

    @property
    def known_minimizer(self):
        return minimax_center(self.anchors)

    def anchor_points(self):
        return list(self.anchors)

    def to_dict(self):
        return {"kind": self.kind, "anchors": self.anchors.tolist()}


@dataclass(frozen=True, eq=False)
class IndicatorBall(ConvexFunction):
    center: Point
    radius: float
    kind = "IndicatorBall"

    def __post_init__(self):
        object.__setattr__(self, "center", geo.make_point(self.center))
        if not self.radius > 0:
            raise InvalidInputError("indicator ball radius must be positive")

    def value(self, y):
        return 0.0 if geo.distance(self.center, y) <= self.radius + geo.CONTAINS_TOL else math.inf

    def values(self, ys):
        inside = geo.distances_to(ys, self.center) <= self.radius + geo.CONTAINS_TOL
        return np.where(inside, 0.0, np.inf)

    def pieces(self):
        return []

    def constraint(self):
        return self.center, float(self.radius)

    def project_to_argmin(self, v):
        return geo.project_to_cap(self.center, self.radius, v)

    def anchor_points(self):
        return [self.center]

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Sum(ConvexFunction):
    terms: tuple
    kind = "Sum"

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise InvalidInputError("Sum needs at least one addend")
        if sum(t.constraint() is not None for t in terms) > 1:
            raise InvalidInputError("Sum supports at most one IndicatorBall addend")
        object.__setattr__(self, "terms", terms)

    def value(self, y):
        total = 0.0
        for t in self.terms:
            v = t.value(y)
            if math.isinf(v):
                return math.inf
            total += v
        return total

    def values(self, ys):
        return np.sum([t.values(ys) for t in self.terms], axis=0)

    def pieces(self):
        groups = [t.pieces() for t in self.terms if t.pieces()]
        out = []
        for combo in itertools.product(*groups):
            out.append(Piece(np.concatenate([c.weights for c in combo]),
                             np.vstack([c.anchors for c in combo])))
        return out

    def constraint(self):
        for t in self.terms:
            if t.constraint() is not None:
                return t.constraint()
        return None

    @property
    def shift(self):
        return float(sum(t.shift for t in self.terms))

    def _smooth_closed_form(self) -> Optional[Point]:
        smooth = [t for t in self.terms if t.constraint() is None]
        if not smooth or any(isinstance(t, (MaxNegCos, Sum)) for t in smooth):
            return None
        q = sum(p.q for t in smooth for p in t.pieces())
        return geo.make_point(q)

    @property
    def known_minimizer(self):
        # a sum of NegCos-type terms equals |q|(1 - cos d(., q/|q|)) + const, so
        # its minimizer over a ball is the projection of q/|q| onto the ball
        q_hat = self._smooth_closed_form()
        if q_hat is None:
            return None
        c = self.constraint()
        return q_hat if c is None else geo.project_to_cap(c[0], c[1], q_hat)

    def project_to_argmin(self, v):
        if all(t.constraint() is not None for t in self.terms):
            c = self.constraint()
            return geo.project_to_cap(c[0], c[1], v)
        return self.known_minimizer

    def anchor_points(self):
        return [p for t in self.terms for p in t.anchor_points()]

    def validate(self, space):
        for t in self.terms:
            t.validate(space)

    def to_dict(self):
        return {"kind": self.kind, "terms": [t.to_dict() for t in self.terms]}


def function_from_dict(spec: dict) -> ConvexFunction:
    """Build a catalog function from its JSON form (``kind`` tag + parameters)."""
    try:
        kind = spec["kind"]
        if kind == "NegCosDistance":
            return NegCosDistance(spec["anchor"])
        if kind == "WeightedNegCos":
            return WeightedNegCos(spec["anchors"], spec["weights"])
        if kind == "MaxNegCos":
            return MaxNegCos(spec["anchors"])
        if kind == "IndicatorBall":
            return IndicatorBall(spec["center"], float(spec["radius"]))
        if kind == "Sum":
            return Sum(tuple(function_from_dict(t) for t in spec["terms"]))
    except KeyError as exc:
        raise InvalidInputError(f"function spec is missing field {exc}") from None
    raise InvalidInputError(f"unknown function kind {spec.get('kind')!r}")


def evaluate(f: ConvexFunction, y: Point, space: Optional[AdmissibleSpace] = None) -> float:
    """f(y), with a domain check against ``space`` when given."""
    if space is not None and not space.contains(y):
        raise DomainError("evaluation point lies outside the space")
    return f.value(y)


def descent_direction(f: ConvexFunction, y: Point) -> Optional[np.ndarray]:
    """Steepest-descent tangent vector at ``y``, or None when unavailable.

    NegCos-type terms give sin d(y, p) along log_map(y, p) per anchor.  For
    MaxNegCos the active anchor with the smallest index is used.  Indicator
    terms have no descent oracle.
    """
    if not f.is_finite_at(y):
        raise DomainError(f"{f.kind} is +inf at the query point")
    if f.constraint() is not None:
        return None
    if isinstance(f, Sum):
        return sum(descent_direction(t, y) for t in f.terms)
    pieces = f.pieces()
    if len(pieces) == 1:
        active = pieces[0]
    else:
        vals = np.array([p.value(y) for p in pieces])
        active = pieces[int(np.argmax(vals >= vals.max()))]
    return -active.gradient(y)


def brute_force_minimizer(f: ConvexFunction, space: AdmissibleSpace, resolution: float = COARSE_RESOLUTION) -> Point:
    """Grid oracle for a point of Argmin_X f on S^2.

    Evaluates f on a quasi-uniform cap grid of X (coarse global grid, then a
    local grid at ``resolution`` when finer than the coarse spacing) and
    refines the best node by pattern search.
    """
    if space.ambient_dim != 3:
        raise NotImplementedError("the grid oracle is only implemented for ambient_dim = 3")
    if not 1e-4 <= resolution <= 1e-1:
        raise InvalidInputError(f"resolution must lie in [1e-4, 1e-1], got {resolution!r}")
    coarse = max(resolution, COARSE_RESOLUTION)
    grid = geo.cap_grid(space.pole, space.radius, coarse)
    vals = f.values(grid)
    best = grid[int(np.argmin(vals))]
    if resolution < coarse:
        local = geo.cap_grid(best, 4 * coarse, resolution)
        local = local[geo.distances_to(local, space.pole) <= space.radius + geo.CONTAINS_TOL]
        lv = f.values(local)
        if lv.min() <= f.value(best):
            best = local[int(np.argmin(lv))]
    c = f.constraint()
    proj = None if c is None else (lambda q: geo.project_to_cap(c[0], c[1], q))
    return geo.pattern_search(f.value, best, space, step=resolution, project=proj)


def brute_force_argmin_set(f: ConvexFunction, space: AdmissibleSpace, resolution: float = COARSE_RESOLUTION,
                           value_tol: float = 1e-8) -> np.ndarray:
    """Grid nodes of X whose value is within ``value_tol`` of the grid minimum."""
    if space.ambient_dim != 3:
        raise NotImplementedError("the grid oracle is only implemented for ambient_dim = 3")
    grid = geo.cap_grid(space.pole, space.radius, resolution)
    vals = f.values(grid)
    return grid[vals <= vals.min() + value_tol]


def standard_catalog(space: AdmissibleSpace) -> dict[str, ConvexFunction]:
    """Representative instances, all placed relative to the pole of ``space``."""
    pole = space.pole
    at = lambda d, a: geo.offset_point(pole, d * space.radius / geo.DEFAULT_RADIUS, a)  # noqa: E731
    c_center, c_radius = at(0.2, 1.0), 0.3 * space.radius / geo.DEFAULT_RADIUS
    return {
        "negcos": NegCosDistance(at(0.3, 0.5)),
        "weighted": WeightedNegCos([at(0.5, 0.0), at(0.4, 2.1), at(0.6, 4.0)], [1.0, 2.0, 0.5]),
        "max": MaxNegCos([at(0.5, 0.3), at(0.5, 2.4), at(0.45, 4.3)]),
        "indicator": IndicatorBall(c_center, c_radius),
        "sum": Sum((NegCosDistance(at(0.6, 4.0)), IndicatorBall(c_center, c_radius))),
    }
