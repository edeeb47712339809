"""CAT(κ) spaces for κ > 0 by rescaling to the unit sphere.

The κ-model is the sphere of radius 1/√κ: a point p of the κ-world has norm
1/√κ and ``to_unit(p) = √κ p``.  Distances satisfy d_κ = d_1 / √κ, so a ball
of κ-radius r/√κ with r < π/4 has diameter below D_κ/2 = π/(2√κ).

Functions are supplied through their pull-back to the unit model (a catalog
function f acts on a κ-point p as f(√κ p)).  With that convention the
κ-resolvent argmin f(y) + (1/η) tan(√κ d_κ(y,x)) sin(√κ d_κ(y,x)) is the unit
resolvent R_{ηf} conjugated by the rescaling, so everything delegates.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import algorithms as al
from . import diagnostics as dg
from . import geometry as geo
from . import resolvent as rv
from .errors import InvalidInputError
from .functions import COARSE_RESOLUTION, ConvexFunction
from .geometry import AdmissibleSpace, Point


@dataclass(frozen=True, eq=False)
class KappaSpace:
    kappa: float
    underlying: AdmissibleSpace

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise InvalidInputError(f"kappa must be a positive real, got {self.kappa!r}")

    @classmethod
    def default(cls, kappa: float, ambient_dim: int = 3) -> "KappaSpace":
        return cls(kappa, AdmissibleSpace.default(ambient_dim))

    @property
    def scale(self) -> float:
        return math.sqrt(self.kappa)

    @property
    def d_kappa_radius(self) -> float:
        return self.underlying.radius / self.scale

    @property
    def diameter_bound(self) -> float:
        """D_κ = π/√κ."""
        return math.pi / self.scale

    @property
    def pole(self) -> Point:
        return self.from_unit(self.underlying.pole)

    def to_unit(self, p) -> Point:
        return np.asarray(p, dtype=float) * self.scale

    def from_unit(self, p) -> Point:
        return np.asarray(p, dtype=float) / self.scale

    def distance(self, x, y) -> float:
        return geo.distance(self.to_unit(x), self.to_unit(y)) / self.scale

    def contains(self, p) -> bool:
        return self.underlying.contains(self.to_unit(p))

    def interpolate(self, x, y, alpha: float) -> Point:
        return self.from_unit(geo.interpolate(self.to_unit(x), self.to_unit(y), alpha))


def resolvent_kappa(f: ConvexFunction, eta: float, x, ks: KappaSpace,
                    fast_path: bool = True) -> rv.ResolventResult:
    """R̃_{ηf} x with the distance reported in κ-units; C stays cos(√κ d_κ)."""
    r = rv.solve(f, eta, ks.to_unit(x), ks.underlying, fast_path=fast_path)
    return replace(r, minimizer=ks.from_unit(r.minimizer), penalty_distance=r.penalty_distance / ks.scale)


def _rescale_trace(trace: al.IterationTrace, point_map, dist_factor: float, kappa: float) -> al.IterationTrace:
    out = copy.copy(trace)
    out.iterates = [point_map(p) for p in trace.iterates]
    out.resolvent_points = [point_map(p) for p in trace.resolvent_points]
    out.anchor = None if trace.anchor is None else point_map(trace.anchor)
    out.references = {k: point_map(p) for k, p in trace.references.items()}
    out.steps = [replace(s, step_dist=s.step_dist * dist_factor,
                         ref_dists={k: d * dist_factor for k, d in s.ref_dists.items()})
                 for s in trace.steps]
    out.kappa = kappa
    return out


def trace_from_unit(trace: al.IterationTrace, ks: KappaSpace) -> al.IterationTrace:
    return _rescale_trace(trace, ks.from_unit, 1.0 / ks.scale, ks.kappa)


def trace_to_unit(trace: al.IterationTrace, ks: KappaSpace) -> al.IterationTrace:
    """Map a κ-trace through the metric bijection d -> √κ d back to the unit model."""
    return _rescale_trace(trace, ks.to_unit, ks.scale, 1.0)


def _delegate(runner, ks, *args, **kwargs):
    try:
        trace = runner(*args, **kwargs)
    except Exception as exc:
        partial = getattr(exc, "partial_trace", None)
        if partial is not None:
            exc.partial_trace = trace_from_unit(partial, ks)
        raise
    return trace_from_unit(trace, ks)


def run_ppa_kappa(f: ConvexFunction, ks: KappaSpace, x1, lambda_schedule: al.Schedule,
                  n_max: int = al.DEFAULT_N_MAX, stop_tol: float = al.DEFAULT_STOP_TOL,
                  fast_path: bool = True) -> al.IterationTrace:
    return _delegate(al.run_ppa, ks, f, ks.underlying, ks.to_unit(x1), lambda_schedule,
                     n_max, stop_tol * ks.scale, fast_path)


def run_mann_kappa(f: ConvexFunction, ks: KappaSpace, x1, alpha_schedule: al.Schedule,
                   lambda_schedule: al.Schedule, n_max: int = al.DEFAULT_N_MAX,
                   stop_tol: float = al.DEFAULT_STOP_TOL, fast_path: bool = True) -> al.IterationTrace:
    return _delegate(al.run_mann, ks, f, ks.underlying, ks.to_unit(x1), alpha_schedule, lambda_schedule,
                     n_max, stop_tol * ks.scale, fast_path)


def run_halpern_kappa(f: ConvexFunction, ks: KappaSpace, y1, v, alpha_schedule: al.Schedule,
                      lambda_schedule: al.Schedule, n_max: int = al.DEFAULT_N_MAX,
                      stop_tol: float = al.DEFAULT_STOP_TOL, fast_path: bool = True) -> al.IterationTrace:
    return _delegate(al.run_halpern, ks, f, ks.underlying, ks.to_unit(y1), ks.to_unit(v),
                     alpha_schedule, lambda_schedule, n_max, stop_tol * ks.scale, fast_path)


def boundedness_certificate_kappa(trace: al.IterationTrace, tail_start: Optional[int], ks: KappaSpace,
                                  resolution: float = COARSE_RESOLUTION,
                                  margin: float = dg.MARGIN) -> dg.BoundednessCertificate:
    """Certificate in κ-units; the threshold is D_κ/2 instead of π/2."""
    unit = dg.boundedness_certificate(trace_to_unit(trace, ks), tail_start, ks.underlying,
                                      resolution, margin=margin * ks.scale)
    s = ks.scale
    return dg.BoundednessCertificate(unit.spherically_bounded_estimate, unit.tail_inf_sup / s,
                                     unit.sup_step_distance / s, unit.tail_start,
                                     ks.diameter_bound / 2, margin)
