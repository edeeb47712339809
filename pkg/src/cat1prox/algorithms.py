"""Proximal point iterations driven by the tan-sin resolvent.

* PPA:      x_{n+1} = R_{λ_n f} x_n
* Mann:     x_{n+1} = α_n x_n ⊕ (1 - α_n) R_{λ_n f} x_n
* Halpern:  y_{n+1} = α_n v ⊕ (1 - α_n) R_{λ_n f} y_n

Each run returns an :class:`IterationTrace`.  The schedule hypotheses the
convergence theorems need are decided symbolically per schedule family and
recorded as :class:`HypothesisCheck` entries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry as geo
from . import resolvent as rv
from .errors import ConvergenceError, InvalidInputError
from .functions import ConvexFunction, brute_force_argmin_set, brute_force_minimizer, COARSE_RESOLUTION
from .geometry import AdmissibleSpace, Point

DEFAULT_N_MAX = 10_000
DEFAULT_STOP_TOL = 1e-10

FAMILIES = ("constant", "harmonic", "linear", "custom")


@dataclass(frozen=True)
class Schedule:
    """Sequence n -> a_n for n = 1, 2, ...

    constant: a_n = value;  harmonic: a_n = value * n^{-p};  linear: a_n = value * n;
    custom: explicit ``values`` (the last one repeats), with hypothesis ``claims``.
    """

    family: str
    value: float = 1.0
    p: float = 1.0
    values: tuple = ()
    claims: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown schedule family {self.family!r}")
        if self.family == "custom" and not self.values:
            raise InvalidInputError("custom schedules need at least one value")

    @classmethod
    def constant(cls, c: float) -> "Schedule":
        return cls("constant", value=float(c))

    @classmethod
    def harmonic(cls, p: float, scale: float = 1.0) -> "Schedule":
        return cls("harmonic", value=float(scale), p=float(p))

    @classmethod
    def linear(cls, scale: float = 1.0) -> "Schedule":
        return cls("linear", value=float(scale))

    @classmethod
    def custom(cls, values, claims: Optional[dict] = None) -> "Schedule":
        return cls("custom", values=tuple(float(v) for v in values),
                   claims=tuple(sorted((claims or {}).items())))

    def __call__(self, n: int) -> float:
        if n < 1:
            raise InvalidInputError("schedules are indexed from n = 1")
        if self.family == "constant":
            return self.value
        if self.family == "harmonic":
            return self.value * float(n) ** (-self.p)
        if self.family == "linear":
            return self.value * n
        return self.values[min(n, len(self.values)) - 1]

    def to_dict(self) -> dict:
        if self.family == "custom":
            return {"family": "custom", "values": list(self.values), "claims": dict(self.claims)}
        if self.family == "harmonic":
            return {"family": "harmonic", "p": self.p, "scale": self.value}
        if self.family == "linear":
            return {"family": "linear", "scale": self.value}
        return {"family": "constant", "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        fam = d.get("family")
        if fam == "constant":
            return cls.constant(d["value"])
        if fam == "harmonic":
            return cls.harmonic(d["p"], d.get("scale", 1.0))
        if fam == "linear":
            return cls.linear(d.get("scale", 1.0))
        if fam == "custom":
            return cls.custom(d["values"], d.get("claims"))
        raise InvalidInputError(f"unknown schedule family {fam!r}")

    # -- symbolic asymptotics (None when the family cannot decide) --------
    def limit(self) -> Optional[float]:
        if self.family == "constant":
            return self.value
        if self.family == "harmonic":
            if self.value == 0 or self.p > 0:
                return 0.0
            return self.value if self.p == 0 else math.inf
        if self.family == "linear":
            return math.inf if self.value > 0 else 0.0
        return None

    def supremum(self) -> Optional[float]:
        if self.family == "constant":
            return self.value
        if self.family == "harmonic":
            return self.value if self.p >= 0 else math.inf
        if self.family == "linear":
            return math.inf if self.value > 0 else 0.0
        return None

    def infimum_positive(self) -> Optional[bool]:
        if self.family == "constant":
            return self.value > 0
        if self.family == "harmonic":
            return self.value > 0 and self.p <= 0
        if self.family == "linear":
            return self.value > 0
        return None

    def series_diverges(self, power: float = 1.0) -> Optional[bool]:
        """Whether Σ a_n^power = ∞ (nonnegative families)."""
        if self.family == "constant":
            return self.value != 0
        if self.family == "harmonic":
            return self.value != 0 and self.p * power <= 1
        if self.family == "linear":
            return self.value != 0
        return None


@dataclass(frozen=True)
class HypothesisCheck:
    condition: str
    satisfied: Optional[bool]
    method: str = "symbolic-per-family"


def _check(condition: str, value: Optional[bool], *schedules: Schedule) -> HypothesisCheck:
    custom = [s for s in schedules if s.family == "custom"]
    if custom:
        claims = {}
        for s in custom:
            claims.update(dict(s.claims))
        if condition in claims:
            return HypothesisCheck(condition, bool(claims[condition]), "claimed")
        return HypothesisCheck(condition, None, "unverified")
    return HypothesisCheck(condition, value)


def _lt(a: Optional[float], b: float) -> Optional[bool]:
    return None if a is None else a < b


def ppa_hypotheses(lam: Schedule) -> list[HypothesisCheck]:
    return [_check("sum lambda_n = inf", lam.series_diverges(), lam)]


def mann_hypotheses(alpha: Schedule, lam: Schedule) -> list[HypothesisCheck]:
    lim_a = alpha.limit()
    # 1 - α_n stays bounded away from 0 iff lim α_n < 1 for these families
    if lim_a is None or lam.series_diverges() is None:
        diverges = None
    else:
        diverges = lim_a < 1 and bool(lam.series_diverges())
    return [
        _check("sum (1 - alpha_n) lambda_n = inf", diverges, alpha, lam),
        _check("sup alpha_n < 1", _lt(alpha.supremum(), 1.0), alpha),
    ]


def halpern_hypotheses(alpha: Schedule, lam: Schedule) -> list[HypothesisCheck]:
    lim_l = lam.limit()
    sup_a = alpha.supremum()
    positive = None if alpha.family == "custom" else (alpha.value > 0 and (sup_a or 0) <= 1)
    return [
        _check("lim lambda_n = inf", None if lim_l is None else math.isinf(lim_l), lam),
        _check("inf lambda_n > 0", lam.infimum_positive(), lam),
        _check("lim alpha_n = 0", None if alpha.limit() is None else alpha.limit() == 0, alpha),
        _check("sum alpha_n^2 = inf", alpha.series_diverges(2.0), alpha),
        _check("alpha_n in (0, 1]", positive, alpha),
        # informational only; the operative hypothesis is the squared series
        _check("sum alpha_n = inf", alpha.series_diverges(1.0), alpha),
    ]


def halpern_regime(checks: list[HypothesisCheck]) -> Optional[str]:
    ok = {c.condition: c.satisfied for c in checks}
    common = ok["lim alpha_n = 0"] and ok["sum alpha_n^2 = inf"]
    if common and ok["lim lambda_n = inf"]:
        return "lambda-unbounded"
    if common and ok["inf lambda_n > 0"] and ok["alpha_n in (0, 1]"]:
        return "lambda-bounded-below"
    return None


@dataclass
class StepRecord:
    n: int
    alpha: float
    lam: float
    step_dist: float
    f_x: float
    f_z: float
    ref_dists: dict = field(default_factory=dict)


@dataclass
class IterationTrace:
    algorithm: str
    iterates: list = field(default_factory=list)
    resolvent_points: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    anchor: Optional[Point] = None
    references: dict = field(default_factory=dict)
    hypotheses: list = field(default_factory=list)
    regime: Optional[str] = None
    terminated_reason: str = "running"
    kappa: float = 1.0

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def final(self) -> Point:
        return self.iterates[-1]

    def ref_series(self, name: str) -> np.ndarray:
        return np.array([s.ref_dists[name] for s in self.steps])

    def column(self, attr: str) -> np.ndarray:
        return np.array([getattr(s, attr) for s in self.steps])


def metric_project_to_argmin(f: ConvexFunction, space: AdmissibleSpace, v: Point,
                             resolution: float = COARSE_RESOLUTION) -> Point:
    """Nearest point of Argmin_X f to ``v``.

    Closed forms are used where the catalog knows them (singleton minimizers,
    indicator balls); otherwise the grid oracle supplies the argmin set.
    """
    p = f.project_to_argmin(v)
    if p is not None:
        return p
    if space.ambient_dim != 3:
        raise NotImplementedError("argmin projection without a closed form needs ambient_dim = 3")
    nodes = brute_force_argmin_set(f, space, resolution)
    spread = max(geo.distances_to(nodes, nodes[0])) if len(nodes) > 1 else 0.0
    if spread <= 2 * resolution:
        return brute_force_minimizer(f, space, resolution)
    fmin = float(f.values(nodes).min())
    start = nodes[int(np.argmin(geo.distances_to(nodes, v)))]

    def obj(y):
        return geo.distance(y, v) if f.value(y) <= fmin + 1e-8 else math.inf

    return geo.pattern_search(obj, start, space, step=resolution)


def _safe_reference(f, space, p):
    try:
        return metric_project_to_argmin(f, space, p)
    except NotImplementedError:
        return None


def _run(algorithm, f, space, start, alpha, lam, n_max, stop_tol, anchor, references,
         hypotheses, fast_path, regime=None) -> IterationTrace:
    f.validate(space)
    if not space.contains(start):
        raise InvalidInputError("initial point lies outside the space")
    if anchor is not None and not space.contains(anchor):
        raise InvalidInputError("anchor lies outside the space")
    if n_max < 1:
        raise InvalidInputError("n_max must be positive")
    trace = IterationTrace(algorithm, anchor=anchor, references=references,
                           hypotheses=hypotheses, regime=regime)
    x = np.array(start, dtype=float)
    trace.iterates.append(x)
    for n in range(1, n_max + 1):
        a = 0.0 if alpha is None else alpha(n)
        lam_n = lam(n)
        if not lam_n > 0:
            raise InvalidInputError(f"lambda_{n} = {lam_n!r} is not positive")
        upper_open = algorithm == "mann"
        if not (0.0 <= a < 1.0 if upper_open else 0.0 <= a <= 1.0):
            raise InvalidInputError(f"alpha_{n} = {a!r} outside the admissible range for {algorithm}")
        try:
            res = rv.solve(f, lam_n, x, space, fast_path=fast_path)
        except ConvergenceError as exc:
            trace.terminated_reason = "resolvent_failure"
            exc.partial_trace = trace
            raise
        z = res.minimizer
        if algorithm == "halpern":
            x_next = geo.interpolate(anchor, z, a)
        elif algorithm == "mann":
            x_next = geo.interpolate(x, z, a)
        else:
            x_next = z
        trace.resolvent_points.append(z)
        trace.steps.append(StepRecord(
            n, a, lam_n, res.penalty_distance, f.value(x), f.value(z),
            {k: geo.distance(x, p) for k, p in references.items()}))
        trace.iterates.append(x_next)
        if geo.distance(x_next, x) < stop_tol:
            trace.terminated_reason = "stop_tol"
            return trace
        x = x_next
    trace.terminated_reason = "n_max"
    return trace


def run_ppa(f: ConvexFunction, space: AdmissibleSpace, x1: Point, lambda_schedule: Schedule,
            n_max: int = DEFAULT_N_MAX, stop_tol: float = DEFAULT_STOP_TOL,
            fast_path: bool = True) -> IterationTrace:
    refs = {}
    u = _safe_reference(f, space, x1)
    if u is not None:
        refs["min"] = u
    return _run("ppa", f, space, x1, None, lambda_schedule, n_max, stop_tol, None, refs,
                ppa_hypotheses(lambda_schedule), fast_path)


def run_mann(f: ConvexFunction, space: AdmissibleSpace, x1: Point, alpha_schedule: Schedule,
             lambda_schedule: Schedule, n_max: int = DEFAULT_N_MAX, stop_tol: float = DEFAULT_STOP_TOL,
             fast_path: bool = True) -> IterationTrace:
    refs = {}
    u = _safe_reference(f, space, x1)
    if u is not None:
        refs["min"] = u
    return _run("mann", f, space, x1, alpha_schedule, lambda_schedule, n_max, stop_tol, None, refs,
                mann_hypotheses(alpha_schedule, lambda_schedule), fast_path)


def run_halpern(f: ConvexFunction, space: AdmissibleSpace, y1: Point, v: Point, alpha_schedule: Schedule,
                lambda_schedule: Schedule, n_max: int = DEFAULT_N_MAX, stop_tol: float = DEFAULT_STOP_TOL,
                fast_path: bool = True) -> IterationTrace:
    refs = {}
    u = _safe_reference(f, space, y1)
    if u is not None:
        refs["min"] = u
    pv = _safe_reference(f, space, v)
    if pv is not None:
        refs["Pv"] = pv
    checks = halpern_hypotheses(alpha_schedule, lambda_schedule)
    return _run("halpern", f, space, y1, alpha_schedule, lambda_schedule, n_max, stop_tol,
                np.array(v, dtype=float), refs, checks, fast_path, regime=halpern_regime(checks))
