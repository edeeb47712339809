"""Seeded property sweeps over geometry, functions, resolvents and diagnostics.

Each check produces signed residuals (>= -tol means the property holds) and
keeps the worst sample as a witness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import algorithms as al
from . import diagnostics as dg
from . import geometry as geo
from . import resolvent as rv
from .functions import NegCosDistance, standard_catalog
from .geometry import AdmissibleSpace

SUITES = ("geometry", "functions", "resolvent", "diagnostics")
LAMBDAS = (0.1, 1.0, 10.0)


@dataclass
class CheckResult:
    suite: str
    name: str
    min_residual: float
    tol: float
    n: int
    witness: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.min_residual >= -self.tol)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.suite}.{self.name}: min residual {self.min_residual:.3e} (tol {self.tol:g}, n={self.n})"


def _result(suite, name, residuals, tol, witnesses) -> CheckResult:
    r = np.asarray(residuals, dtype=float)
    i = int(np.argmin(r))
    w = {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v) for k, v in witnesses[i].items()}
    return CheckResult(suite, name, float(r[i]), tol, len(r), w)


def _sampler(space, rng):
    return lambda n: geo.sample_points(space, rng, n)


def geometry_suite(space: AdmissibleSpace, rng, samples: int) -> list[CheckResult]:
    pts = _sampler(space, rng)
    x1, x2, x3 = pts(samples), pts(samples), pts(samples)
    a = rng.random(samples)
    W = [{"x1": x1[i], "x2": x2[i], "x3": x3[i], "alpha": float(a[i])} for i in range(samples)]
    out = []
    tri = [geo.distance(x1[i], x2[i]) + geo.distance(x2[i], x3[i]) - geo.distance(x1[i], x3[i])
           for i in range(samples)]
    out.append(_result("geometry", "triangle", tri, 1e-12, W))
    for name, fn in (("cat1", dg.cat1_residual), ("ks", dg.ks_residual),
                     ("halpern_lemma", dg.halpern_lemma_residual)):
        out.append(_result("geometry", name, [fn(x1[i], x2[i], x3[i], a[i]) for i in range(samples)], 1e-10, W))
    # the coincident-point branch of the anchor lemma
    out.append(_result("geometry", "halpern_lemma_coincident",
                       [dg.halpern_lemma_residual(x1[i], x1[i], x3[i], a[i]) for i in range(samples)], 1e-10, W))
    rt = [-geo.distance(geo.exp_map(x1[i], geo.log_map(x1[i], x2[i])), x2[i]) for i in range(samples)]
    out.append(_result("geometry", "log_exp_roundtrip", rt, 1e-10, W))
    split = []
    for i in range(samples):
        q = geo.interpolate(x1[i], x2[i], a[i])
        d = geo.distance(x1[i], x2[i])
        split.append(-max(abs(geo.distance(x1[i], q) - (1 - a[i]) * d), abs(geo.distance(q, x2[i]) - a[i] * d)))
    out.append(_result("geometry", "interpolate_split", split, 1e-10, W))
    adm = [math.pi / 2 - geo.distance(x1[i], x2[i]) for i in range(samples)]
    out.append(_result("geometry", "admissible", adm, 0.0, W))
    return out


def functions_suite(space: AdmissibleSpace, rng, samples: int) -> list[CheckResult]:
    out = []
    for key, f in standard_catalog(space).items():
        c = f.constraint()
        dom = AdmissibleSpace(c[0], c[1]) if c is not None else space
        pts = _sampler(dom, rng)
        x, y, a = pts(samples), pts(samples), rng.random(samples)
        W = [{"x": x[i], "y": y[i], "alpha": float(a[i])} for i in range(samples)]
        conv = [a[i] * f.value(x[i]) + (1 - a[i]) * f.value(y[i]) - f.value(geo.interpolate(x[i], y[i], a[i]))
                for i in range(samples)]
        out.append(_result("functions", f"convexity[{key}]", conv, 1e-12, W))
        u = al.metric_project_to_argmin(f, space, space.pole)
        opt = [f.value(x[i]) - f.value(u) for i in range(samples)]
        out.append(_result("functions", f"minimizer[{key}]", opt, 1e-12, W))
    return out


def resolvent_suite(space: AdmissibleSpace, rng, samples: int) -> list[CheckResult]:
    out = []
    pts = _sampler(space, rng)
    for key, f in standard_catalog(space).items():
        u = al.metric_project_to_argmin(f, space, space.pole)
        xs = pts(samples)
        lams = 10.0 ** rng.uniform(-1, 1, samples)
        qs = [rv.ResolventQuery(f, float(lams[i]), xs[i], space) for i in range(samples)]
        rs = [rv.solve(q.f, q.lam, q.x, q.space) for q in qs]
        W = [{"x": xs[i], "lam": float(lams[i])} for i in range(samples)]
        out.append(_result("resolvent", f"quasi_firm[{key}]",
                           [rv.check_quasi_firm(qs[i], u, rs[i]) for i in range(samples)], 1e-8, W))
        out.append(_result("resolvent", f"sq_firm[{key}]",
                           [rv.check_sq_firm(qs[i], u, rs[i]) for i in range(samples)], 1e-8, W))
        pairs = list(range(samples - 1))
        Wp = [{"x": xs[i], "y": xs[i + 1], "lam": float(lams[i]), "mu": float(lams[i + 1])} for i in pairs]
        out.append(_result("resolvent", f"firm_pair[{key}]",
                           [rv.check_firm_pair(qs[i], qs[i + 1], rs[i], rs[i + 1]) for i in pairs], 1e-8, Wp))
        fixed = [-geo.distance(rv.solve(f, lam, u, space).minimizer, u) for lam in LAMBDAS]
        out.append(_result("resolvent", f"fixed_point[{key}]", fixed, 1e-6, [{"lam": lam} for lam in LAMBDAS]))
        if f.constraint() is not None and not f.pieces():
            c, r = f.constraint()
            proj = [-geo.distance(rs[i].minimizer, geo.project_to_cap(c, r, xs[i])) for i in range(samples)]
            out.append(_result("resolvent", f"projection[{key}]", proj, 1e-9, W))
        if isinstance(f, NegCosDistance):
            agree = [-geo.distance(rv.solve(f, q.lam, q.x, space, fast_path=False).minimizer, r.minimizer)
                     for q, r in zip(qs, rs)]
            out.append(_result("resolvent", f"oracle_agreement[{key}]", agree, 1e-7, W))
    return out


def diagnostics_suite(space: AdmissibleSpace, rng, samples: int) -> list[CheckResult]:
    out = []
    pts = _sampler(space, rng)
    z = pts(20)
    g = dg.g_maximizer(z, rng.uniform(0.1, 2.0, len(z)), space)
    ys, yps, a = pts(samples), pts(samples), rng.random(samples)
    W = [{"y": ys[i], "y_prime": yps[i], "alpha": float(a[i])} for i in range(samples)]
    out.append(_result("diagnostics", "g_lipschitz", dg.g_lipschitz_residuals(g, ys, yps), 1e-10, W))
    out.append(_result("diagnostics", "g_concavity", dg.g_concavity_residuals(g, ys, yps, a), 1e-10, W))
    gap = [g.max_value - g.value(y) for y in ys]
    out.append(_result("diagnostics", "g_maximizer_optimal", gap, 1e-12, W))
    # trace chains of short Mann runs from random starts
    runs = max(1, samples // 50)
    f = NegCosDistance(pts(1)[0])
    starts = pts(runs)
    res, Wr = [], []
    for i in range(runs):
        tr = al.run_mann(f, space, starts[i], al.Schedule.constant(0.5), al.Schedule.constant(1.0), n_max=30)
        res.append(dg.check_trace_inequalities(tr, f, f.anchor).min_residual)
        Wr.append({"x1": starts[i], "anchor": f.anchor})
    out.append(_result("diagnostics", "mann_trace_chains", res, dg.PASS_TOL, Wr))
    return out


_SUITES: dict[str, Callable] = {
    "geometry": geometry_suite, "functions": functions_suite,
    "resolvent": resolvent_suite, "diagnostics": diagnostics_suite,
}


def run_suites(names, seed: int = 0, samples: int = 200, tol: Optional[float] = None,
               space: Optional[AdmissibleSpace] = None) -> list[CheckResult]:
    space = space or AdmissibleSpace.default()
    results = []
    for name in names:
        rng = np.random.default_rng([seed, SUITES.index(name)])
        for r in _SUITES[name](space, rng, samples):
            if tol is not None:
                r.tol = tol
            results.append(r)
    return results
