"""JSON-configured experiments: build, run, analyse, write CSV + report."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import algorithms as al
from . import catk
from . import diagnostics as dg
from . import geometry as geo
from .errors import Cat1ProxError, ConvergenceError, InvalidInputError
from .functions import COARSE_RESOLUTION, ConvexFunction, function_from_dict

SCHEMA_VERSION = 1
OUTPUT_ENV = "CAT1PROX_OUTPUT_DIR"
CSV_HEADER = ["n", "alpha_n", "lambda_n", "step_dist", "f_x", "f_z", "dist_to_min", "dist_to_Pv"]
ALGORITHMS = ("ppa", "mann", "halpern")
_POINT_KEYS = ("anchor", "center")


@dataclass
class SpaceConfig:
    ambient_dim: int = 3
    pole: Optional[list] = None
    radius: float = geo.DEFAULT_RADIUS
    kappa: float = 1.0

    def build(self) -> catk.KappaSpace:
        if self.pole is None:
            unit = geo.AdmissibleSpace.default(self.ambient_dim, self.radius)
        else:
            unit = geo.AdmissibleSpace(self.pole, self.radius, self.ambient_dim)
        return catk.KappaSpace(float(self.kappa), unit)


@dataclass
class ExperimentConfig:
    """One run.  Points are unit-model positions: a coordinate list, or
    ``{"dist": d, "angle": a}`` meaning offset_point(pole, d, a)."""

    function: dict
    algorithm: str
    schedules: dict
    init: object
    name: str = "experiment"
    space: SpaceConfig = field(default_factory=SpaceConfig)
    anchor: object = None
    n_max: int = al.DEFAULT_N_MAX
    stop_tol: float = al.DEFAULT_STOP_TOL
    seed: int = 0
    tail_start: Optional[int] = None
    resolution: float = COARSE_RESOLUTION
    lipschitz_pairs: int = 500
    fast_path: bool = True
    outputs: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, d: dict, default_name: str = "experiment") -> "ExperimentConfig":
        d = dict(d)
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise InvalidInputError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        space = SpaceConfig(**d.pop("space", {}))
        d.setdefault("name", default_name)
        try:
            cfg = cls(space=space, **d)
        except TypeError as exc:
            raise InvalidInputError(f"bad config: {exc}") from None
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data, default_name=path.stem)

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidInputError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if "lambda" not in self.schedules:
            raise InvalidInputError("schedules.lambda is required")
        if self.algorithm != "ppa" and "alpha" not in self.schedules:
            raise InvalidInputError(f"schedules.alpha is required for {self.algorithm}")
        if self.algorithm == "halpern" and self.anchor is None:
            raise InvalidInputError("halpern runs need an anchor point")
        ks = self.space.build()
        for p in [self.init] + ([self.anchor] if self.anchor is not None else []):
            if not ks.underlying.contains(self.point(p, ks)):
                raise InvalidInputError(f"point {p!r} lies outside the configured space")
        self.build_function(ks).validate(ks.underlying)

    def point(self, spec, ks: catk.KappaSpace) -> np.ndarray:
        if isinstance(spec, dict):
            return geo.offset_point(ks.underlying.pole, float(spec["dist"]), float(spec.get("angle", 0.0)))
        return geo.make_point(spec)

    def build_function(self, ks: catk.KappaSpace) -> ConvexFunction:
        return function_from_dict(self._resolve(self.function, ks))

    def _resolve(self, spec, ks):
        out = {}
        for k, v in spec.items():
            if k in _POINT_KEYS:
                out[k] = self.point(v, ks)
            elif k == "anchors":
                out[k] = [self.point(p, ks) for p in v]
            elif k == "terms":
                out[k] = [self._resolve(t, ks) for t in v]
            else:
                out[k] = v
        return out

    def output_paths(self, out_dir=None) -> tuple[Path, Path]:
        base = Path(out_dir or os.environ.get(OUTPUT_ENV) or ".")
        csv_path = Path(self.outputs.get("trace_csv_path", f"{self.name}.csv"))
        json_path = Path(self.outputs.get("report_json_path", f"{self.name}.json"))
        return (csv_path if csv_path.is_absolute() else base / csv_path,
                json_path if json_path.is_absolute() else base / json_path)


@dataclass
class ExperimentResult:
    trace: Optional[al.IterationTrace]
    report: dict
    status: int
    csv_path: Path
    json_path: Path


def _fmt(x) -> str:
    return "%.17g" % x


def trace_csv(trace: al.IterationTrace, f: ConvexFunction) -> str:
    """One row per step; f columns are the unshifted catalog values."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in trace.steps:
        w.writerow([s.n, _fmt(s.alpha), _fmt(s.lam), _fmt(s.step_dist), _fmt(s.f_x - f.shift),
                    _fmt(s.f_z - f.shift), _fmt(s.ref_dists.get("min", math.nan)),
                    _fmt(s.ref_dists.get("Pv", math.nan))])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def analyse(trace: al.IterationTrace, f: ConvexFunction, ks: catk.KappaSpace, seed: int = 0,
            tail_start: Optional[int] = None, resolution: float = COARSE_RESOLUTION,
            lipschitz_pairs: int = 500) -> dict:
    """Diagnostics for a trace in κ-units; heavy lifting happens in the unit model."""
    unit = catk.trace_to_unit(trace, ks) if ks.kappa != 1.0 else trace
    space, s = ks.underlying, ks.scale
    out: dict = {"certificate": None, "asymptotic_center": None, "g_maximizer": None, "inequalities": None}
    if not unit.steps:
        return out
    u = unit.references.get("Pv" if unit.algorithm == "halpern" else "min")
    if u is not None:
        rep = dg.check_trace_inequalities(unit, f, u)
        out["inequalities"] = {"minima": rep.minima, "min_residual": rep.min_residual,
                               "passed": rep.passed, "tol": rep.tol}
    if space.ambient_dim != 3:
        return out
    cert = catk.boundedness_certificate_kappa(trace, tail_start, ks, resolution)
    out["certificate"] = {
        "spherically_bounded_estimate": cert.spherically_bounded_estimate,
        "tail_inf_sup": cert.tail_inf_sup, "sup_step_distance": cert.sup_step_distance,
        "steps_below_threshold": cert.steps_below_threshold,
        "tail_start": cert.tail_start, "threshold": cert.threshold, "margin": cert.margin,
    }
    ac = dg.asymptotic_center(unit.iterates, tail_start, space, resolution)
    out["asymptotic_center"] = {"center": ks.from_unit(ac.center), "radius_estimate": ac.radius_estimate / s,
                                "tail_start": ac.tail_start, "grid_resolution": ac.grid_resolution / s}
    beta = dg.mann_beta_weights(unit)
    if np.all(beta > 0):
        g = dg.g_maximizer(unit.resolvent_points, beta, space, resolution)
        rng = np.random.default_rng(seed)
        ys = geo.sample_points(space, rng, lipschitz_pairs)
        yps = geo.sample_points(space, rng, lipschitz_pairs)
        alphas = rng.random(lipschitz_pairs)
        out["g_maximizer"] = {
            "maximizer": ks.from_unit(g.maximizer), "max_value": g.max_value, "grid_max_value": g.grid_max_value,
            "lipschitz_min_residual": float(dg.g_lipschitz_residuals(g, ys, yps).min()),
            "concavity_min_residual": float(dg.g_concavity_residuals(g, ys, yps, alphas).min()),
            "sigma_N": float(g.sigma_n[-1]),
        }
    return out


def execute(cfg: ExperimentConfig) -> tuple[al.IterationTrace, ConvexFunction, catk.KappaSpace]:
    """Run the configured algorithm; the trace is in κ-units."""
    ks = cfg.space.build()
    f = cfg.build_function(ks)
    lam = al.Schedule.from_dict(cfg.schedules["lambda"])
    x1 = ks.from_unit(cfg.point(cfg.init, ks))
    common = dict(n_max=cfg.n_max, stop_tol=cfg.stop_tol, fast_path=cfg.fast_path)
    if cfg.algorithm == "ppa":
        return catk.run_ppa_kappa(f, ks, x1, lam, **common), f, ks
    alpha = al.Schedule.from_dict(cfg.schedules["alpha"])
    if cfg.algorithm == "mann":
        return catk.run_mann_kappa(f, ks, x1, alpha, lam, **common), f, ks
    v = ks.from_unit(cfg.point(cfg.anchor, ks))
    return catk.run_halpern_kappa(f, ks, x1, v, alpha, lam, **common), f, ks


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Exit status: 0 ok, 1 solver failure or violated trace inequality."""
    csv_path, json_path = cfg.output_paths(out_dir)
    error = None
    try:
        trace, f, ks = execute(cfg)
    except ConvergenceError as exc:
        trace, error = exc.partial_trace, str(exc)
        ks = cfg.space.build()
        f = cfg.build_function(ks)
    report = {
        "schema_version": SCHEMA_VERSION, "name": cfg.name, "algorithm": cfg.algorithm,
        "kappa": cfg.space.kappa, "seed": cfg.seed, "error": error,
        "function": f.to_dict(),
    }
    if trace is not None:
        report.update({
            "n_steps": trace.n_steps, "terminated_reason": trace.terminated_reason, "regime": trace.regime,
            "hypotheses": [{"condition": h.condition, "satisfied": h.satisfied, "method": h.method}
                           for h in trace.hypotheses],
            "references": dict(trace.references),
            "final_point": trace.final(),
        })
        if trace.steps:
            last = trace.steps[-1]
            report["final"] = {"step_dist": last.step_dist, "f_x": last.f_x - f.shift,
                               "dist_to_refs": dict(last.ref_dists)}
        if error is None:
            report.update(analyse(trace, f, ks, cfg.seed, cfg.tail_start, cfg.resolution, cfg.lipschitz_pairs))
    status = 1 if error else 0
    ineq = report.get("inequalities")
    if ineq is not None and not ineq["passed"]:
        status = 1
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    if trace is not None:
        csv_path.write_text(trace_csv(trace, f))
    json_path.write_text(dump_json(report))
    return ExperimentResult(trace, report, status, csv_path, json_path)


def run_config_file(path, out_dir=None) -> int:
    """Load and run one config file; returns the exit status (2 on a bad config)."""
    try:
        cfg = ExperimentConfig.load(path)
    except Cat1ProxError as exc:
        print(f"error: {path}: {exc}")
        return 2
    try:
        res = run_experiment(cfg, out_dir)
    except Cat1ProxError as exc:
        print(f"error: {path}: {exc}")
        return 2
    print(f"{cfg.name}: status {res.status}, {res.report.get('n_steps', 0)} steps -> {res.csv_path}")
    return res.status
