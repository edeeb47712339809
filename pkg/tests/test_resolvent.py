import math

import numpy as np
import pytest
from hypothesis import given, settings

import oracles
from conftest import ball_points, lambdas
from cat1prox import geometry as geo
from cat1prox import resolvent as rv
from cat1prox.algorithms import metric_project_to_argmin
from cat1prox.errors import ConvergenceError, DomainError, InvalidInputError
from cat1prox.functions import IndicatorBall, NegCosDistance, WeightedNegCos

cap = oracles.cap_point
KEYS = ["negcos", "weighted", "max", "indicator", "sum"]


def test_penalty_derivatives_vs_finite_differences():
    for t in np.linspace(0.01, 1.4, 30):
        h = 1e-6
        fd1 = (rv.penalty(t + h) - rv.penalty(t - h)) / (2 * h)
        fd2 = (rv.penalty_derivative(t + h) - rv.penalty_derivative(t - h)) / (2 * h)
        assert rv.penalty_derivative(t) == pytest.approx(fd1, rel=1e-8)
        assert rv.penalty_second_derivative(t) == pytest.approx(fd2, rel=1e-7)
        assert rv.penalty(t) == pytest.approx(math.tan(t) * math.sin(t), rel=1e-15)


def test_query_validation(space, catalog):
    f = catalog["negcos"]
    with pytest.raises(InvalidInputError):
        rv.ResolventQuery(f, 0.0, space.pole, space)
    with pytest.raises(InvalidInputError):
        rv.ResolventQuery(f, math.inf, space.pole, space)
    with pytest.raises(DomainError):
        rv.ResolventQuery(f, 1.0, cap(1.2), space)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_negcos_resolvent_matches_frozen_oracle(space, lam):
    z = oracles.E3
    x = cap(0.4, 2.0)
    f = NegCosDistance(z)
    for fast in (True, False):
        r = rv.solve(f, lam, x, space, fast_path=fast)
        assert r.penalty_distance == pytest.approx(oracles.RESOLVENT_STEP[lam], abs=1e-12)
        assert geo.distance(r.minimizer, oracles.negcos_resolvent(x, z, lam)) < 1e-12


def test_negcos_example_half_radian(space):
    z, x = cap(0.1, 0.0), cap(0.4, 2.5)
    x = geo.offset_point(z, 0.5, 1.0)
    f = NegCosDistance(z)
    t_star = oracles.resolvent_step(0.5, 1.0)
    fast = rv.resolvent_on_geodesic(f, 1.0, x, f.anchor)
    general = rv.solve(f, 1.0, x, space, fast_path=False)
    assert fast.penalty_distance == pytest.approx(t_star, abs=1e-12)
    assert geo.distance(fast.minimizer, general.minimizer) < 1e-8
    assert geo.distance(x, fast.minimizer) + geo.distance(fast.minimizer, f.anchor) == pytest.approx(0.5, abs=1e-12)


def test_fast_path_limits(space):
    z = cap(0.1, 0.0)
    x = geo.offset_point(z, 0.5, 2.0)
    f = NegCosDistance(z)
    assert geo.distance(rv.resolvent_on_geodesic(f, 1e6, x, f.anchor).minimizer, z) < 1e-3
    assert geo.distance(rv.resolvent_on_geodesic(f, 1e-6, x, f.anchor).minimizer, x) < 1e-3


def test_fast_path_rejects_other_kinds(catalog, space):
    with pytest.raises(InvalidInputError):
        rv.resolvent_on_geodesic(catalog["max"], 1.0, space.pole, space.pole)
    f = catalog["negcos"]
    with pytest.raises(InvalidInputError):
        rv.resolvent_on_geodesic(f, 1.0, space.pole, space.pole)


def test_fast_path_agrees_with_general_solver(space, rng):
    f = NegCosDistance(cap(0.25, 1.3))
    xs = geo.sample_points(space, rng, 100)
    lams = 10.0 ** rng.uniform(-2, 2, 100)
    for x, lam in zip(xs, lams):
        a = rv.solve(f, lam, x, space)
        b = rv.solve(f, lam, x, space, fast_path=False)
        assert geo.distance(a.minimizer, b.minimizer) <= 1e-7
        assert geo.distance(a.minimizer, oracles.negcos_resolvent(x, f.anchor, lam)) <= 1e-10


def test_indicator_resolvent_is_projection(catalog, space, rng):
    f = catalog["indicator"]
    c, r = f.constraint()
    for x in geo.sample_points(space, rng, 100):
        lam = 10.0 ** rng.uniform(-2, 2)
        assert geo.distance(rv.solve(f, lam, x, space).minimizer, geo.project_to_cap(c, r, x)) <= 1e-9


@pytest.mark.parametrize("key", KEYS)
@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_fixed_points_at_minimizers(catalog, space, key, lam):
    f = catalog[key]
    u = metric_project_to_argmin(f, space, space.pole)
    r = rv.solve(f, lam, u, space)
    assert geo.distance(r.minimizer, u) <= 1e-6


@pytest.mark.parametrize("key", KEYS)
def test_result_contract(catalog, space, rng, key):
    f = catalog[key]
    for x in geo.sample_points(space, rng, 10):
        lam = 10.0 ** rng.uniform(-1, 1)
        r = rv.solve(f, lam, x, space)
        assert space.contains(r.minimizer)
        assert r.penalty_distance < math.pi / 2
        assert r.cosine_C == pytest.approx(math.cos(r.penalty_distance), abs=1e-15)
        assert r.inner_residual <= 1e-10
        assert r.objective == pytest.approx(rv.objective(f, lam, x, r.minimizer))
        # probe certificate: no probe around the minimizer beats it by more than 1e-8
        if r.method == "general":
            assert r.probe_gap >= -1e-8


@pytest.mark.parametrize("key", ["weighted", "max", "sum"])
def test_general_solver_vs_grid_oracle(catalog, space, rng, key):
    f = catalog[key]
    c = f.constraint()
    for x in geo.sample_points(space, rng, 3):
        lam = 1.0
        r = rv.solve(f, lam, x, space)

        def obj(ys, x=x):
            d = 2 * np.arcsin(np.linalg.norm(ys - x, axis=1) / 2)
            return f.values(ys) + np.tan(d) * np.sin(d) / lam

        if c is None:
            best = oracles.grid_argmin(obj, levels=10)
        else:
            best = oracles.grid_argmin(obj, levels=10, radius=c[1], center=c[0])
        assert rv.objective(f, lam, x, r.minimizer) <= rv.objective(f, lam, x, best) + 1e-12
        assert geo.distance(r.minimizer, best) < 1e-5


def test_monotone_penalty_distance(catalog, space, rng):
    lams = [0.05, 0.2, 1.0, 5.0, 25.0]
    for key in KEYS:
        f = catalog[key]
        for x in geo.sample_points(space, rng, 5):
            ds = [rv.solve(f, lam, x, space).penalty_distance for lam in lams]
            assert all(a <= b + 1e-8 for a, b in zip(ds, ds[1:]))


def test_quasi_firm_trivial_and_indicator(catalog, space, rng):
    f = catalog["negcos"]
    u = f.anchor
    assert rv.check_quasi_firm(rv.ResolventQuery(f, 1.0, u, space), u) == 0.0
    ind = catalog["indicator"]
    c, _ = ind.constraint()
    for x in geo.sample_points(space, rng, 30):
        assert rv.check_quasi_firm(rv.ResolventQuery(ind, 1.0, x, space), c) >= 0.0


def test_firm_pair_trivial_and_single_form(catalog, space, rng):
    f = catalog["weighted"]
    x = cap(0.5, 1.0)
    q = rv.ResolventQuery(f, 0.7, x, space)
    assert abs(rv.check_firm_pair(q, q)) <= 1e-10
    for x, y in zip(geo.sample_points(space, rng, 10), geo.sample_points(space, rng, 10)):
        pair = rv.check_firm_pair(rv.ResolventQuery(f, 1.0, x, space), rv.ResolventQuery(f, 1.0, y, space))
        assert pair == pytest.approx(rv.check_firm_single(f, x, y, space), abs=1e-12)


def test_sq_firm_trivial_and_lambda_sweep(catalog, space):
    f = catalog["negcos"]
    u = f.anchor
    assert rv.check_sq_firm(rv.ResolventQuery(f, 1.0, u, space), u) == pytest.approx(0.0, abs=1e-15)
    x = cap(0.6, 3.0)
    for lam in (0.1, 1.0, 10.0):
        assert rv.check_sq_firm(rv.ResolventQuery(f, lam, x, space), u) >= -1e-8


@settings(max_examples=25)
@given(ball_points(), lambdas)
def test_quasi_and_sq_firm_property(x, lam):
    space = geo.AdmissibleSpace.default()
    f = WeightedNegCos([cap(0.4, 0.0), cap(0.3, 2.0), cap(0.5, 4.0)], [1.0, 2.0, 0.5])
    q = rv.ResolventQuery(f, lam, x, space)
    r = rv.solve(f, lam, x, space)
    u = f.known_minimizer
    assert rv.check_quasi_firm(q, u, r) >= -1e-8
    assert rv.check_sq_firm(q, u, r) >= -1e-8


@settings(max_examples=25)
@given(ball_points(), ball_points(), lambdas, lambdas)
def test_firm_pair_property(x, y, lam, mu):
    space = geo.AdmissibleSpace.default()
    f = NegCosDistance(cap(0.2, 1.0))
    assert rv.check_firm_pair(rv.ResolventQuery(f, lam, x, space), rv.ResolventQuery(f, mu, y, space)) >= -1e-8


def test_golden_section_brackets_minimum():
    a, b = rv.golden_section(lambda t: (t - 0.3) ** 2, 0.0, 1.0)
    assert b - a <= 1e-12 or abs(0.5 * (a + b) - 0.3) < 1e-7


def test_min_norm_in_hull():
    v, w = rv.min_norm_in_hull([np.array([1.0, 1.0, 0.0]), np.array([-1.0, 1.0, 0.0])])
    np.testing.assert_allclose(v, [0.0, 1.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-14)


def test_convergence_error_carries_best(catalog, space):
    f = catalog["max"]
    with pytest.raises(ConvergenceError) as info:
        rv.resolvent(rv.ResolventQuery(f, 1.0, cap(0.7, 1.0), space), max_iter=1, tol=0.0)
    assert info.value.best is not None
