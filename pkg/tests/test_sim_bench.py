import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdgam.errors import ConfigError
from hdgam.sim_bench import (
    SCENARIOS,
    MetricRow,
    SimScenario,
    aggregate,
    generate,
    metrics,
    re_probe,
    run_table,
    true_functions,
)
from hdgam.spline_basis import ExpandedDesign, expand_design, fit_basis
from hdgam.two_step import PathConfig


def test_true_function_values():
    f1, f2, f3, f4, f5 = true_functions()
    assert f1(0.0) == 0.0
    assert f4(0.5) == 2.0
    # -4 + 9.33 + 5 - 8.33
    assert f2(1.0) == pytest.approx(2.0, abs=1e-12)
    assert f3(0.0) == -4.0
    assert f5(-2.0) == 0.0
    g = true_functions(0.25)
    x = np.linspace(-1, 1, 7)
    for a, b in zip(true_functions(), g):
        np.testing.assert_allclose(b(x), 0.25 * a(x), rtol=1e-14)
    with pytest.raises(ConfigError):
        true_functions(0.0)


def test_correlation_transform():
    t = math.sqrt(3 / 7)
    X, *_ = generate(SimScenario(n=10_000, p=4, s=1, correlation_t=t, n_test=1, seed=3))
    c = np.corrcoef(X, rowvar=False)[np.triu_indices(4, 1)]
    assert abs(c.mean() - 0.3) <= 0.02
    X, *_ = generate(SimScenario(n=200_000, p=4, s=1, correlation_t=t, n_test=1, seed=3))
    c = np.corrcoef(X, rowvar=False)[np.triu_indices(4, 1)]
    assert np.all(np.abs(c - 0.3) <= 0.01)
    assert np.all(np.abs(X) <= (1 + t) / math.sqrt(1 + t * t))
    X, *_ = generate(SimScenario(n=10_000, p=4, s=1, n_test=1, seed=3))
    c = np.corrcoef(X, rowvar=False)[np.triu_indices(4, 1)]
    assert np.all(np.abs(c) <= 0.05)


def test_generate_is_deterministic():
    a = generate(SCENARIOS["ex4-gamma"])
    b = generate(SCENARIOS["ex4-gamma"])
    for u, v in zip(a, b):
        np.testing.assert_array_equal(np.asarray(u) if not isinstance(u, frozenset) else sorted(u),
                                      np.asarray(v) if not isinstance(v, frozenset) else sorted(v))
    X, y, Xt, yt, true = a
    assert X.shape == (100, 200) and Xt.shape == (1000, 200) and true == frozenset({0, 1, 2})
    assert np.all(y > 0)


def test_scenario_validation():
    with pytest.raises(ConfigError):
        SimScenario(s=6)
    with pytest.raises(ConfigError):
        SimScenario(p=2, s=3)
    with pytest.raises(ConfigError):
        SimScenario(family="weibull")


def test_metrics_edge_cases():
    y = np.array([1.0, 0.0, 1.0, 0.0])
    perfect = metrics({0, 1}, {0, 1}, y, np.array([0.9, 0.1, 0.8, 0.2]), "bernoulli", 10)
    assert (perfect.nv, perfect.tpr, perfect.fpr, perfect.pe) == (2.0, 1.0, 0.0, 0.0)
    empty = metrics(set(), {0, 1}, y, np.full(4, 0.5), "bernoulli", 10)
    assert (empty.nv, empty.tpr, empty.fpr) == (0.0, 0.0, 0.0)
    # mean 0.5 is not > 0.5, so every prediction is class 0
    assert empty.pe == 0.5
    assert empty.dev == pytest.approx(2 * math.log(2), rel=1e-12)
    allsel = metrics(set(range(10)), {0, 1}, y, np.full(4, 0.5), "bernoulli", 10)
    assert allsel.fpr == 1.0
    pois = metrics({3}, {0}, np.array([1.0, 3.0]), np.array([2.0, 2.0]), "poisson", 4)
    assert pois.pe == 1.0 and pois.tpr == 0.0 and pois.fpr == pytest.approx(1 / 3)


def test_aggregate_matches_two_pass_formula():
    vals = np.array([0.1, 0.4, 0.35, 0.9, 0.2])
    rows = [MetricRow(v, v, v, v, v) for v in vals]
    agg = aggregate(rows)
    mean = sum(vals) / 5
    sd = math.sqrt(sum((v - mean) ** 2 for v in vals) / 4)
    assert agg.tpr == pytest.approx(mean, rel=1e-14)
    assert agg.tpr_se == pytest.approx(sd / math.sqrt(5), rel=1e-12)
    assert agg.reps == 5
    assert aggregate([MetricRow(1, 1, 0, 0.2, 1)] * 2).pe_se == 0.0
    with pytest.raises(ConfigError):
        aggregate([])


def test_run_table_small_is_deterministic():
    scn = SimScenario(n=80, p=8, s=2, n_test=40, seed=9)
    cfg = PathConfig(n_lambda=10)
    a, det = run_table(scn, 2, cfg, 4, 6, workers=1, details=True)
    b = run_table(scn, 2, cfg, 4, 6, workers=1)
    assert a == b
    assert all(d["all_converged"] and d["monotone"] and d["max_kkt"] <= 1e-6 for d in det)
    with pytest.raises(ConfigError):
        run_table(scn, 1)


def test_re_probe_orthonormal_design():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((40, 8)))
    design = ExpandedDesign(Q * math.sqrt(40), [slice(2 * j, 2 * j + 2) for j in range(4)], np.zeros(8), [None] * 4)
    lo, hi = re_probe(design, 3, 5)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)


def test_re_probe_on_spline_design():
    X = np.random.default_rng(1).uniform(-1, 1, size=(200, 10))
    design = expand_design(X, fit_basis(X, 4, 9))
    lo, hi = re_probe(design, 4, 10)
    # centered blocks sum to zero row-wise, so each block has one null direction
    assert abs(lo) <= 1e-12 and hi > 0
    # each centered basis column has variance below 1, so the top eigenvalue stays moderate
    assert hi * design.m < 40
    with pytest.raises(ConfigError):
        re_probe(design, 30, 1)


@settings(max_examples=40, deadline=None)
@given(
    sel=st.sets(st.integers(0, 19)),
    true=st.sets(st.integers(0, 19), min_size=1, max_size=5),
)
def test_property_rates_in_unit_interval(sel, true):
    row = metrics(sel, true, np.zeros(3), np.zeros(3), "gaussian", 20)
    assert 0 <= row.tpr <= 1 and 0 <= row.fpr <= 1
    assert row.nv == len(sel)
    assert row.tpr * len(true) + row.fpr * (20 - len(true)) == pytest.approx(len(sel))
