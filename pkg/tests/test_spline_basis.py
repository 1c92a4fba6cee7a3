import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from hdgam.errors import ConfigError, DegenerateFeature
from hdgam.spline_basis import (
    BasisSpec,
    basis_matrix,
    build_basis_spec,
    diff_penalty_matrix,
    evaluate_basis,
    expand_design,
    fit_basis,
    function_norm,
)


def test_grid_knots_are_exact_sixths():
    x = np.linspace(0.0, 1.0, 1001)
    spec = build_basis_spec(x, order=4, num_basis=9)
    assert spec.num_basis == 9
    np.testing.assert_allclose(spec.inner_knots, [1 / 6, 2 / 6, 3 / 6, 4 / 6, 5 / 6], atol=1e-12)
    assert spec.boundary == (0.0, 1.0)
    assert spec.knots.size == 13


@pytest.mark.parametrize("order,num_basis", [(1, 4), (2, 5), (3, 6), (4, 9)])
def test_matches_scipy_design_matrix(rng, order, num_basis):
    spec = build_basis_spec(rng.uniform(-2, 3, 300), order, num_basis)
    x = rng.uniform(spec.lo, spec.hi, 500)
    ours = basis_matrix(spec, x)
    ref = BSpline.design_matrix(x, spec.knots, order - 1).toarray()
    np.testing.assert_allclose(ours, ref, atol=1e-13)


def test_partition_of_unity_random_points(rng):
    X = rng.standard_normal((200, 3))
    for spec in fit_basis(X):
        pts = rng.uniform(spec.lo, spec.hi, 1000)
        assert np.max(np.abs(basis_matrix(spec, pts).sum(axis=1) - 1.0)) <= 1e-12


def test_endpoints_and_clamping():
    spec = build_basis_spec(np.linspace(-1, 1, 50))
    np.testing.assert_array_equal(evaluate_basis(spec, -1.0), np.eye(9)[0])
    np.testing.assert_array_equal(evaluate_basis(spec, 1.0), np.eye(9)[-1])
    np.testing.assert_array_equal(evaluate_basis(spec, 5.0), evaluate_basis(spec, 1.0))
    np.testing.assert_array_equal(evaluate_basis(spec, -7.0), evaluate_basis(spec, -1.0))


def test_order_one_is_interval_indicator():
    spec = BasisSpec(1, (0.25, 0.5, 0.75), 0.0, 1.0)
    B = basis_matrix(spec, [0.1, 0.25, 0.6, 0.99, 1.0])
    expected = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [0, 0, 0, 1]], float)
    np.testing.assert_array_equal(B, expected)


def test_cubic_has_three_nonzeros_at_inner_knot():
    spec = build_basis_spec(np.linspace(0, 1, 101))
    vals = evaluate_basis(spec, spec.inner_knots[2])
    assert np.count_nonzero(vals > 1e-15) == 3
    # uniform cubic B-spline at a knot: 1/6, 2/3, 1/6
    np.testing.assert_allclose(np.sort(vals[vals > 0]), [1 / 6, 1 / 6, 2 / 3], atol=1e-12)


def test_degenerate_feature_and_bad_config():
    with pytest.raises(DegenerateFeature):
        build_basis_spec(np.array([0.0, 1.0] * 20), 4, 9)
    with pytest.raises(ConfigError):
        build_basis_spec(np.linspace(0, 1, 50), order=4, num_basis=4)
    with pytest.raises(ConfigError):
        build_basis_spec(np.linspace(0, 1, 50), order=0, num_basis=4)
    with pytest.raises(DegenerateFeature, match="column 1"):
        fit_basis(np.column_stack([np.linspace(0, 1, 30), np.ones(30)]))


def test_tied_quantiles_merge_with_warning():
    x = np.concatenate([np.zeros(80), np.linspace(0.01, 1, 20)])
    with pytest.warns(UserWarning, match="collapsed"):
        spec = build_basis_spec(x, 4, 9)
    assert spec.num_basis < 9
    pts = np.linspace(0, 1, 300)
    np.testing.assert_allclose(basis_matrix(spec, pts).sum(axis=1), 1.0, atol=1e-12)


def test_difference_penalty_quadratic_form(rng):
    D = diff_penalty_matrix(9)
    for _ in range(10):
        b = rng.standard_normal(9)
        assert b @ D @ b == pytest.approx(np.sum(np.diff(b) ** 2), rel=1e-12)
    np.testing.assert_allclose(D @ np.ones(9), 0.0, atol=1e-14)
    assert not D.flags.writeable
    np.testing.assert_array_equal(diff_penalty_matrix(1), [[0.0]])


def test_expanded_design_shape_and_centering(rng):
    X = rng.uniform(-1, 1, size=(5, 8))
    X = np.vstack([X, rng.uniform(-1, 1, size=(45, 8))])
    d = expand_design(X, fit_basis(X, 4, 5))
    assert d.matrix.shape == (50, 40)
    assert d.p == 8 and d.m == 5 and d.block_sizes == [5] * 8
    assert np.max(np.abs(d.matrix.sum(axis=0))) <= 1e-10 * d.n
    assert d.block_index[3] == slice(15, 20)


def test_prediction_reuses_training_centers(rng):
    X = rng.uniform(-1, 1, size=(40, 2))
    specs = fit_basis(X, 4, 6)
    train = expand_design(X, specs)
    again = expand_design(X, specs, col_center=train.col_center)
    np.testing.assert_array_equal(train.matrix, again.matrix)
    with pytest.raises(ConfigError):
        expand_design(X, specs, col_center=np.zeros(3))


def test_subset_keeps_blocks(rng):
    X = rng.uniform(-1, 1, size=(40, 4))
    d = expand_design(X, fit_basis(X, 3, 5))
    s = d.subset([3, 1])
    np.testing.assert_array_equal(s.block(0), d.block(3))
    np.testing.assert_array_equal(s.block(1), d.block(1))


def test_basis_is_deterministic(rng):
    X = rng.uniform(size=(30, 3))
    a = expand_design(X, fit_basis(X))
    b = expand_design(X, fit_basis(X))
    np.testing.assert_array_equal(a.matrix, b.matrix)


def test_function_norm_values():
    spec = build_basis_spec(np.linspace(-1, 1, 201))
    assert function_norm(spec, np.zeros(9)) == 0.0
    # the basis sums to one, so unit coefficients give f = 1 on an interval of length 2
    assert function_norm(spec, np.ones(9)) == pytest.approx(np.sqrt(2.0), rel=1e-12)
    grid = np.linspace(-1, 1, 400)
    beta, *_ = np.linalg.lstsq(basis_matrix(spec, grid), 4 * grid, rcond=None)
    # ||4x|| on [-1, 1] = sqrt(32 / 3) = 3.26599
    assert function_norm(spec, beta) == pytest.approx(3.265986, abs=1e-5)
    with pytest.raises(ConfigError):
        function_norm(spec, np.ones(9), grid_size=50)


def test_spec_round_trip():
    spec = build_basis_spec(np.linspace(-3, 2, 77), 3, 7)
    assert BasisSpec.from_dict(spec.to_dict()) == spec


@settings(max_examples=40, deadline=None)
@given(
    order=st.integers(1, 5),
    extra=st.integers(1, 6),
    seed=st.integers(0, 2**31 - 1),
)
def test_property_nonnegative_local_partition(order, extra, seed):
    r = np.random.default_rng(seed)
    num_basis = order + extra
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = build_basis_spec(r.standard_normal(60), order, num_basis)
    B = basis_matrix(spec, r.uniform(spec.lo, spec.hi, 50))
    assert np.all(B >= -1e-15)
    assert np.max(np.abs(B.sum(axis=1) - 1.0)) <= 1e-12
    assert np.all(np.count_nonzero(B > 1e-14, axis=1) <= order)
