import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from matcpd.core import (
    ADAPTIVE_NORMS,
    DOT,
    MAX,
    MODE1,
    MODE2,
    MatrixSeries,
    Mode,
    NormSpec,
    cusum_process,
    mad_scale,
    mode_norm,
    mode_norms,
    norm_curve,
    parse_norm,
    test_statistic,
)
from matcpd.errors import BoundaryError, InvalidDataError

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def matrices(min_side=1, max_side=6):
    shape = st.tuples(st.integers(min_side, max_side), st.integers(min_side, max_side))
    return shape.flatmap(lambda s: arrays(np.float64, s, elements=finite))


# --- NormSpec and MatrixSeries ---------------------------------------------


def test_q_inf_canonicalises_mode():
    assert NormSpec(Mode.ROW, math.inf) == NormSpec(Mode.COL, math.inf) == MAX
    assert MAX.label == "max"


def test_invalid_q_rejected():
    with pytest.raises(ValueError):
        NormSpec(Mode.ROW, 1)


@pytest.mark.parametrize(
    "spec, expected", [(MODE1, 7), (MODE2, 3), (DOT, 4), (MAX, 4)]
)
def test_sparsity(spec, expected):
    assert spec.sparsity(3, 7) == expected


@pytest.mark.parametrize("p1, p2", [(1, 1), (3, 3), (4, 5), (20, 20), (2, 9)])
def test_sparsity_bounded(p1, p2):
    for spec in (MODE1, MODE2, DOT):
        s = spec.sparsity(p1, p2)
        assert 1 <= s <= max(p1, p2)


def test_square_dot_sparsity_is_side():
    assert DOT.sparsity(6, 6) == 6


@pytest.mark.parametrize(
    "text, spec", [("mode1", MODE1), ("[2,2]", MODE2), ("Dot", DOT), ("max", MAX), ("[1,inf]", MAX)]
)
def test_parse_norm(text, spec):
    assert parse_norm(text) == spec


def test_parse_norm_unknown():
    with pytest.raises(ValueError, match="unknown norm"):
        parse_norm("frobenius")


def test_series_is_read_only_copy(rng):
    raw = rng.standard_normal((5, 2, 3))
    x = MatrixSeries(raw)
    raw[0, 0, 0] = 99.0
    assert x.data[0, 0, 0] != 99.0
    with pytest.raises(ValueError):
        x.data[0, 0, 0] = 1.0
    assert (x.N, x.p1, x.p2, x.p) == (5, 2, 3, 6)


def test_series_from_panel():
    assert MatrixSeries(np.zeros((4, 3))).shape == (4, 3, 1)


@pytest.mark.parametrize(
    "bad", [np.zeros((1, 2, 2)), np.zeros((3, 0, 2)), np.zeros(5), np.array([[[np.nan]], [[0.0]]])]
)
def test_series_invariants(bad):
    with pytest.raises(InvalidDataError):
        MatrixSeries(bad)


def test_slicing_returns_series(gaussian_series):
    sub = gaussian_series[10:20]
    assert isinstance(sub, MatrixSeries) and sub.N == 10


# --- MAD rescaling ---------------------------------------------------------


def test_mad_constant_series_unchanged():
    data = np.broadcast_to(np.arange(6.0).reshape(2, 3), (7, 2, 3))
    scaled, zero = mad_scale(data)
    np.testing.assert_array_equal(scaled.data, data)
    assert zero.all()


def test_mad_hand_example():
    data = np.array([1.0, 3.0, 5.0, 7.0, 9.0]).reshape(5, 1, 1)
    scaled, zero = mad_scale(data)
    np.testing.assert_allclose(scaled.data.ravel(), [0.5, 1.5, 2.5, 3.5, 4.5])
    assert not zero.any()


def test_mad_partial_zero_flags(rng):
    data = rng.standard_normal((9, 2, 2))
    data[:, 1, 0] = 4.0
    scaled, zero = mad_scale(data)
    assert zero.tolist() == [[False, False], [True, False]]
    np.testing.assert_array_equal(scaled.data[:, 1, 0], 4.0)


def test_mad_mean_method():
    data = np.array([0.0, 2.0, 4.0]).reshape(3, 1, 1)
    scaled, _ = mad_scale(data, method="mean")
    # mean 2, mean absolute deviation 4/3
    np.testing.assert_allclose(scaled.data.ravel(), [0.0, 1.5, 3.0])


def test_mad_unknown_method(gaussian_series):
    with pytest.raises(ValueError):
        mad_scale(gaussian_series, method="iqr")


@given(arrays(np.float64, (11, 2, 3), elements=finite), st.floats(0.01, 100))
def test_mad_scale_invariance(data, c):
    a, za = mad_scale(data)
    b, zb = mad_scale(c * data)
    np.testing.assert_array_equal(za, zb)
    np.testing.assert_allclose(b.data[:, ~za], a.data[:, ~za], rtol=1e-9, atol=1e-9)


def test_mad_doubling_exact(gaussian_series):
    a, _ = mad_scale(gaussian_series)
    b, _ = mad_scale(2.0 * gaussian_series.data)
    np.testing.assert_array_equal(a.data, b.data)


@given(arrays(np.float64, (9, 2, 2), elements=finite))
def test_mad_idempotent(data):
    once, zero = mad_scale(data)
    twice, _ = mad_scale(once)
    np.testing.assert_allclose(twice.data, once.data, rtol=1e-9, atol=1e-12)


def test_mad_rejects_non_finite():
    with pytest.raises(InvalidDataError):
        mad_scale(np.array([[[1.0]], [[np.inf]]]))


# --- mode norms -------------------------------------------------------------

A345 = np.array([[3.0, 4.0], [0.0, 0.0]])


@pytest.mark.parametrize("spec, expected", [(MODE1, 5.0), (MODE2, 4.0), (DOT, 5.0), (MAX, 4.0)])
def test_mode_norm_hand_examples(spec, expected):
    assert mode_norm(A345, spec) == expected


def _enumerate_subvector_max(a, size):
    """max l2 norm over all ``size``-element subsets of vec(a)."""
    flat = a.reshape(len(a), -1) ** 2
    combos = np.array(list(itertools.combinations(range(flat.shape[1]), size)))
    return np.sqrt(flat[:, combos].sum(axis=-1).max(axis=-1))


def test_mode_norms_match_exhaustive_enumeration(rng):
    a = rng.standard_normal((1000, 4, 5))
    rows = np.max([np.sqrt(np.sum(a[:, i, :] ** 2, axis=-1)) for i in range(4)], axis=0)
    cols = np.max([np.sqrt(np.sum(a[:, :, j] ** 2, axis=-1)) for j in range(5)], axis=0)
    np.testing.assert_allclose(mode_norms(a, MODE1), rows, rtol=0, atol=1e-12)
    np.testing.assert_allclose(mode_norms(a, MODE2), cols, rtol=0, atol=1e-12)
    np.testing.assert_allclose(mode_norms(a, DOT), _enumerate_subvector_max(a, 4), rtol=0, atol=1e-12)
    np.testing.assert_allclose(mode_norms(a, MAX), _enumerate_subvector_max(a, 1), rtol=0, atol=1e-12)


def test_mode_norm_requires_matrix():
    with pytest.raises(ValueError):
        mode_norm(np.zeros(3), MODE1)


@given(matrices(), st.floats(-50, 50))
def test_homogeneity(a, c):
    for spec in ADAPTIVE_NORMS:
        assert mode_norm(c * a, spec) == pytest.approx(abs(c) * mode_norm(a, spec), rel=1e-9, abs=1e-9)


@given(matrices())
def test_q_ordering(a):
    p1, p2 = a.shape
    m = mode_norm(a, MAX)
    for spec in (MODE1, MODE2, DOT):
        v = mode_norm(a, spec)
        s = spec.sparsity(p1, p2)
        assert m <= v * (1 + 1e-12) + 1e-12
        assert v <= math.sqrt(s) * m * (1 + 1e-12) + 1e-12


@given(st.integers(1, 6).flatmap(lambda n: arrays(np.float64, (n, n), elements=finite)))
def test_square_dot_dominates_rows_and_columns(a):
    d = mode_norm(a, DOT)
    assert d >= mode_norm(a, MODE1) * (1 - 1e-12)
    assert d >= mode_norm(a, MODE2) * (1 - 1e-12)


@given(matrices())
def test_transpose_duality(a):
    assert mode_norm(a.T, MODE1) == mode_norm(a, MODE2)


# --- CUSUM -------------------------------------------------------------------


def _cusum_oracle(x, n):
    """sqrt(n(N-n)/N) (post mean - pre mean) by explicit double summation."""
    N = len(x)
    pre = np.zeros(x.shape[1:])
    post = np.zeros(x.shape[1:])
    for i in range(N):
        if i < n:
            pre += x[i]
        else:
            post += x[i]
    return math.sqrt(n * (N - n) / N) * (post / (N - n) - pre / n)


def test_cusum_constant_series_is_zero():
    x = np.broadcast_to(np.array([[1.0, -2.0], [3.0, 0.5]]), (15, 2, 2))
    c = cusum_process(x, 3)
    np.testing.assert_allclose(c.matrices, 0.0, atol=1e-12)


def test_cusum_two_observations():
    x = np.array([[[1.0, 2.0]], [[4.0, -1.0]]])
    c = cusum_process(x, 1)
    np.testing.assert_allclose(-c.matrices[0], (x[1] - x[0]) / math.sqrt(2), atol=1e-15)


def test_cusum_matches_double_sum_oracle(rng):
    x = rng.standard_normal((20, 3, 2))
    c = cusum_process(x, 2)
    for k, n in enumerate(c.epochs):
        np.testing.assert_allclose(-c.matrices[k], _cusum_oracle(x, n), rtol=0, atol=1e-10)


def test_cusum_gamma_zero_matches_formula(rng):
    x = rng.standard_normal((17, 2, 2))
    N = 17
    c = cusum_process(x, 3, gamma=0.0)
    for k, n in enumerate(c.epochs):
        direct = (x[:n].sum(axis=0) - n / N * x.sum(axis=0)) / math.sqrt(N)
        np.testing.assert_allclose(c.matrices[k], direct, atol=1e-12)
    assert not c.nonstandard_gamma
    assert cusum_process(x, 3, gamma=0.3).nonstandard_gamma


@pytest.mark.parametrize("N, nu", [(20, 1), (20, 5), (21, 10), (2, 1)])
def test_cusum_length(N, nu):
    c = cusum_process(np.zeros((N, 1, 1)), nu)
    assert len(c) == N - 2 * nu + 1
    assert (c.start, c.end) == (nu, N - nu)


@pytest.mark.parametrize("nu", [0, -1, 11, 2.5])
def test_cusum_boundary_errors(nu):
    with pytest.raises(BoundaryError):
        cusum_process(np.zeros((20, 1, 1)), nu)


@given(
    arrays(np.float64, (12, 2, 3), elements=finite),
    arrays(np.float64, (12, 2, 3), elements=finite),
    st.floats(-5, 5),
    st.floats(-5, 5),
)
def test_cusum_linearity(x, y, a, b):
    lhs = cusum_process(a * x + b * y, 2).matrices
    rhs = a * cusum_process(x, 2).matrices + b * cusum_process(y, 2).matrices
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-7)


def test_statistic_invariant_to_sign_convention(rng):
    x = rng.standard_normal((30, 3, 3))
    c = cusum_process(x, 4)
    for spec in ADAPTIVE_NORMS:
        oracle = max(mode_norm(_cusum_oracle(x, n), spec) for n in range(4, 27))
        assert test_statistic(c, spec)[0] == pytest.approx(oracle, rel=1e-12)


# --- test statistic ------------------------------------------------------------


def test_statistic_constant_series():
    c = cusum_process(np.ones((25, 2, 2)), 5)
    for spec in ADAPTIVE_NORMS:
        value, epoch = test_statistic(c, spec)
        assert value == pytest.approx(0.0, abs=1e-12)
        assert epoch == 5


@pytest.mark.parametrize("u", [30, 50, 64])
@pytest.mark.parametrize("spec", ADAPTIVE_NORMS)
def test_noiseless_shift_argmax_at_changepoint(u, spec):
    x = np.zeros((100, 3, 4))
    x[u:, 1, :] = 10.0
    assert test_statistic(cusum_process(x, 20), spec)[1] == u


def test_statistic_matches_enumeration(rng):
    x = rng.standard_normal((40, 4, 3))
    c = cusum_process(x, 6)
    for spec in ADAPTIVE_NORMS:
        values = [mode_norm(m, spec) for m in c.matrices]
        best = int(np.argmax(values))
        assert test_statistic(c, spec) == (values[best], 6 + best)
        np.testing.assert_array_equal(norm_curve(c, spec), values)


def test_argmax_tie_takes_earliest():
    # symmetric bump: equal norms at two epochs, earliest wins
    x = np.zeros((10, 1, 1))
    x[4:6] = 1.0
    c = cusum_process(x, 1)
    curve = norm_curve(c, MODE1)
    best = curve.max()
    first = int(np.flatnonzero(np.isclose(curve, best, rtol=0, atol=0))[0])
    assert test_statistic(c, MODE1)[1] == 1 + first
