import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matcpd.errors import ConfigError
from matcpd.simulate import (
    SHIFT_SCENARIOS,
    CovarianceSpec,
    ScenarioSpec,
    ShiftPattern,
    build_covariance,
    build_shift,
    covariance_factors,
    evenly_spaced,
    generate_series,
    scenario_shift,
    unvec,
    vec,
)

COVS = [CovarianceSpec(k) for k in ("cov1", "cov2", "cov3", "cov4")]


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_vec_round_trip(p1, p2, seed):
    a = np.random.default_rng(seed).standard_normal((p1, p2))
    np.testing.assert_array_equal(unvec(vec(a), p1, p2), a)


def test_vec_is_column_major():
    a = np.array([[1, 2, 3], [4, 5, 6]])
    assert vec(a).tolist() == [1, 4, 2, 5, 3, 6]


# --- covariances ----------------------------------------------------------------------


def test_cov_aliases_and_labels():
    assert [c.kind for c in COVS] == ["identity", "kronecker", "banded", "compound"]
    assert [c.label for c in COVS] == ["Cov1", "Cov2", "Cov3", "Cov4"]
    with pytest.raises(ConfigError):
        CovarianceSpec("toeplitz")


def test_compound_p2():
    np.testing.assert_array_equal(build_covariance(CovarianceSpec("cov4"), 1, 2), [[1.0, 0.2], [0.2, 1.0]])


def test_compound_eigenvalues():
    p = 12
    eig = np.sort(np.linalg.eigvalsh(build_covariance(CovarianceSpec("cov4"), 3, 4)))
    np.testing.assert_allclose(eig[:-1], 0.8, atol=1e-12)
    assert eig[-1] == pytest.approx(1 + 0.2 * (p - 1), abs=1e-12)


def test_banded_entries():
    p1, p2 = 3, 4
    sigma = build_covariance(CovarianceSpec("cov3"), p1, p2)

    def idx(j, k):  # column-major position of cell (j, k)
        return j + p1 * k

    assert sigma[idx(1, 2), idx(1, 2)] == 1.0
    assert sigma[idx(0, 1), idx(1, 1)] == pytest.approx(0.5)
    assert sigma[idx(0, 1), idx(1, 2)] == pytest.approx(0.15)
    assert sigma[idx(0, 0), idx(2, 3)] == pytest.approx(0.5**2 * 0.3**3)


def test_kronecker_identity_entrywise():
    spec = CovarianceSpec("cov2", seed=4)
    sigma_c, sigma_r = covariance_factors(spec, 3, 5)
    sigma = build_covariance(spec, 3, 5)
    p1 = 3
    for i in range(15):
        for j in range(15):
            ri, ci = i % p1, i // p1
            rj, cj = j % p1, j // p1
            assert sigma[i, j] == pytest.approx(sigma_c[ci, cj] * sigma_r[ri, rj], rel=1e-12, abs=1e-15)


def test_kronecker_depends_on_seed():
    a = build_covariance(CovarianceSpec("cov2", seed=1), 3, 3)
    b = build_covariance(CovarianceSpec("cov2", seed=2), 3, 3)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, build_covariance(CovarianceSpec("cov2", seed=1), 3, 3))


@pytest.mark.parametrize("spec", COVS, ids=lambda c: c.label)
@pytest.mark.parametrize("dims", [(1, 1), (2, 3), (5, 5), (4, 7)])
def test_covariance_symmetric_psd(spec, dims):
    sigma = build_covariance(spec, *dims)
    np.testing.assert_array_equal(sigma, sigma.T)
    assert np.linalg.eigvalsh(sigma).min() >= -1e-8


def test_cov_dict_round_trip():
    for c in COVS:
        assert CovarianceSpec.from_dict(c.to_dict()) == c
    assert CovarianceSpec.from_dict("cov3").kind == "banded"


# --- shifts ---------------------------------------------------------------------------------


def test_ten_one_mode_row_one():
    d = build_shift(scenario_shift("10-1mode", 1.0), 20, 20)
    assert np.count_nonzero(d) == 10
    assert np.count_nonzero(d[0]) == 10 and d[0, :10].tolist() == [1.0] * 10


def test_forty_one_mode_two_rows():
    d = build_shift(scenario_shift("40-1mode", 2.0), 20, 20)
    assert (d[:2] == 2.0).all() and not d[2:].any()


def test_forty_two_modes_layout():
    d = build_shift(scenario_shift("40-2modes", 1.0), 20, 20)
    expected = np.zeros((20, 20))
    expected[0, :] = 1
    expected[1:, 0] = 1
    expected[1, 1] = 1
    np.testing.assert_array_equal(d, expected)


def test_block_top_left_and_offset():
    d = build_shift(scenario_shift("36-block", 1.0), 20, 20)
    assert (d[:6, :6] == 1).all() and np.count_nonzero(d) == 36
    moved = build_shift(ShiftPattern("block", 36, 1.0, offset=(3, 10)), 20, 20)
    assert (moved[3:9, 10:16] == 1).all() and np.count_nonzero(moved) == 36
    with pytest.raises(ConfigError):
        build_shift(ShiftPattern("block", 36, 1.0, offset=(16, 0)), 20, 20)
    with pytest.raises(ConfigError):
        ShiftPattern("block", 10)


def test_random_shift_reproducible():
    a = build_shift(scenario_shift("40-random", 1.0, seed=3), 20, 20)
    b = build_shift(scenario_shift("40-random", 1.0, seed=3), 20, 20)
    c = build_shift(scenario_shift("40-random", 1.0, seed=4), 20, 20)
    assert np.count_nonzero(a) == 40
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("name", sorted(SHIFT_SCENARIOS))
@pytest.mark.parametrize("a", [0.0, 0.3, -2.0])
def test_scenario_counts(name, a):
    d = build_shift(scenario_shift(name, a), 20, 20)
    k = SHIFT_SCENARIOS[name][1]
    if a == 0:
        assert not d.any()
    else:
        assert np.count_nonzero(d) == k and set(d[d != 0]) == {a}


def test_shift_too_large():
    with pytest.raises(ConfigError):
        build_shift(ShiftPattern("one_mode", 26), 5, 5)
    with pytest.raises(ConfigError):
        scenario_shift("7-triangle", 1.0)


def test_shift_dict_round_trip():
    s = ShiftPattern("block", 9, 0.7, 3, (1, 2))
    assert ShiftPattern.from_dict(s.to_dict()) == s
    assert s.label == "9-block" and s.with_magnitude(2.0).magnitude == 2.0


# --- series generation -----------------------------------------------------------------------


def test_null_moments():
    x = generate_series(ScenarioSpec(5000, 4, 5, seed=1))
    v = x.data.ravel()
    assert abs(v.mean()) < 4 / np.sqrt(v.size)
    assert 0.95 <= v.var() <= 1.05


def test_shift_segment_difference():
    pattern = ShiftPattern("one_mode", 10, 10.0)
    x = generate_series(ScenarioSpec(200, 3, 10, ((100, pattern),), seed=2))
    diff = x.data[100:].mean(axis=0) - x.data[:100].mean(axis=0)
    se = np.sqrt(2 / 100)
    assert np.all(np.abs(diff[0] - 10.0) < 3 * se + 0.5)
    assert np.all(np.abs(diff[1:]) < 5 * se)


def test_banded_sample_covariance():
    spec = ScenarioSpec(20000, 2, 3, covariance=CovarianceSpec("cov3"), seed=5)
    x = generate_series(spec)
    v = np.stack([vec(m) for m in x.data])
    sample = np.cov(v, rowvar=False)
    np.testing.assert_allclose(sample, build_covariance(spec.covariance, 2, 3), atol=0.05)


def test_generation_deterministic():
    spec = ScenarioSpec(50, 4, 4, ((20, scenario_shift("10-random", 1.0, 2)),), CovarianceSpec("cov2", seed=1), seed=9)
    assert generate_series(spec).data.tobytes() == generate_series(spec).data.tobytes()


def test_ar1_zero_equals_iid():
    a = generate_series(ScenarioSpec(40, 2, 2, noise="iid", seed=3))
    b = generate_series(ScenarioSpec(40, 2, 2, noise="ar1", ar_rho=0.0, seed=3))
    assert a.data.tobytes() == b.data.tobytes()


def test_ar1_stationary_variance_and_correlation():
    x = generate_series(ScenarioSpec(20000, 1, 2, noise="ar1", ar_rho=0.6, seed=4)).data.reshape(20000, 2)
    assert x.var(axis=0) == pytest.approx([1.0, 1.0], abs=0.06)
    lag1 = np.mean(x[1:] * x[:-1], axis=0) / x.var(axis=0)
    np.testing.assert_allclose(lag1, 0.6, atol=0.03)


def test_multiple_shifts_accumulate():
    s = ShiftPattern("one_mode", 1, 1.0)
    spec = ScenarioSpec(30, 1, 1, ((10, s), (20, s)), mu=np.array([[5.0]]), seed=1)
    x = generate_series(spec).data[:, 0, 0]
    noise = generate_series(ScenarioSpec(30, 1, 1, seed=1)).data[:, 0, 0]
    np.testing.assert_allclose(x - noise, [5.0] * 10 + [6.0] * 10 + [7.0] * 10)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"change_points": ((10, ShiftPattern("one_mode", 1)), (5, ShiftPattern("one_mode", 1)))},
        {"change_points": ((30, ShiftPattern("one_mode", 1)),)},
        {"noise": "garch"},
        {"noise": "ar1", "ar_rho": 1.0},
        {"mu": np.zeros((3, 3))},
    ],
)
def test_scenario_validation(kwargs):
    with pytest.raises(ConfigError):
        ScenarioSpec(30, 2, 2, **kwargs)


def test_scenario_dict_round_trip():
    spec = ScenarioSpec(60, 2, 3, ((30, scenario_shift("10-1mode", 0.5)),), CovarianceSpec("cov3"), "ar1", 0.3, 11)
    back = ScenarioSpec.from_dict(spec.to_dict())
    assert back == spec
    assert back.true_changepoints == (30,)


def test_evenly_spaced():
    assert evenly_spaced(250, 3) == (62, 125, 187)
    assert evenly_spaced(100, 1) == (50,)
