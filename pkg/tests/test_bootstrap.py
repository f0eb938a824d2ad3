import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from regimedep.bootstrap import (BootstrapError, BootstrapPlan, bootstrap_se,
                                 default_block_length, resample_indices)
from regimedep.copulas import CopulaParams, sample_copula
from regimedep.dependence import sample_kendall_tau


def _plan(**kw):
    base = dict(scheme="moving_block", block_length=None, replicates=50, seed=7)
    base.update(kw)
    return BootstrapPlan(**base)


# --- resample_indices ---

def test_iid_indices_reproducible():
    a = resample_indices(5, _plan(scheme="iid"))
    b = resample_indices(5, _plan(scheme="iid"))
    assert_array_equal(a, b)
    assert a.shape == (5,)
    assert set(a.tolist()) <= set(range(5))


def test_full_block_is_contiguous_run():
    idx = resample_indices(9, _plan(block_length=9))
    assert_array_equal(idx, np.arange(9))


def test_blocks_are_contiguous():
    T, L = 100, 7
    idx = resample_indices(T, _plan(block_length=L))
    assert idx.size == T
    for blk in np.split(idx[: (T // L) * L], T // L):
        assert_array_equal(np.diff(blk), 1)


@given(T=st.integers(1, 300), seed=st.integers(0, 2**31), scheme=st.sampled_from(["iid", "moving_block"]))
def test_indices_in_range(T, seed, scheme):
    idx = resample_indices(T, _plan(scheme=scheme, seed=seed))
    assert idx.shape == (T,)
    assert idx.min() >= 0 and idx.max() < T


def test_default_block_length():
    assert [default_block_length(T) for T in (1, 8, 9, 27, 28, 1000, 1001)] == [1, 2, 3, 3, 4, 10, 11]


def test_resample_errors():
    with pytest.raises(BootstrapError):
        resample_indices(0, _plan())
    with pytest.raises(BootstrapError):
        resample_indices(5, _plan(block_length=6))


def test_plan_validation():
    with pytest.raises(BootstrapError):
        _plan(replicates=49)
    with pytest.raises(BootstrapError):
        _plan(scheme="stationary")
    with pytest.raises(BootstrapError):
        _plan(block_length=0)
    with pytest.raises(BootstrapError):
        _plan(block_length=6).check(11)
    _plan(block_length=5).check(10)
    _plan(scheme="iid", block_length=50).check(10)


# --- bootstrap_se ---

def test_constant_statistic_zero_se():
    res = bootstrap_se(lambda x: 3.0, np.arange(40.0), _plan())
    assert res.estimate == 3.0 and res.se == 0.0
    assert res.replicates.shape == (50, 1) and res.n_failed == 0


def test_mean_se_iid_oracle():
    x = np.random.default_rng(1).standard_normal(1000)
    res = bootstrap_se(np.mean, x, _plan(scheme="iid", replicates=500))
    assert res.estimate == pytest.approx(x.mean())
    assert abs(res.se / (1 / np.sqrt(1000)) - 1) < 0.25


def test_tau_se_rate():
    params = CopulaParams.gaussian(np.array([[1.0, 0.5], [0.5, 1.0]]))
    tau = lambda u: sample_kendall_tau(u[:, 0], u[:, 1])
    se = [bootstrap_se(tau, sample_copula(params, T, seed=3), _plan(replicates=200)).se
          for T in (500, 2000)]
    assert 0.4 <= se[1] / se[0] <= 0.6


def test_vector_statistic_and_determinism():
    x = np.random.default_rng(2).standard_normal((200, 2))
    stat = lambda a: a.mean(axis=0)
    r1 = bootstrap_se(stat, x, _plan(seed=11))
    r2 = bootstrap_se(stat, x, _plan(seed=11))
    r3 = bootstrap_se(stat, x, _plan(seed=12))
    assert r1.se.shape == (2,)
    assert_array_equal(r1.replicates, r2.replicates)
    assert_array_equal(r1.se, r2.se)
    assert not np.array_equal(r1.se, r3.se)
    assert_allclose(r1.se, r1.replicates.std(axis=0, ddof=1))


def _failing(rate):
    calls = {"n": 0}

    def stat(x):
        calls["n"] += 1
        # call 1 is the point estimate; replicates follow
        if calls["n"] > 1 and (calls["n"] - 2) < rate * 50:
            raise RuntimeError("boom")
        return float(np.mean(x))
    return stat


def test_failures_below_threshold_are_dropped():
    res = bootstrap_se(_failing(0.2), np.arange(30.0), _plan())
    assert res.n_failed == 10 and res.n_ok == 40
    assert np.isnan(res.replicates[:10]).all()
    assert len(res.errors) == 10 and np.isfinite(res.se)


def test_failures_above_threshold_raise():
    with pytest.raises(BootstrapError):
        bootstrap_se(_failing(0.22), np.arange(30.0), _plan())


def test_nonfinite_replicate_counts_as_failure():
    res = bootstrap_se(lambda x: np.nan if x[0] == 0 and x[1] != 1 else 1.0, np.arange(30.0), _plan(scheme="iid"))
    assert res.n_failed == np.isnan(res.replicates).all(axis=1).sum()


def test_plan_checked_against_T():
    with pytest.raises(BootstrapError):
        bootstrap_se(np.mean, np.arange(10.0), _plan(block_length=6))
