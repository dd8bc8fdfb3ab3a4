import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracspec.connection import hankel_generator, toeplitz_generator
from fracspec.exceptions import NotPSDError, RankOverflowError
from fracspec.fast_kernels import (LowRankFactors, ToeplitzOperator, hankel_dense, pivoted_cholesky,
                                   thd_matvec, toeplitz_matvec)


def test_identity_toeplitz():
    v = np.arange(9.0)
    np.testing.assert_allclose(toeplitz_matvec(ToeplitzOperator(np.eye(9)[0]), v), v, atol=1e-14)


def test_lower_ones_gives_prefix_sums():
    v = np.random.default_rng(0).standard_normal(50)
    np.testing.assert_allclose(toeplitz_matvec(ToeplitzOperator(np.ones(50)), v), np.cumsum(v),
                               atol=1e-12)


@pytest.mark.parametrize("n", [16, 65, 256])
def test_general_toeplitz_vs_dense(n):
    rng = np.random.default_rng(n)
    col, row = rng.standard_normal(n), rng.standard_normal(n)
    row[0] = col[0]
    op = ToeplitzOperator(col, row)
    dense = op.to_dense()
    assert dense[3, 1] == col[2] and dense[1, 3] == row[2]
    for _ in range(10):
        v = rng.standard_normal(n)
        exact = dense @ v
        assert np.abs(op.matvec(v) - exact).max() <= 1e-11 * np.abs(exact).max()
    V = rng.standard_normal((3, 4, n))
    np.testing.assert_allclose(op.matvec(V), V @ dense.T, atol=1e-11 * np.abs(V).sum(-1).max())
    np.testing.assert_allclose(op.transpose().to_dense(), dense.T)


def test_toeplitz_validation():
    with pytest.raises(ValueError):
        ToeplitzOperator(np.ones(3), np.zeros(3))
    with pytest.raises(ValueError):
        ToeplitzOperator(np.ones(3)).matvec(np.ones(4))


def test_rank_one_hankel():
    a = 0.7
    gen = a ** np.arange(2 * 20 + 1)
    f = pivoted_cholesky(gen)
    assert f.rank == 1
    assert np.abs(f.to_dense() - hankel_dense(gen)).max() <= 1e-14


def test_zero_generator():
    assert pivoted_cholesky(np.zeros(9)).rank == 0


def test_even_generator_rejected():
    with pytest.raises(ValueError):
        pivoted_cholesky(np.ones(4))


def test_not_psd_detected():
    gen = np.zeros(5)
    gen[0], gen[2], gen[4] = 1.0, 2.0, 1.0  # [[1, 0, 2], [0, 2, 0], [2, 0, 1]]
    with pytest.raises(NotPSDError):
        pivoted_cholesky(gen)


def test_rank_overflow():
    gen = hankel_generator(0.5, 300)
    with pytest.raises(RankOverflowError):
        pivoted_cholesky(gen, tol=1e-15, max_rank=3)


def test_hankel_rank_is_small():
    alpha, N = 0.6, 128
    gen = hankel_generator(alpha, N)
    f = pivoted_cholesky(gen, tol=1e-13)
    H = hankel_dense(gen)
    assert f.rank <= 40
    assert np.abs(f.to_dense() - H).max() <= 1e-13 * H.max()


@pytest.mark.parametrize("n", [16, 64, 256])
def test_thd_vs_dense(n):
    rng = np.random.default_rng(n + 1)
    alpha = 0.4
    N = n - 1
    op = ToeplitzOperator(toeplitz_generator(alpha, N))
    f = pivoted_cholesky(hankel_generator(alpha, N), scale=1 / np.sqrt(hankel_generator(alpha, N)[::2]))
    dense = np.tril(op.to_dense() * hankel_dense(hankel_generator(alpha, N)))
    for _ in range(10):
        v = rng.standard_normal(n)
        exact = dense @ v
        assert np.abs(thd_matvec(op, f, v) - exact).max() <= 1e-10 * np.abs(exact).max()
    assert np.all(thd_matvec(op, f, np.zeros(n)) == 0)


def test_thd_all_ones_hankel_is_toeplitz():
    rng = np.random.default_rng(8)
    op = ToeplitzOperator(rng.standard_normal(30))
    ones = np.ones((30, 1))
    v = rng.standard_normal(30)
    np.testing.assert_allclose(thd_matvec(op, LowRankFactors(ones, ones), v), op.matvec(v), atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 80), seed=st.integers(0, 10 ** 6))
def test_hadamard_rank_one_identity(n, seed):
    rng = np.random.default_rng(seed)
    col, row = rng.standard_normal(n), rng.standard_normal(n)
    row[0] = col[0]
    op = ToeplitzOperator(col, row)
    a, b, v = rng.standard_normal((3, n))
    fast = thd_matvec(op, LowRankFactors(a[:, None], b[:, None]), v)
    dense = (op.to_dense() * np.outer(a, b)) @ v
    np.testing.assert_allclose(fast, dense, atol=1e-12 * (np.abs(op.to_dense()).max() * np.abs(a).max()
                                                         * np.abs(b).max() * np.abs(v).sum() + 1))


def _thd_sweep(alpha=0.4):
    times = []
    for k in range(12, 16):
        N = 2 ** k
        op = ToeplitzOperator(toeplitz_generator(alpha, N))
        gen = hankel_generator(alpha, N)
        f = pivoted_cholesky(gen, scale=1 / np.sqrt(gen[::2]))
        v = np.random.default_rng(k).standard_normal(N + 1)
        samples = []
        for _ in range(20):
            start = time.perf_counter()
            thd_matvec(op, f, v)
            samples.append(time.perf_counter() - start)
        times.append(float(np.median(samples)))
    return times, [b / a for a, b in zip(times[:-1], times[1:])]


def test_thd_complexity_soft():
    """Soft: median wall time grows at most 3x per doubling of N.

    Single-step ratios on a shared machine jump with cache effects, so the
    check uses the geometric-mean growth over the whole sweep.
    """
    times, growth = _thd_sweep()
    mean_growth = (times[-1] / times[0]) ** (1 / (len(times) - 1))
    print("thd_matvec medians", ["%.4f" % t for t in times], "growth", ["%.2f" % g for g in growth],
          "mean %.2f" % mean_growth)
    assert mean_growth <= 3.0
