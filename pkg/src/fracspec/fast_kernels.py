"""Structured matrix-vector products.

Toeplitz products by circulant embedding and real FFTs, greedy pivoted
Cholesky of a positive semidefinite Hankel matrix given by its generator,
and the Toeplitz-dot-Hankel product ``(T o H) v``.

All products act on the last axis, so a stack of vectors ``V`` of shape
``(..., n)`` is multiplied row by row.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .exceptions import NotPSDError, RankOverflowError

# upper bound on complex entries held at once by batched products
_CHUNK_ENTRIES = 1 << 23
_RANK_CHUNK = 8


def _embedding_size(m):
    # any length >= 2n - 1 avoids wrap-around; 5-smooth lengths keep the FFT fast
    return fft.next_fast_len(int(m), real=True)


class ToeplitzOperator:
    """Toeplitz matrix ``T[i, j] = col[i - j]`` (``i >= j``), ``row[j - i]`` otherwise."""

    def __init__(self, first_col, first_row=None):
        first_col = np.asarray(first_col, dtype=float)
        if first_row is None:
            first_row = np.zeros_like(first_col)
            first_row[0] = first_col[0]
        first_row = np.asarray(first_row, dtype=float)
        if first_col.shape != first_row.shape or first_col.ndim != 1:
            raise ValueError("first_col and first_row must be 1-D of equal length")
        if first_col[0] != first_row[0]:
            raise ValueError("first_col[0] and first_row[0] must agree")
        self.first_col = first_col
        self.first_row = first_row
        n = first_col.size
        self.n = n
        self.size = _embedding_size(2 * n - 1)
        circ = np.zeros(self.size)
        circ[:n] = first_col
        if n > 1:
            circ[self.size - n + 1:] = first_row[1:][::-1]
        self._symbol = fft.rfft(circ)

    @property
    def shape(self):
        return (self.n, self.n)

    def transpose(self):
        return ToeplitzOperator(self.first_row, self.first_col)

    def to_dense(self):
        i, j = np.indices(self.shape)
        d = i - j
        return np.where(d >= 0, self.first_col[np.abs(d)], self.first_row[np.abs(d)])

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.n:
            raise ValueError(f"expected last axis of length {self.n}, got {v.shape}")
        spectrum = fft.rfft(v, n=self.size, axis=-1)
        return fft.irfft(spectrum * self._symbol, n=self.size, axis=-1)[..., : self.n]


def toeplitz_matvec(op, v):
    """``T v`` in ``O(n log n)`` via a power-of-two circulant embedding."""
    return op.matvec(v)


@dataclass(frozen=True, eq=False)
class LowRankFactors:
    """``left @ right.T`` approximating a symmetric matrix."""

    left: np.ndarray
    right: np.ndarray
    tol: float = 0.0

    @property
    def rank(self):
        return self.left.shape[1]

    def to_dense(self):
        return self.left @ self.right.T


def hankel_dense(hankel_gen, n=None):
    """Materialize ``H[i, j] = hankel_gen[i + j]`` (tests and small problems only)."""
    hankel_gen = np.asarray(hankel_gen, dtype=float)
    if n is None:
        n = (hankel_gen.size + 1) // 2
    i, j = np.indices((n, n))
    return hankel_gen[i + j]


def pivoted_cholesky(hankel_gen, tol=1e-13, max_rank=200, scale=None):
    """Greedy pivoted Cholesky of the Hankel matrix ``H[i, j] = hankel_gen[i + j]``.

    Entries are read from the generator; the dense matrix is never formed.

    Parameters
    ----------
    hankel_gen : array of length ``2n - 1``
    tol : float
        Stop once every residual diagonal entry is ``<= tol``.
    max_rank : int
    scale : array of length ``n``, optional
        Factorize the congruent matrix ``diag(scale) H diag(scale)`` instead
        and undo the scaling in the returned factors. With
        ``scale = 1/sqrt(diag(H))`` the tolerance becomes relative to
        ``sqrt(H[i, i] H[j, j])`` entrywise.

    Returns
    -------
    LowRankFactors
        with ``left == right``.

    Raises
    ------
    NotPSDError
        A pivot falls below ``-tol`` times the initial largest pivot.
    RankOverflowError
        ``max_rank`` terms do not reach ``tol``.
    """
    gen = np.asarray(hankel_gen, dtype=float)
    n = (gen.size + 1) // 2
    if gen.size != 2 * n - 1:
        raise ValueError("Hankel generator must have odd length 2n - 1")
    scale = np.ones(n) if scale is None else np.asarray(scale, dtype=float)
    idx = np.arange(n)
    residual = gen[2 * idx] * scale * scale
    if n == 0 or not np.any(residual):
        empty = np.zeros((n, 0))
        return LowRankFactors(empty, empty, tol)
    first_pivot = residual.max()
    L = np.zeros((n, min(max_rank, n)))
    rank = 0
    while True:
        p = int(np.argmax(residual))
        pivot = residual[p]
        # cancellation in the residual update leaves O(rank * eps) negatives
        floor = max(tol, 16 * (rank + 1) * np.finfo(float).eps) * first_pivot
        if residual.min() < -floor:
            raise NotPSDError(f"pivot {residual.min():.3e} below -tol * max pivot")
        if pivot <= tol:
            break
        if rank == L.shape[1]:
            if rank == n:
                break
            raise RankOverflowError(
                f"residual {pivot:.3e} > tol {tol:.1e} at rank {rank}")
        column = gen[idx + p] * scale * scale[p] - L[:, :rank] @ L[p, :rank]
        column /= np.sqrt(pivot)
        L[:, rank] = column
        rank += 1
        residual = residual - column * column
        residual[p] = 0.0
    L = L[:, :rank] / scale[:, None]
    return LowRankFactors(L, L, tol)


def thd_matvec(op, factors, v):
    """``(T o H) v`` with ``H ~ left @ right.T``.

    Uses ``(T o a b^T) v = diag(a) T diag(b) v`` summed over rank-one terms,
    so the cost is ``rank`` Toeplitz products.
    """
    v = np.asarray(v, dtype=float)
    r = factors.rank
    if r == 0:
        return np.zeros_like(v)
    lead = v.shape[:-1]
    flat = v.reshape(-1, v.shape[-1])
    out = np.zeros_like(flat)
    # a few rank-one terms at a time keeps the FFT workspace in cache
    rc = min(r, _RANK_CHUNK)
    step = max(1, _CHUNK_ENTRIES // (rc * op.size))
    for r0 in range(0, r, rc):
        left_t = factors.left[:, r0:r0 + rc].T
        right_t = factors.right[:, r0:r0 + rc].T
        for start in range(0, flat.shape[0], step):
            block = flat[start:start + step]
            terms = op.matvec(block[:, None, :] * right_t[None, :, :])
            out[start:start + step] += np.einsum("brn,rn->bn", terms, left_t)
    return out.reshape(lead + (v.shape[-1],))
