"""Connection coefficients between shifted Jacobi families.

``Q_n^{a,0} = sum_k c[n, k] Q_k^{a,a}`` has a closed form which factors as
``C = (T o H) D`` with ``T`` Toeplitz, ``H`` Hankel (positive semidefinite,
numerically low rank) and ``D`` diagonal. The first-parameter promotion
``Q_n^{0,a} = sum_k c'[n, k] Q_k^{a,a}`` follows from reflection,
``c'[n, k] = (-1)^(n-k) c[n, k]``; paired with the factorization this is
the fast polynomial transform used by the iterative solver.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .exceptions import DomainError
from .fast_kernels import LowRankFactors, ToeplitzOperator, pivoted_cholesky, thd_matvec
from .jacobi import (BasisSpec, SpectralCoeffs, gauss_jacobi, jacobi_vandermonde,
                     log_gamma_ratio, weighted_norm_sq)
from .fractional import check_order

#: above this truncation the structured transform replaces dense matrices
DENSE_LIMIT = 256


@dataclass(frozen=True, eq=False)
class ConnectionMatrix:
    """Lower-triangular ``entries[n, k]`` with ``Q_n^{from} = sum_k entries[n, k] Q_k^{to}``."""

    from_spec: BasisSpec
    to_spec: BasisSpec
    entries: np.ndarray


def connection_dense_oracle(from_spec, to_spec):
    """Connection matrix by projection, ``c[n, k] = (Q_n^from, Q_k^to)_to / h_k^to``.

    The quadrature carries the target weight with ``N + 1`` nodes, exact for the
    degree ``2N`` integrands.
    """
    if from_spec.T != to_spec.T or from_spec.N != to_spec.N:
        raise ValueError("connection needs bases sharing T and N")
    N = to_spec.N
    rule = gauss_jacobi(to_spec.gamma, to_spec.beta, N + 1, to_spec.T)
    x = 2.0 * rule.nodes / rule.T - 1.0
    v_from = jacobi_vandermonde(N, from_spec.gamma, from_spec.beta, x)
    v_to = jacobi_vandermonde(N, to_spec.gamma, to_spec.beta, x)
    h = weighted_norm_sq(np.arange(N + 1), to_spec)
    entries = (v_from.T * rule.weights) @ v_to / h
    return ConnectionMatrix(from_spec, to_spec, np.tril(entries))


def _toeplitz_entries(m, alpha):
    # (-1)^m Gamma(m - alpha) / Gamma(m + 1); Gamma(-alpha) < 0 at m = 0
    m = np.asarray(m, dtype=float)
    mag = np.exp(log_gamma_ratio(np.maximum(m, 1.0), -alpha, 1.0))
    mag = np.where(m == 0, gamma_fn(-alpha), mag)
    return np.where(m % 2 == 0, 1.0, -1.0) * mag


def _hankel_entries(s, alpha):
    return np.exp(log_gamma_ratio(s, alpha + 1, 2 * alpha + 2))


def _diagonal_entries(k, alpha):
    k = np.asarray(k, dtype=float)
    return (2 * k + 2 * alpha + 1) * np.exp(
        log_gamma_ratio(k, 2 * alpha + 1, alpha + 1)) / gamma_fn(-alpha)


def closed_form_second_param(n, k, alpha):
    """Closed-form ``c[n, k]`` for ``Q_n^{alpha,0} -> Q_k^{alpha,alpha}``.

    Written as the product of Toeplitz, Hankel and diagonal factors, each a
    ratio of Gamma functions evaluated without cancellation. ``n`` and ``k``
    may be broadcastable integer arrays; entries with ``k > n`` are zero.
    """
    alpha = check_order(alpha)
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    m = n - k
    valid = m >= 0
    m = np.where(valid, m, 0.0)
    value = (_toeplitz_entries(m, alpha) * _hankel_entries(n + k, alpha)
             * _diagonal_entries(k, alpha))
    out = np.where(valid, value, 0.0)
    return out if np.ndim(out) else float(out)


def second_param_matrix(alpha, N):
    """Dense ``C^{alpha,0 -> alpha}`` from the closed form."""
    n, k = np.indices((N + 1, N + 1))
    return closed_form_second_param(n, k, alpha)


def reflection_signs(N):
    return np.where(np.arange(N + 1) % 2 == 0, 1.0, -1.0)


def first_param_matrix(alpha, N):
    """Dense ``C^{0 -> alpha, alpha}`` via ``c'[n, k] = (-1)^(n-k) c[n, k]``."""
    s = reflection_signs(N)
    return s[:, None] * second_param_matrix(alpha, N) * s[None, :]


def toeplitz_generator(alpha, N):
    return _toeplitz_entries(np.arange(N + 1), alpha)


def hankel_generator(alpha, N):
    return _hankel_entries(np.arange(2 * N + 1, dtype=float), alpha)


def diagonal_factor(alpha, N):
    return _diagonal_entries(np.arange(N + 1), alpha)


@dataclass(frozen=True, eq=False)
class StructuredConnection:
    """``C^{alpha,0->alpha} = (T o H) D`` with ``H`` held as low-rank factors."""

    alpha: float
    N: int
    diag_D: np.ndarray
    toeplitz_col: np.ndarray
    hankel_gen: np.ndarray
    hankel_rank_factors: LowRankFactors
    tol: float

    def __post_init__(self):
        op = ToeplitzOperator(self.toeplitz_col)
        object.__setattr__(self, "_toeplitz", op)
        object.__setattr__(self, "_toeplitz_t", op.transpose())

    @property
    def rank(self):
        return self.hankel_rank_factors.rank

    def apply(self, v):
        """``C v`` along the last axis."""
        return thd_matvec(self._toeplitz, self.hankel_rank_factors, v * self.diag_D)

    def apply_transpose(self, v):
        """``C^T v = D (T^T o H) v`` along the last axis."""
        return self.diag_D * thd_matvec(self._toeplitz_t, self.hankel_rank_factors, v)

    def apply_first_param_transpose(self, v):
        """``(C^{0->alpha,alpha})^T v`` through the reflection signs."""
        s = reflection_signs(self.N)
        return s * self.apply_transpose(s * v)

    def to_dense(self):
        T = self._toeplitz.to_dense()
        H = self.hankel_rank_factors.to_dense()
        return np.tril(T * H) * self.diag_D[None, :]


def build_structured(alpha, N, tol=1e-13, max_rank=200):
    """Factor ``C^{alpha,0->alpha}`` as ``(T o H) D``.

    The Hankel part is compressed by pivoted Cholesky after symmetric diagonal
    scaling to unit diagonal, so ``tol`` bounds the error of ``H`` relative to
    ``sqrt(H[n, n] H[k, k])``; the entries of ``H`` decay like
    ``(n + k)^{-1 - alpha}`` and an absolute tolerance would lose the
    trailing rows.
    """
    alpha = check_order(alpha)
    gen = hankel_generator(alpha, N)
    scale = 1.0 / np.sqrt(gen[::2])
    factors = pivoted_cholesky(gen, tol=tol, max_rank=max_rank, scale=scale)
    return StructuredConnection(alpha, N, diagonal_factor(alpha, N),
                                toeplitz_generator(alpha, N), gen, factors, tol)


def transform_to_alpha_alpha(U, structured=None):
    """Re-expand ``sum_n u_n Q_n^{0,alpha}`` in the ``(alpha, alpha)`` family.

    Computes ``(C^{0->alpha,alpha})^T U``; dense for small ``N`` unless a
    :class:`StructuredConnection` is supplied or ``N`` exceeds
    :data:`DENSE_LIMIT`.
    """
    basis = U.basis
    if basis.gamma != 0:
        raise DomainError("transform_to_alpha_alpha expects coefficients in a (0, alpha) basis")
    alpha = basis.beta
    N = basis.N
    if structured is None and N > DENSE_LIMIT:
        structured = build_structured(alpha, N)
    if structured is not None:
        values = structured.apply_first_param_transpose(U.values)
    else:
        values = first_param_matrix(alpha, N).T @ U.values
    target = BasisSpec(alpha, alpha, basis.T, N)
    return SpectralCoeffs(target, values, U.weight_exponent)
