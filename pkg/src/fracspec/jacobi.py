"""Shifted Jacobi polynomials on ``[0, T]`` and Gauss-Jacobi quadrature.

The shifted family is ``Q_n^{g,b}(t) = P_n^{g,b}(2t/T - 1)``, orthogonal on
``[0, T]`` against the weight ``(T - t)^g t^b``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.special import betaln

from .exceptions import DomainError, QuadratureError


@dataclass(frozen=True)
class BasisSpec:
    """Shifted Jacobi family ``{Q_n^{gamma,beta}}_{n<=N}`` on ``[0, T]``."""

    gamma: float
    beta: float
    T: float = 1.0
    N: int = 0

    def __post_init__(self):
        _check_indices(self.gamma, self.beta)
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 0:
            raise DomainError(f"N must be a nonnegative integer, got {self.N}")

    def with_N(self, N):
        return BasisSpec(self.gamma, self.beta, self.T, N)


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Coefficients ``c`` of ``t^weight_exponent * sum_n c_n Q_n(t)``.

    For trial functions of the Petrov-Galerkin scheme the basis is
    ``(0, alpha)`` and ``weight_exponent = alpha``.
    """

    basis: BasisSpec
    values: np.ndarray
    weight_exponent: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.basis.N + 1,):
            raise ValueError(
                f"expected {self.basis.N + 1} coefficients, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def N(self):
        return self.basis.N

    def padded(self, N):
        """Zero-pad (or keep) to truncation ``N >= self.N``."""
        if N < self.N:
            raise ValueError("cannot pad to a smaller truncation")
        values = np.zeros(N + 1)
        values[: self.N + 1] = self.values
        return SpectralCoeffs(self.basis.with_N(N), values, self.weight_exponent)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Jacobi rule for ``(T - t)^gamma t^beta`` on ``[0, T]``."""

    gamma: float
    beta: float
    npts: int
    nodes: np.ndarray
    weights: np.ndarray
    T: float = 1.0

    def integrate(self, values):
        """Apply the rule along the last axis of ``values``."""
        return np.asarray(values) @ self.weights


_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156)
_ASYMPTOTIC_FROM = 20.0


def log_gamma_ratio(x, a, b):
    """``log(Gamma(x + a) / Gamma(x + b))`` without cancellation at large ``x``.

    Needs ``x + a > 0`` and ``x + b > 0``. Differencing two ``gammaln`` values
    loses about ``log10(x log x)`` digits; here the Stirling series is
    differenced term by term and small arguments are shifted up first.
    """
    x = np.asarray(x, dtype=float)
    shift = np.maximum(np.ceil(_ASYMPTOTIC_FROM - np.minimum(x + a, x + b)), 0.0)
    out = np.zeros(np.broadcast(x, shift).shape)
    # Gamma(z) = Gamma(z + m) / (z (z + 1) ... (z + m - 1))
    for j in range(int(shift.max()) if shift.size else 0):
        active = j < shift
        out -= np.where(active, np.log1p((a - b) / (x + b + j)), 0.0)
    z = x + shift
    out += ((a - b) * np.log(z) + (z + a - 0.5) * np.log1p(a / z)
            - (z + b - 0.5) * np.log1p(b / z) - (a - b))
    za, zb = z + a, z + b
    for k, c in enumerate(_STIRLING, start=1):
        out += c * (za ** (1 - 2 * k) - zb ** (1 - 2 * k))
    return out


def _check_indices(gamma, beta):
    if not gamma > -1 or not beta > -1:
        raise DomainError(f"Jacobi indices must exceed -1, got ({gamma}, {beta})")


def _to_reference(t, T):
    return 2.0 * np.asarray(t, dtype=float) / T - 1.0


def recurrence_coefficients(k, a, b):
    """Return ``(A, B, C)`` with ``P_{k+1} = (A x + B) P_k - C P_{k-1}``.

    Valid for ``k >= 1``; ``P_1`` is handled separately by the callers.
    """
    s = 2 * k + a + b
    denom = 2 * (k + 1) * (k + a + b + 1) * s
    A = (s + 1) * (s + 2) * s / denom
    B = (s + 1) * (a * a - b * b) / denom
    C = 2 * (k + a) * (k + b) * (s + 2) / denom
    return A, B, C


def _jacobi_values(n, a, b, x):
    # no index check: fractional operators shift indices below -1
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev
    p = 0.5 * ((a + b + 2) * x + (a - b))
    for k in range(1, n):
        A, B, C = recurrence_coefficients(k, a, b)
        p_prev, p = p, (A * x + B) * p - C * p_prev
    return p


def eval_jacobi(n, gamma, beta, x):
    """Classical Jacobi polynomial ``P_n^{gamma,beta}(x)`` by recurrence."""
    _check_indices(gamma, beta)
    if n < 0:
        raise DomainError("degree must be nonnegative")
    return _jacobi_values(int(n), gamma, beta, x)


def eval_shifted(n, spec, t):
    """Shifted Jacobi polynomial ``Q_n^{gamma,beta}(t)`` for ``t`` in ``[0, T]``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > spec.T):
        raise DomainError(f"t must lie in [0, {spec.T}]")
    return _jacobi_values(int(n), spec.gamma, spec.beta, _to_reference(t, spec.T))


def jacobi_vandermonde(N, a, b, x):
    """Matrix ``V[j, n] = P_n^{a,b}(x_j)`` for ``n = 0..N``."""
    x = np.asarray(x, dtype=float)
    V = np.empty((x.size, N + 1), order="F")
    V[:, 0] = 1.0
    if N >= 1:
        V[:, 1] = 0.5 * ((a + b + 2) * x + (a - b))
    for k in range(1, N):
        A, B, C = recurrence_coefficients(k, a, b)
        V[:, k + 1] = (A * x + B) * V[:, k] - C * V[:, k - 1]
    return V


def jacobi_series(coeffs, a, b, x):
    """Evaluate ``sum_n coeffs[n] P_n^{a,b}(x)``."""
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    out = coeffs[0] * p_prev
    if coeffs.size == 1:
        return out
    p = 0.5 * ((a + b + 2) * x + (a - b))
    out = out + coeffs[1] * p
    for k in range(1, coeffs.size - 1):
        A, B, C = recurrence_coefficients(k, a, b)
        p_prev, p = p, (A * x + B) * p - C * p_prev
        out = out + coeffs[k + 1] * p
    return out


def shifted_series(coeffs, spec, t):
    """Evaluate ``sum_n coeffs[n] Q_n(t)`` in the family of ``spec``."""
    return jacobi_series(coeffs, spec.gamma, spec.beta, _to_reference(t, spec.T))


def log_weighted_norm_sq(n, gamma, beta, T=1.0):
    n = np.asarray(n, dtype=float)
    s = gamma + beta + 1
    m = np.maximum(n, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        general = (s * np.log(T) - np.log(2 * m + s) + log_gamma_ratio(m, gamma + 1, 1.0)
                   + log_gamma_ratio(m, beta + 1, s))
    zeroth = s * np.log(T) + betaln(gamma + 1, beta + 1)
    return np.where(n == 0, zeroth, general)


def weighted_norm_sq(n, spec):
    """Squared weighted norm ``h_n = ||Q_n||^2`` under ``(T - t)^gamma t^beta``.

    Evaluated in log space, so degrees far beyond the range of ``Gamma`` in
    double precision are fine. ``n`` may be an integer array.
    """
    if np.any(np.asarray(n) < 0):
        raise DomainError("degree must be nonnegative")
    out = np.exp(log_weighted_norm_sq(n, spec.gamma, spec.beta, spec.T))
    return out if np.ndim(out) else float(out)


def lambda_ratio(n, alpha):
    """Stiffness ratio ``Gamma(n + alpha + 1) / Gamma(n + 1)``."""
    out = np.exp(log_gamma_ratio(n, alpha + 1, 1.0))
    return out if np.ndim(out) else float(out)


def _jacobi_matrix(a, b, n):
    k = np.arange(n, dtype=float)
    s = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (b * b - a * a) / (s * (s + 2))
    diag[0] = (b - a) / (a + b + 2)
    k = k[1:]
    s = s[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        off_sq = 4 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1) * (s - 1))
    if n > 1:
        # the general expression is 0/0 at k = 1 when a + b = -1
        off_sq[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    return diag, np.sqrt(off_sq)


@lru_cache(maxsize=64)
def _reference_rule(a, b, n):
    diag, off = _jacobi_matrix(a, b, n)
    if n == 1:
        x = diag.copy()
    else:
        try:
            x = eigvalsh_tridiagonal(diag, off, lapack_driver="sterf")
        except np.linalg.LinAlgError as exc:
            raise QuadratureError(f"Jacobi matrix eigenvalues did not converge: {exc}")
    # Golub-Welsch weights: mu0 * (first eigenvector component)^2, with the
    # eigenvector written out through the orthonormal recurrence.
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    norm = np.ones_like(x)
    for k in range(n - 1):
        p_prev, p = p, ((x - diag[k]) * p - (off[k - 1] * p_prev if k else 0.0)) / off[k]
        norm += p * p
    mu0 = np.exp((a + b + 1) * np.log(2.0) + betaln(a + 1, b + 1))
    w = mu0 / norm
    order = np.argsort(x)
    x, w = x[order], w[order]
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi(gamma, beta, npts, T=1.0):
    """Gauss-Jacobi rule with ``npts`` nodes for ``(T - t)^gamma t^beta`` on ``[0, T]``.

    Exact for polynomials of degree ``<= 2 * npts - 1``.
    """
    _check_indices(gamma, beta)
    if npts < 1:
        raise DomainError("npts must be at least 1")
    x, w = _reference_rule(float(gamma), float(beta), int(npts))
    half = 0.5 * T
    return QuadratureRule(gamma, beta, int(npts), half * (x + 1.0),
                          w * half ** (gamma + beta + 1), T)


def mapped_rule(gamma, beta, npts, a, b):
    """Nodes and weights for ``(b - t)^gamma (t - a)^beta`` on ``[a, b]``."""
    x, w = _reference_rule(float(gamma), float(beta), int(npts))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), w * half ** (gamma + beta + 1)
