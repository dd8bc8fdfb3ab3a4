"""Spectral Petrov-Galerkin discretization of ``0D_t^alpha u + lam u = f``.

Trial functions are ``t^alpha Q_n^{0,alpha}``, test functions ``Q_k^{alpha,0}``.
Using the right-sided derivative of the test functions the system is

    (S + lam M) U = F,

with ``S = diag(lambda_n^alpha h_n^{alpha,0})``, ``M[k, n] = int w^{alpha,alpha}
Q_n^{0,alpha} Q_k^{alpha,0}`` and ``F[k] = (f, Q_k^{alpha,0})_{w^{alpha,0}}``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .connection import DENSE_LIMIT, build_structured
from .exceptions import DomainError, QuadratureError, SingularSystemError
from .fractional import check_order
from .jacobi import (BasisSpec, SpectralCoeffs, gauss_jacobi, jacobi_series, jacobi_vandermonde,
                     lambda_ratio, mapped_rule, recurrence_coefficients, weighted_norm_sq)
from .sources import Source

# largest Vandermonde held in memory by the load quadrature (entries)
_VANDERMONDE_ENTRIES = 1 << 23


@dataclass(frozen=True)
class FivpProblem:
    """``0D_t^alpha u + lam u = f`` on ``(0, T]`` with ``u(0) = 0``."""

    alpha: float
    lam: float
    T: float
    source: Source

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_order(self.alpha))
        if not self.lam >= 0:
            raise DomainError(f"lambda must be nonnegative, got {self.lam}")
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T}")
        if not isinstance(self.source, Source):
            object.__setattr__(self, "source", Source(self.source))


@dataclass(frozen=True)
class IterationConfig:
    tol: float = 1e-7
    max_iter: int = 100
    seed_N: int = 8

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if self.seed_N < 0:
            raise DomainError("seed_N must be nonnegative")


@dataclass(frozen=True, eq=False)
class IterationReport:
    iterations: int
    relative_update_history: np.ndarray
    converged: bool


# -- mass matrix --------------------------------------------------------------

def dense_mass_matrix(alpha, N, T=1.0, npts=None):
    """``M[k, n] = int_0^T w^{alpha,alpha} Q_n^{0,alpha} Q_k^{alpha,0} dt``.

    The ``(alpha, alpha)`` Gauss-Jacobi rule with ``npts >= N + 1`` nodes is
    exact for the degree ``2N`` integrand.
    """
    npts = N + 1 if npts is None else npts
    if npts < N + 1:
        raise DomainError(f"mass quadrature needs at least N + 1 = {N + 1} points")
    rule = gauss_jacobi(alpha, alpha, npts, T)
    x = 2.0 * rule.nodes / T - 1.0
    test = jacobi_vandermonde(N, alpha, 0.0, x)
    trial = jacobi_vandermonde(N, 0.0, alpha, x)
    return (test.T * rule.weights) @ trial


def mass_bands(alpha, N, T=1.0):
    """Main, sub (``M[k+1, k]``) and super (``M[k, k+1]``) diagonals of the mass matrix.

    Same quadrature as :func:`dense_mass_matrix`, streamed over the degree so
    memory stays ``O(N)``.
    """
    rule = gauss_jacobi(alpha, alpha, N + 1, T)
    x = 2.0 * rule.nodes / T - 1.0
    w = rule.weights
    main, sub, sup = np.empty(N + 1), np.empty(N), np.empty(N)

    def step(k, prev, cur, a, b):
        if k == 0:
            return cur, 0.5 * ((a + b + 2) * x + (a - b))
        A, B, C = recurrence_coefficients(k, a, b)
        return cur, (A * x + B) * cur - C * prev

    test_prev, test = None, np.ones_like(x)
    trial_prev, trial = None, np.ones_like(x)
    for k in range(N + 1):
        main[k] = np.dot(w * test, trial)
        if k == N:
            break
        test_next = step(k, test_prev, test, alpha, 0.0)[1]
        trial_next = step(k, trial_prev, trial, 0.0, alpha)[1]
        sub[k] = np.dot(w * test_next, trial)
        sup[k] = np.dot(w * test, trial_next)
        test_prev, test = test, test_next
        trial_prev, trial = trial, trial_next
    return main, sub, sup


class DenseMass:
    """Explicit mass matrix."""

    kind = "dense"

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)
        self.N = self.matrix.shape[0] - 1

    def matvec(self, U):
        """``M U`` along the last axis."""
        return U @ self.matrix.T

    def to_dense(self):
        return self.matrix

    def leading_block(self, n):
        return self.matrix[:n, :n]


class StructuredMass:
    """``M = C^{alpha,0->alpha} H^alpha (C^{0->alpha,alpha})^T`` applied matrix-free.

    ``H^alpha = diag(h_n^{alpha,alpha})``; both connection matrices come from
    one Toeplitz-dot-Hankel factorization through the reflection signs.
    """

    kind = "structured"

    def __init__(self, alpha, N, T=1.0, structured=None):
        self.alpha = alpha
        self.N = N
        self.T = T
        self.structured = build_structured(alpha, N) if structured is None else structured
        self.h_aa = weighted_norm_sq(np.arange(N + 1), BasisSpec(alpha, alpha, T, N))

    def matvec(self, U):
        inner = self.structured.apply_first_param_transpose(U)
        return self.structured.apply(inner * self.h_aa)

    def to_dense(self):
        return self.matvec(np.eye(self.N + 1)).T

    def leading_block(self, n):
        # the leading block does not depend on the truncation
        return dense_mass_matrix(self.alpha, n - 1, self.T)


@dataclass(frozen=True, eq=False)
class PgSystem:
    alpha: float
    lam: float
    T: float
    N: int
    S_diag: np.ndarray
    mass: object
    F: np.ndarray
    load_info: dict = field(default_factory=dict)

    def apply(self, U):
        """``A U = (S + lam M) U`` along the last axis."""
        out = self.S_diag * U
        if self.lam != 0:
            out = out + self.lam * self.mass.matvec(U)
        return out

    def preconditioner_diag(self):
        h_aa = weighted_norm_sq(np.arange(self.N + 1), BasisSpec(self.alpha, self.alpha, self.T, self.N))
        return self.S_diag + self.lam * h_aa

    def trial_basis(self):
        return BasisSpec(0.0, self.alpha, self.T, self.N)


def stiffness_diag(alpha, N, T=1.0):
    """``S[n] = lambda_n^alpha h_n^{alpha,0}``."""
    n = np.arange(N + 1)
    return lambda_ratio(n, alpha) * weighted_norm_sq(n, BasisSpec(alpha, 0.0, T, N))


def make_mass(alpha, N, T=1.0, kind="auto", npts=None):
    if kind == "auto":
        kind = "dense" if N <= DENSE_LIMIT else "structured"
    if kind == "dense":
        return DenseMass(dense_mass_matrix(alpha, N, T, npts))
    if kind == "structured":
        return StructuredMass(alpha, N, T)
    raise ValueError(f"unknown mass kind {kind!r}")


# -- load vector --------------------------------------------------------------

def _piece_rule(a, b, T, alpha, p, npts):
    """Nodes, weights and explicit weight factor for one piece of ``[0, T]``.

    The full weight is ``(T - t)^alpha t^p``; end pieces carry the singular
    factor touching their endpoint in the Gauss-Jacobi weight.
    """
    at_origin, at_end = a == 0.0, b == T
    gamma = alpha if at_end else 0.0
    beta = p if at_origin else 0.0
    nodes, weights = mapped_rule(gamma, beta, npts, a, b)
    factor = np.ones_like(nodes)
    if not at_end:
        factor = factor * (T - nodes) ** alpha
    if not at_origin and p != 0:
        factor = factor * nodes ** p
    return nodes, weights * factor


def project_onto(values, nodes, weights, K, gamma, beta, T):
    """``out[..., k] = sum_j weights_j values[..., j] Q_k^{gamma,beta}(nodes_j)``, ``k <= K``."""
    values = np.asarray(values, dtype=float) * weights
    x = 2.0 * nodes / T - 1.0
    if x.size * (K + 1) <= _VANDERMONDE_ENTRIES:
        return values @ jacobi_vandermonde(K, gamma, beta, x)
    # stream the recurrence in blocks of degrees, one matrix product per block
    width = max(2, _VANDERMONDE_ENTRIES // x.size)
    out = np.empty(values.shape[:-1] + (K + 1,))
    block = np.empty((width, x.size))
    p_prev, p = None, np.ones_like(x)
    for k0 in range(0, K + 1, width):
        k1 = min(K + 1, k0 + width)
        for k in range(k0, k1):
            block[k - k0] = p
            if k == 0:
                p_prev, p = p, 0.5 * ((gamma + beta + 2) * x + (gamma - beta))
            elif k < K:
                A, B, C = recurrence_coefficients(k, gamma, beta)
                p_prev, p = p, (A * x + B) * p - C * p_prev
        out[..., k0:k1] = values @ block[: k1 - k0].T
    return out


def _raw_load(source, alpha, T, K, npts, batch=None):
    """Projections for ``k <= K`` using ``npts`` nodes on every piece."""
    total = 0.0
    for a, b in source.pieces(T):
        nodes, weights = _piece_rule(a, b, T, alpha, source.origin_power, npts)
        smooth = source.smooth(nodes) if batch is None else batch(nodes)
        total = total + project_onto(smooth, nodes, weights, K, alpha, 0.0, T)
    return total


def load_vector(source, alpha, N, T=1.0, tol=1e-13, start_npts=64, max_npts=1 << 18, batch=None):
    """``F[k] = int_0^T (T - t)^alpha f(t) Q_k^{alpha,0}(t) dt`` for ``k <= N``.

    Gauss-Jacobi quadrature per piece with doubling. With ``n`` nodes the
    coefficients ``k <= min(N, n - 1)`` are compared against the ``2n`` result;
    the loop stops when they agree to ``tol * max|F|``. Coefficients above the
    covered range are set to zero once the computed tail has decayed below the
    same threshold, so smooth sources never need ``O(N)`` nodes.

    ``batch`` replaces ``source.smooth`` by a callable returning an array of
    shape ``(m, npts)``, giving ``m`` load vectors at once.

    Returns
    -------
    F : ndarray
    info : dict
        ``npts`` used and ``covered`` (largest coefficient computed).
    """
    npts = start_npts
    K = min(N, npts - 1)
    previous = _raw_load(source, alpha, T, K, npts, batch)
    while True:
        if 2 * npts > max_npts:
            raise QuadratureError(
                f"load vector not converged with {npts} nodes per piece (cap {max_npts})")
        npts *= 2
        K_new = min(N, npts - 1)
        current = _raw_load(source, alpha, T, K_new, npts, batch)
        scale = np.max(np.abs(current)) if np.size(current) else 0.0
        threshold = tol * max(scale, np.finfo(float).tiny)
        change = np.max(np.abs(current[..., : K + 1] - previous), initial=0.0)
        if scale == 0.0 or change < threshold:
            if K_new == N:
                break
            tail = np.abs(current[..., K_new // 2 + 1:])
            if np.max(tail, initial=0.0) < threshold:
                break
        previous, K = current, K_new
    F = np.zeros(np.shape(current)[:-1] + (N + 1,))
    F[..., : K_new + 1] = current
    return F, {"npts": npts, "covered": K_new}


# -- assembly and solvers -----------------------------------------------------

def assemble(problem, N, quad_npts=None, mass="auto", load_tol=1e-13):
    """Assemble the Petrov-Galerkin system for truncation ``N``.

    Parameters
    ----------
    problem : FivpProblem
    N : int
    quad_npts : int, optional
        Nodes of the mass-matrix rule, at least ``N + 1`` (the default).
    mass : {"auto", "dense", "structured"}
        ``auto`` picks the dense matrix up to ``DENSE_LIMIT``.
    """
    if N < 0:
        raise DomainError("N must be nonnegative")
    alpha, T = problem.alpha, problem.T
    F, info = load_vector(problem.source, alpha, N, T, tol=load_tol)
    return PgSystem(alpha, problem.lam, T, N, stiffness_diag(alpha, N, T),
                    make_mass(alpha, N, T, mass, quad_npts), F, info)


def solve_direct(system):
    """Solve ``(S + lam M) U = F`` by LU with partial pivoting."""
    A = np.diag(system.S_diag)
    if system.lam != 0:
        A = A + system.lam * system.mass.to_dense()
    with np.errstate(all="raise"):
        try:
            lu = lu_factor(A, check_finite=True)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            raise SingularSystemError(f"system matrix could not be factorized: {exc}") from exc
    if np.any(np.diag(lu[0]) == 0):
        raise SingularSystemError("system matrix is singular")
    U = lu_solve(lu, system.F)
    return SpectralCoeffs(system.trial_basis(), U, system.alpha)


def _seed(system, config):
    n = min(config.seed_N, system.N) + 1
    A = np.diag(system.S_diag[:n])
    if system.lam != 0:
        A = A + system.lam * system.mass.leading_block(n)
    U = np.zeros(system.N + 1)
    U[:n] = np.linalg.solve(A, system.F[:n])
    return U


def solve_iterative(system, config=None):
    """Preconditioned fixed-point iteration ``U <- U + P^{-1}(F - A U)``.

    ``P = S + lam diag(h_n^{alpha,alpha})`` is diagonal and ``A U`` uses the
    mass handle, so a structured mass gives ``O(N log N)`` work per step.
    The initial guess is the zero-padded direct solution at ``config.seed_N``.
    When ``lam = 0`` the preconditioner is the system matrix and a single step
    is exact.
    """
    config = IterationConfig() if config is None else config
    P = system.preconditioner_diag()
    F = system.F
    if system.lam == 0:
        U = F / P
        history = np.array([1.0 if np.any(U) else 0.0])
        return (SpectralCoeffs(system.trial_basis(), U, system.alpha),
                IterationReport(1, history, True))
    U = _seed(system, config)
    history = []
    converged = False
    for _ in range(config.max_iter):
        step = (F - system.apply(U)) / P
        U = U + step
        norm = np.linalg.norm(U)
        rel = np.linalg.norm(step) / norm if norm > 0 else 0.0
        history.append(rel)
        if rel < config.tol:
            converged = True
            break
    report = IterationReport(len(history), np.array(history), converged)
    return SpectralCoeffs(system.trial_basis(), U, system.alpha), report


def evaluate(U, ts):
    """``u_N(t) = t^alpha sum_n u_n Q_n^{0,alpha}(t)``."""
    ts = np.asarray(ts, dtype=float)
    basis = U.basis
    if np.any(ts < 0) or np.any(ts > basis.T):
        raise DomainError(f"evaluation points must lie in [0, {basis.T}]")
    x = 2.0 * ts / basis.T - 1.0
    return ts ** U.weight_exponent * jacobi_series(U.values, basis.gamma, basis.beta, x)


def solve(problem, N, solver="direct", config=None, mass="auto"):
    """Assemble and solve; returns ``(U, report)`` with ``report`` None for direct."""
    if solver == "direct":
        system = assemble(problem, N, mass="dense" if mass == "auto" else mass)
        return solve_direct(system), None
    if solver == "fast":
        system = assemble(problem, N, mass="structured" if mass == "auto" else mass)
        return solve_iterative(system, config)
    raise ValueError(f"unknown solver {solver!r}")
