"""Time-fractional diffusion ``0D_t^alpha u - u_xx = g`` on ``(0, L) x (0, T]``.

Central differences on ``x_i = i h``, the Petrov-Galerkin scheme in time. With
the coefficients of node ``i`` stored in row ``i`` of ``U`` the block system
``kron(I, S) - kron(I2, M)`` acts as ``U S - I2 U M^T``, where
``I2 = tridiag(1, -2, 1) / h^2``.

``I2`` is diagonalized by the orthonormal DST-I, so the preconditioner
``kron(I, S) - kron(I2, M_k)`` (``M_k`` the diagonal or tridiagonal part of
``M``) splits into independent small systems ``S + |mu_j| M_k``, one per
spatial mode.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy import fft
from scipy.sparse.linalg import splu

from .exceptions import DomainError
from .fractional import check_order
from .jacobi import BasisSpec, weighted_norm_sq
from .solver import (IterationConfig, IterationReport, PgSystem, dense_mass_matrix, load_vector,
                     make_mass, mass_bands, solve_iterative, stiffness_diag)
from .sources import Source

#: truncations up to this size use the explicit mass matrix inside block products
TFDE_DENSE_LIMIT = 4096
#: fractional order from which the tridiagonal preconditioner is used
M2_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class TfdeSource:
    """``g(x, t) = t^origin_power * smooth(x, t)``, ``smooth`` broadcasting in both."""

    smooth: Callable
    origin_power: float = 0.0
    breakpoints: tuple = ()
    name: str = "custom"

    def __call__(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        value = self.smooth(x, t)
        return value * t ** self.origin_power if self.origin_power else value

    def temporal(self):
        # only the weight bookkeeping of Source is used by the load quadrature
        return Source(lambda t: t, self.origin_power, self.breakpoints, self.name)


def separable_source(spatial, temporal):
    """``g(x, t) = spatial(x) * temporal(t)`` for a :class:`Source` ``temporal``."""
    return TfdeSource(lambda x, t: spatial(x) * temporal.smooth(t), temporal.origin_power,
                      temporal.breakpoints, f"{temporal.name}*space")


def power_exp_sine(sigma):
    """``t^sigma e^t sin(pi x)``."""
    return TfdeSource(lambda x, t: np.exp(t) * np.sin(np.pi * x), float(sigma),
                      name=f"power-exp-sine:sigma={sigma:g}")


@dataclass(frozen=True, eq=False)
class TfdeProblem:
    alpha: float
    T: float
    L: float
    M_spatial: int
    source: TfdeSource

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_order(self.alpha))
        if self.M_spatial < 2:
            raise DomainError("M_spatial must be at least 2")
        if not (self.T > 0 and self.L > 0):
            raise DomainError("T and L must be positive")

    @property
    def h(self):
        return self.L / self.M_spatial

    @property
    def nodes(self):
        return self.h * np.arange(1, self.M_spatial)


def laplacian_matrix(M, h):
    """Sparse ``(1/h^2) tridiag(1, -2, 1)`` of size ``M - 1``."""
    n = M - 1
    off = np.ones(n - 1)
    return sp.diags([off, -2 * np.ones(n), off], [-1, 0, 1], format="csr") / h ** 2


def laplacian_eigenvalues(M, h):
    """``mu_j = -(4 / h^2) sin^2(j pi / (2M))``, ``j = 1..M-1``, in DST-I order."""
    j = np.arange(1, M)
    return -4.0 / h ** 2 * np.sin(0.5 * np.pi * j / M) ** 2


def to_modes(U):
    """Spatial coefficients to laplacian eigenbasis (orthonormal, its own inverse)."""
    return fft.dst(U, type=1, norm="ortho", axis=0)


from_modes = to_modes


@dataclass(frozen=True, eq=False)
class BlockSystem:
    alpha: float
    T: float
    N: int
    M_spatial: int
    h: float
    S_diag: np.ndarray
    mass: object
    G: np.ndarray

    @property
    def laplacian(self):
        return laplacian_matrix(self.M_spatial, self.h)

    @property
    def eigenvalues(self):
        return laplacian_eigenvalues(self.M_spatial, self.h)

    def apply_laplacian(self, V):
        out = -2.0 * V
        out[1:] += V[:-1]
        out[:-1] += V[1:]
        return out / self.h ** 2

    def apply(self, U):
        """``(kron(I, S) - kron(I2, M)) vec(U)`` without forming either factor."""
        return U * self.S_diag - self.apply_laplacian(self.mass.matvec(U))

    def to_dense(self):
        """Explicit Kronecker matrix (small problems only)."""
        I = np.eye(self.M_spatial - 1)
        return np.kron(I, np.diag(self.S_diag)) - np.kron(self.laplacian.toarray(), self.mass.to_dense())


def _mass_bands(system):
    """Main, sub and super diagonals of the mass matrix."""
    mass = system.mass
    if hasattr(mass, "matrix"):
        M = mass.matrix
        return np.diag(M).copy(), np.diag(M, -1).copy(), np.diag(M, 1).copy()
    return mass_bands(system.alpha, system.N, system.T)


class BlockPreconditioner:
    """``P = kron(I, S) - kron(I2, M_k)`` with ``M_k`` the diagonal (``M1``) or
    tridiagonal (``M2``) part of ``M``.

    In the laplacian eigenbasis ``P`` is block diagonal with blocks
    ``S + |mu_j| M_k``; ``M1`` blocks are inverted elementwise and the ``M2``
    blocks are assembled into one sparse matrix factored once.
    """

    def __init__(self, system, mode=None):
        if mode is None:
            mode = "M2" if system.alpha >= M2_THRESHOLD else "M1"
        if mode not in ("M1", "M2"):
            raise ValueError(f"unknown preconditioner mode {mode!r}")
        self.mode = mode
        self.system = system
        self.shift = -system.eigenvalues
        main, sub, sup = _mass_bands(system)
        self.bands = (main, sub, sup)
        S = system.S_diag
        if mode == "M1":
            self._diag = S[None, :] + self.shift[:, None] * main[None, :]
            self._lu = None
        else:
            n_modes, n = self.shift.size, S.size
            d0 = (S[None, :] + self.shift[:, None] * main[None, :]).ravel()
            dl = (self.shift[:, None] * np.append(sub, 0.0)[None, :]).ravel()[:-1]
            du = (self.shift[:, None] * np.append(sup, 0.0)[None, :]).ravel()[:-1]
            # blocks do not couple: zero the band entries across block borders
            dl[n - 1::n] = 0.0
            du[n - 1::n] = 0.0
            matrix = sp.diags([dl, d0, du], [-1, 0, 1], shape=(n_modes * n,) * 2, format="csc")
            self._lu = splu(matrix, permc_spec="NATURAL")
            self._shape = (n_modes, n)

    def solve_modal(self, R_hat):
        if self.mode == "M1":
            return R_hat / self._diag
        return self._lu.solve(np.ascontiguousarray(R_hat).ravel()).reshape(self._shape)

    def solve(self, R):
        """``P^{-1} R`` for a residual laid out like ``U``."""
        return from_modes(self.solve_modal(to_modes(R)))

    def apply(self, U):
        """``P U``, for checking the solve."""
        main, sub, sup = self.bands
        MU = U * main
        if self.mode == "M2":
            MU[:, 1:] += U[:, :-1] * sub
            MU[:, :-1] += U[:, 1:] * sup
        return U * self.system.S_diag - self.system.apply_laplacian(MU)


def tfde_load(problem, N, tol=1e-13):
    """``G[i, k] = (g(x_i, .), Q_k^{alpha,0})_{w^{alpha,0}}``."""
    x = problem.nodes
    g = problem.source
    G, _ = load_vector(g.temporal(), problem.alpha, N, problem.T, tol=tol,
                       batch=lambda t: g.smooth(x[:, None], t[None, :]))
    return G


def assemble_tfde(problem, N, mass=None, load_tol=1e-13):
    """Block system for truncation ``N``.

    ``mass`` defaults to the explicit matrix up to :data:`TFDE_DENSE_LIMIT`:
    with ``M - 1`` right-hand sides one matrix product is cheaper than the
    structured transform.
    """
    alpha, T = problem.alpha, problem.T
    if mass is None:
        mass = "dense" if N <= TFDE_DENSE_LIMIT else "structured"
    return BlockSystem(alpha, T, N, problem.M_spatial, problem.h, stiffness_diag(alpha, N, T),
                       make_mass(alpha, N, T, mass), tfde_load(problem, N, load_tol))


def _seed(system, config):
    n = min(config.seed_N, system.N) + 1
    shift = -system.eigenvalues
    if hasattr(system.mass, "matrix"):
        M_lead = system.mass.matrix[:n, :n]
    else:
        M_lead = dense_mass_matrix(system.alpha, n - 1, system.T)
    blocks = np.diag(system.S_diag[:n])[None] + shift[:, None, None] * M_lead[None]
    G_hat = to_modes(system.G[:, :n])
    U_hat = np.zeros((shift.size, system.N + 1))
    U_hat[:, :n] = np.linalg.solve(blocks, G_hat[..., None])[..., 0]
    return from_modes(U_hat)


def solve_tfde(system, config=None, mode=None):
    """Fixed-point iteration ``U <- U + P^{-1}(G - A U)``.

    The initial guess solves each spatial mode at ``config.seed_N``. Stops on
    ``||U^{m+1} - U^m||_F / ||U^{m+1}||_F < tol``.
    """
    config = IterationConfig() if config is None else config
    precond = BlockPreconditioner(system, mode)
    U = _seed(system, config)
    history = []
    converged = False
    if not np.any(system.G):
        return np.zeros_like(system.G), IterationReport(1, np.zeros(1), True)
    for _ in range(config.max_iter):
        step = precond.solve(system.G - system.apply(U))
        U = U + step
        norm = np.linalg.norm(U)
        rel = np.linalg.norm(step) / norm if norm > 0 else 0.0
        history.append(rel)
        if rel < config.tol:
            converged = True
            break
    return U, IterationReport(len(history), np.array(history), converged)


def _significant_modes(problem, mode_tol, probes=257):
    """Laplacian modes whose source samples reach ``mode_tol`` times the largest."""
    t = np.linspace(0.0, problem.T, probes)[1:]
    samples = to_modes(problem.source.smooth(problem.nodes[:, None], t[None, :]))
    size = np.abs(samples).max(axis=1)
    if not size.max() > 0:
        return np.array([], dtype=int)
    return np.nonzero(size > mode_tol * size.max())[0]


def solve_tfde_modal(problem, N, config=None, mode_tol=1e-15, load_tol=1e-13):
    """Reference solution by exact spatial decoupling.

    Each laplacian mode ``j`` is the scalar problem with ``lam = |mu_j|``,
    solved by the fast iterative solver. Modes whose sampled source stays
    below ``mode_tol`` times the largest are set to zero, and only the kept
    modes are projected onto the test basis.
    """
    config = IterationConfig(tol=1e-12) if config is None else config
    alpha, T = problem.alpha, problem.T
    x, g = problem.nodes, problem.source
    keep = _significant_modes(problem, mode_tol)
    U_hat = np.zeros((x.size, N + 1))
    if keep.size == 0:
        return U_hat, []
    G_keep, _ = load_vector(g.temporal(), alpha, N, T, tol=load_tol,
                            batch=lambda t: to_modes(g.smooth(x[:, None], t[None, :]))[keep])
    shift = -laplacian_eigenvalues(problem.M_spatial, problem.h)
    S = stiffness_diag(alpha, N, T)
    mass = make_mass(alpha, N, T, "structured" if N > 256 else "dense")
    iterations = []
    for row, j in enumerate(keep):
        system = PgSystem(alpha, shift[j], T, N, S, mass, G_keep[row])
        U_j, report = solve_iterative(system, config)
        U_hat[j] = U_j.values
        iterations.append(report.iterations)
    return from_modes(U_hat), iterations


def tfde_error(sol, ref, alpha, h, T=1.0):
    """``E = sqrt(h sum_i ||u_ref(x_i) - u_N(x_i)||^2_{w^{0,-alpha}})``.

    Per node the weighted time norm is ``sum_n d_n^2 h_n^{0,alpha}``; the
    shorter coefficient array is zero-padded.
    """
    sol, ref = np.atleast_2d(sol), np.atleast_2d(ref)
    if sol.shape[0] != ref.shape[0]:
        raise ValueError(f"spatial grids differ: {sol.shape[0]} vs {ref.shape[0]} nodes")
    width = max(sol.shape[1], ref.shape[1])
    d = np.zeros((sol.shape[0], width))
    d[:, : ref.shape[1]] += ref
    d[:, : sol.shape[1]] -= sol
    hn = weighted_norm_sq(np.arange(width), BasisSpec(0.0, alpha, T, 0))
    return float(np.sqrt(h * np.sum(d * d * hn)))
