"""Fractional integrals and derivatives of weighted Jacobi polynomials.

Closed forms (left integral, left and right Caputo derivatives) plus
quadrature-based oracles used only for validation.
"""

import math
import warnings

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .exceptions import DomainError, ToleranceNotMetError
from .jacobi import _jacobi_values, _to_reference, log_gamma_ratio, mapped_rule


def check_order(alpha):
    """Validate a fractional order ``0 < alpha < 1`` and return it as float."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"fractional order must lie in (0, 1), got {alpha}")
    return alpha


def _check_t(t, T):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > T):
        raise DomainError(f"t must lie in [0, {T}]")
    return t


def _q(n, a, b, t, T):
    return _jacobi_values(int(n), a, b, _to_reference(t, T))


def weighted_jacobi(n, gamma, beta, T, t):
    """``t^beta Q_n^{gamma,beta}(t)``."""
    t = _check_t(t, T)
    return t ** beta * _q(n, gamma, beta, t, T)


def weighted_jacobi_derivative(n, gamma, beta, T, t):
    """First derivative of ``t^beta Q_n^{gamma,beta}(t)``."""
    t = _check_t(t, T)
    q = _q(n, gamma, beta, t, T)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = beta * t ** (beta - 1) * q if beta != 0 else np.zeros_like(t)
    if n > 0:
        dq = (n + gamma + beta + 1) / T * _q(n - 1, gamma + 1, beta + 1, t, T)
        out = out + t ** beta * dq
    return out


def frac_integral_weighted(n, gamma, beta, alpha, T, t):
    """Left Riemann-Liouville integral of ``t^beta Q_n^{gamma,beta}``.

    Returns ``Gamma(n+beta+1)/Gamma(n+beta+alpha+1) t^{beta+alpha}
    Q_n^{gamma-alpha,beta+alpha}(t)``.
    """
    alpha = check_order(alpha)
    if not beta > -1:
        raise DomainError(f"beta must exceed -1, got {beta}")
    t = _check_t(t, T)
    c = math.exp(log_gamma_ratio(n, beta + 1, beta + alpha + 1))
    return c * t ** (beta + alpha) * _q(n, gamma - alpha, beta + alpha, t, T)


def frac_deriv_weighted(n, gamma, beta, alpha, T, t):
    """Left Caputo derivative of ``t^beta Q_n^{gamma,beta}``, ``beta - alpha > -1``."""
    alpha = check_order(alpha)
    if not beta - alpha > -1:
        raise DomainError(f"need beta - alpha > -1, got beta={beta}, alpha={alpha}")
    t = _check_t(t, T)
    c = math.exp(log_gamma_ratio(n, beta + 1, beta - alpha + 1))
    with np.errstate(divide="ignore"):
        return c * t ** (beta - alpha) * _q(n, gamma + alpha, beta - alpha, t, T)


def right_frac_deriv_weighted(n, gamma, beta, alpha, T, t):
    """Right Caputo derivative of ``(T-t)^gamma Q_n^{gamma,beta}``, ``gamma - alpha > -1``."""
    alpha = check_order(alpha)
    if not gamma - alpha > -1:
        raise DomainError(f"need gamma - alpha > -1, got gamma={gamma}, alpha={alpha}")
    t = _check_t(t, T)
    c = math.exp(log_gamma_ratio(n, gamma + 1, gamma - alpha + 1))
    with np.errstate(divide="ignore"):
        return c * (T - t) ** (gamma - alpha) * _q(n, gamma - alpha, beta + alpha, t, T)


def _central_difference(u, h):
    return lambda s: (u(s + h) - u(s - h)) / (2 * h)


def _singular_panel(func, a, t, alpha, tol):
    """``int_a^t func(s) (t - s)^{-alpha} ds`` by Gauss-Jacobi with doubling."""
    previous = None
    for npts in (8, 16, 32, 64, 128, 256):
        nodes, weights = mapped_rule(-alpha, 0.0, npts, a, t)
        value = float(np.dot(weights, func(nodes)))
        if previous is not None and abs(value - previous) <= tol * max(1.0, abs(value)):
            return value, abs(value - previous)
        previous = value
    return value, abs(value - previous)


def _split_kernel_integral(func, alpha, t, tol, delta):
    split = t * (1.0 - delta)
    with warnings.catch_warnings():
        # an integrable endpoint singularity trips the heuristic; the error
        # estimate is checked by the caller instead
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        regular, reg_err = integrate.quad(
            lambda s: func(s) * (t - s) ** (-alpha), 0.0, split,
            epsabs=0.1 * tol, epsrel=0.1 * tol, limit=200)
    singular, sing_err = _singular_panel(
        lambda s: np.vectorize(func, otypes=[float])(s), split, t, alpha, 0.1 * tol)
    return regular + singular, reg_err + sing_err


def caputo_oracle(u, alpha, t, tol=1e-10, du=None, delta=0.1):
    """Caputo derivative of ``u`` at ``t`` from its defining integral.

    The interval is split at ``t (1 - delta)``; the panel touching ``t`` uses a
    Gauss-Jacobi rule carrying the kernel ``(t - s)^{-alpha}`` exactly and the
    other panel adaptive quadrature. ``du`` is the derivative of ``u``; when it
    is omitted a central difference is used, which limits attainable accuracy
    to roughly ``1e-9``.

    Raises
    ------
    ToleranceNotMetError
        If the estimated quadrature error exceeds ``tol``.
    """
    alpha = check_order(alpha)
    if not t > 0:
        raise DomainError("caputo_oracle needs t > 0")
    if du is None:
        du = _central_difference(u, 1e-6 * t)
    value, err = _split_kernel_integral(du, alpha, t, tol, delta)
    scale = 1.0 / gamma_fn(1.0 - alpha)
    value *= scale
    err *= scale
    if err > tol * max(1.0, abs(value)):
        raise ToleranceNotMetError(
            f"Caputo quadrature error {err:.2e} exceeds tolerance {tol:.2e}",
            estimate=value, error=err)
    return value


def frac_integral_oracle(u, order, t, tol=1e-12, delta=0.1):
    """Left fractional integral ``0I_t^order u`` from its defining integral."""
    if not 0 < order < 1:
        raise DomainError("order must lie in (0, 1)")
    if t == 0:
        return 0.0
    value, _ = _split_kernel_integral(u, 1.0 - order, t, tol, delta)
    return value / gamma_fn(order)


def riemann_liouville_oracle(u, alpha, t, h=None, tol=1e-12):
    """Riemann-Liouville derivative ``d/dt 0I_t^{1-alpha} u`` by central differencing."""
    alpha = check_order(alpha)
    if h is None:
        h = 1e-4 * t
    plus = frac_integral_oracle(u, 1.0 - alpha, t + h, tol)
    minus = frac_integral_oracle(u, 1.0 - alpha, t - h, tol)
    return (plus - minus) / (2 * h)
