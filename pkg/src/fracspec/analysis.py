"""Error norms, convergence tables and the weighted Sobolev diagnostic."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .jacobi import BasisSpec, gauss_jacobi, jacobi_series, weighted_norm_sq

RATE_TOLERANCE = 0.15


def _check_compatible(U, U_ref):
    a, b = U.basis, U_ref.basis
    if (a.gamma, a.beta, a.T) != (b.gamma, b.beta, b.T) or U.weight_exponent != U_ref.weight_exponent:
        raise ValueError("coefficient vectors live in different bases")


def _difference(U, U_ref):
    _check_compatible(U, U_ref)
    size = max(U.values.size, U_ref.values.size)
    d = np.zeros(size)
    d[: U_ref.values.size] += U_ref.values
    d[: U.values.size] -= U.values
    return d


def weighted_norm(values, alpha, T=1.0):
    """``||t^alpha p||_{w^{0,-alpha}}`` for ``p = sum values_n Q_n^{0,alpha}``.

    ``t^{-alpha} t^{2 alpha} = t^alpha`` is the orthogonality weight of the
    trial basis, so the norm is ``sqrt(sum values_n^2 h_n^{0,alpha})``.
    """
    values = np.asarray(values, dtype=float)
    h = weighted_norm_sq(np.arange(values.shape[-1]), BasisSpec(0.0, alpha, T, 0))
    return np.sqrt(np.sum(values * values * h, axis=-1))


def weighted_error(U, U_ref, relative=True):
    """``||u_N - u_ref||_{w^{0,-alpha}}``, divided by ``||u_ref||`` when ``relative``."""
    alpha, T = U_ref.basis.beta, U_ref.basis.T
    err = float(weighted_norm(_difference(U, U_ref), alpha, T))
    if not relative:
        return err
    ref = float(weighted_norm(U_ref.values, alpha, T))
    return err / ref if ref > 0 else err


def standard_l2_norm(values, alpha, T=1.0):
    """``||t^alpha p||_{L^2(0,T)}`` by Gauss-Jacobi quadrature with weight ``t^{2 alpha}``."""
    values = np.asarray(values, dtype=float)
    # p^2 has degree 2N; N + 1 nodes integrate it exactly
    rule = gauss_jacobi(0.0, 2 * alpha, values.size, T)
    p = jacobi_series(values, 0.0, alpha, 2 * rule.nodes / T - 1)
    return math.sqrt(float(rule.integrate(p * p)))


def standard_l2_error(U, U_ref, relative=True):
    alpha, T = U_ref.basis.beta, U_ref.basis.T
    err = standard_l2_norm(_difference(U, U_ref), alpha, T)
    if not relative:
        return err
    ref = standard_l2_norm(U_ref.values, alpha, T)
    return err / ref if ref > 0 else err


@dataclass
class ConvergenceTable:
    """Rows of ``(N, error, rate)``; ``rate[i] = log2(error[i-1] / error[i])``."""

    N: list
    errors: list
    rates: list = field(default_factory=list)
    norm_kind: str = "weighted"
    expected_order: float = math.nan
    label: str = ""

    @property
    def final_rate(self):
        return self.rates[-1] if self.rates else math.nan

    def passed(self, tol=RATE_TOLERANCE):
        """Finest-level rate is at least ``expected_order - tol``.

        Exact zero errors (the discrete space contains the solution) pass.
        """
        if all(e == 0 for e in self.errors):
            return True
        rate = self.final_rate
        if math.isnan(self.expected_order):
            return not math.isnan(rate)
        return bool(rate >= self.expected_order - tol)

    def within(self, target, tol):
        return abs(self.final_rate - target) <= tol

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["N", "error", "rate", "expected_order"])
        for N, err, rate in zip(self.N, self.errors, self.rates):
            writer.writerow([N, f"{err:.6e}", "" if math.isnan(rate) else f"{rate:.4f}",
                             f"{self.expected_order:.4f}"])
        return buf.getvalue()


def convergence_rates(errors):
    """``log2`` ratios of consecutive errors; the first entry is NaN.

    Rates between two zero errors are undefined (NaN); from a positive error
    to zero they are ``inf``.
    """
    errors = [float(e) for e in errors]
    out = [math.nan]
    for prev, cur in zip(errors[:-1], errors[1:]):
        if prev == 0 and cur == 0:
            out.append(math.nan)
        elif cur == 0:
            out.append(math.inf)
        else:
            out.append(math.log2(prev / cur))
    return out


def rates(Ns, errors, expected_order=math.nan, norm_kind="weighted", label=""):
    """Build a :class:`ConvergenceTable`; ``Ns`` must double from row to row."""
    Ns = [int(n) for n in Ns]
    if len(Ns) != len(errors):
        raise ValueError("N list and error list differ in length")
    for a, b in zip(Ns[:-1], Ns[1:]):
        if b != 2 * a:
            raise ValueError(f"N must double between rows, got {a} -> {b}")
    return ConvergenceTable(Ns, [float(e) for e in errors], convergence_rates(errors),
                            norm_kind, float(expected_order), label)


def expected_order(example, alpha, sigma=None, norm="weighted"):
    """Predicted weighted-norm order (the ``epsilon``-free value).

    ``ex1``: ``3 alpha + 1``. ``ex2``: ``min(3 alpha + 1, 1.5 + alpha)``.
    ``ex3``/``ex4``: ``min(3 alpha + 3, 2 sigma + alpha + 1)`` when the source
    vanishes at the origin (``sigma > 0``), otherwise ``3 alpha + 1``.
    The standard-L2 order has no closed prediction; NaN is returned.
    """
    if norm != "weighted":
        return math.nan
    if example == "ex1":
        return 3 * alpha + 1
    if example == "ex2":
        return min(3 * alpha + 1, 1.5 + alpha)
    if example in ("ex3", "ex4"):
        if sigma is None:
            raise ValueError(f"{example} needs sigma")
        if sigma > 0:
            return min(3 * alpha + 3, 2 * sigma + alpha + 1)
        return 3 * alpha + 1
    return math.nan


def expected_order_formula(example, sigma=None):
    if example == "ex1":
        return "3a+1-eps"
    if example == "ex2":
        return "min(3a+1,1.5+a)-eps"
    if example in ("ex3", "ex4"):
        return "min(3a+3,2s+a+1)-eps" if sigma else "3a+1-eps"
    return "n/a"


def sobolev_norm(values, spec, s):
    """Equivalent norm ``sqrt(sum c_n^2 h_n^{gamma,beta} (1 + n^2)^s)``.

    ``values`` may be a :class:`SpectralCoeffs` or a plain coefficient array
    against ``spec``.
    """
    values = np.asarray(getattr(values, "values", values), dtype=float)
    n = np.arange(values.size, dtype=float)
    h = weighted_norm_sq(n, spec)
    # (1 + n^2)^s in log space avoids overflow for large s
    terms = values * values * np.exp(np.log(h) + s * np.log1p(n * n))
    return math.sqrt(float(np.sum(terms)))


def regularity_slope(values, spec, start=None, stop=None):
    """Fitted decay of the coefficient energy ``e_n = c_n^2 h_n``.

    Fits ``e_n ~ n^{-(2 s* + 1)}`` over ``[start, stop)`` (default: the middle
    half of the nonzero range) and returns ``s*``, the index at which
    ``sobolev_norm`` starts to grow with ``N``. Coefficients of oscillating
    sign are smoothed by summing over dyadic blocks before the fit.
    """
    values = np.asarray(getattr(values, "values", values), dtype=float)
    n = np.arange(values.size)
    energy = values * values * weighted_norm_sq(n, spec)
    last = int(np.nonzero(energy)[0].max()) if np.any(energy) else 0
    start = max(1, last // 8) if start is None else start
    stop = last + 1 if stop is None else stop
    # dyadic block sums B_j = sum_{2^j <= n < 2^{j+1}} e_n ~ 2^{-2 s* j}
    edges = []
    k = 1
    while k < stop:
        if k >= start:
            edges.append(k)
        k *= 2
    if len(edges) < 3:
        raise ValueError("coefficient range too short for a slope fit")
    centers, blocks = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        block = energy[a:b].sum()
        if block > 0:
            centers.append(math.log2(a))
            blocks.append(math.log2(block))
    slope = np.polyfit(centers, blocks, 1)[0]
    return -slope / 2
