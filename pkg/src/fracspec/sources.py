"""Right-hand sides for the fractional initial value problem.

A :class:`Source` is ``f(t) = t^p g(t)`` with ``g`` smooth on each piece
between declared breakpoints. Keeping the power ``p`` separate lets the load
quadrature absorb it into a Gauss-Jacobi weight instead of sampling a
singular derivative.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import ConfigError


@dataclass(frozen=True, eq=False)
class Source:
    """``f(t) = t**origin_power * smooth(t)``.

    Parameters
    ----------
    smooth : callable
        Vectorized in ``t``.
    origin_power : float
        Exponent ``p > -1`` of the factor ``t^p``.
    breakpoints : tuple of float
        Interior points where ``smooth`` is not differentiable.
    """

    smooth: Callable
    origin_power: float = 0.0
    breakpoints: tuple = ()
    name: str = "custom"

    def __post_init__(self):
        if not self.origin_power > -1:
            raise ConfigError(f"origin_power must exceed -1, got {self.origin_power}")
        object.__setattr__(self, "breakpoints", tuple(sorted(float(b) for b in self.breakpoints)))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        value = np.asarray(self.smooth(t), dtype=float) * np.ones_like(t)
        if self.origin_power != 0:
            value = value * t ** self.origin_power
        return value

    def pieces(self, T):
        """Subintervals of ``[0, T]`` cut at the breakpoints inside ``(0, T)``."""
        cuts = [b for b in self.breakpoints if 0.0 < b < T]
        edges = [0.0] + cuts + [float(T)]
        return list(zip(edges[:-1], edges[1:]))


def zero_source():
    return Source(lambda t: np.zeros_like(t), name="zero")


def constant_source(c=1.0):
    return Source(lambda t: np.full_like(t, c), name=f"const:{c}")


def sin_shift(T=1.0):
    """``sin(t - T/2)``, the smooth benchmark source."""
    return Source(lambda t: np.sin(t - 0.5 * T), name="sin-shift")


def abs_sin_shift(T=1.0):
    """``|sin(t - T/2)|``, kinked at ``T/2``."""
    return Source(lambda t: np.abs(np.sin(t - 0.5 * T)), breakpoints=(0.5 * T,),
                  name="abs-sin-shift")


def power_exp(sigma):
    """``t^sigma e^t``."""
    return Source(np.exp, origin_power=float(sigma), name=f"power-exp:sigma={sigma:g}")


@dataclass(frozen=True, eq=False)
class TabulatedSource:
    """Piecewise-cubic interpolant of samples ``(t_j, f_j)``."""

    t: np.ndarray
    f: np.ndarray
    spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "spline", CubicSpline(self.t, self.f))


def tabulated(path):
    """Read a two-column ``t, f(t)`` text or CSV file into a :class:`Source`."""
    try:
        data = np.loadtxt(path, delimiter="," if str(path).endswith(".csv") else None,
                          comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read tabulated source {path}: {exc}") from exc
    if data.shape[1] != 2 or data.shape[0] < 4:
        raise ConfigError(f"{path}: expected at least 4 rows of two columns, got {data.shape}")
    t, f = data[:, 0], data[:, 1]
    if np.any(np.diff(t) <= 0):
        raise ConfigError(f"{path}: t values must be strictly increasing")
    table = TabulatedSource(t, f)
    return Source(table.spline, name=f"table:{path}")


_BUILTINS = {"sin-shift", "abs-sin-shift", "power-exp", "zero", "const"}


def parse_source(spec, T=1.0):
    """Build a source from a string such as ``power-exp:sigma=0.3``.

    Accepted forms: ``sin-shift``, ``abs-sin-shift``, ``power-exp:sigma=S``,
    ``zero``, ``const:C`` (or ``const:c=C``) and ``file:PATH`` for a
    tabulated source.
    """
    name, _, arg = spec.partition(":")
    if name == "file":
        return tabulated(arg)
    if name not in _BUILTINS:
        raise ConfigError(f"unknown source {spec!r}; expected one of "
                          f"{sorted(_BUILTINS | {'file'})}")
    params = {}
    if arg:
        for item in arg.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                key, value = {"power-exp": "sigma", "const": "c"}.get(name, "value"), key
            try:
                params[key.strip()] = float(value)
            except ValueError as exc:
                raise ConfigError(f"bad parameter {item!r} in source {spec!r}") from exc
    if name == "sin-shift":
        return sin_shift(T)
    if name == "abs-sin-shift":
        return abs_sin_shift(T)
    if name == "zero":
        return zero_source()
    if name == "const":
        return constant_source(params.get("c", 1.0))
    if "sigma" not in params:
        raise ConfigError("power-exp needs sigma, e.g. power-exp:sigma=0.3")
    return power_exp(params["sigma"])
