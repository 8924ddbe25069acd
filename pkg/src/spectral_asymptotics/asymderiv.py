"""Derivatives of ``g(t) = f(1/t)`` and derivative-level checks on heat traces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, UnsupportedOrderError, UsageError
from .heattrace import trace_power
from .rvfun import MAX_DERIVATIVE_ORDER, RVSpec, rising_factorial, rv_derivative, rv_eval
from .spectrum import build_spectrum

MAX_POCHHAMMER_ORDER = 20
TINY = 1e-300

# central stencils (offsets, weights): derivative = sum w f(t + o h) / h^n
_STENCILS = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}
# default h / t per order: truncation ~ (h/t)^2 against rounding ~ eps (t/h)^n
_STEP_SCALE = {1: 1e-4, 2: 3e-4, 3: 5e-4, 4: 1.5e-3}


@dataclass(frozen=True)
class DerivativeCheck:
    n: int
    t: float
    analytic: float
    numeric: float
    rel_err: float


def _order(n, lo, hi):
    if int(n) != n:
        raise UsageError(f"order must be an integer, got {n!r}")
    n = int(n)
    if n < lo:
        raise UsageError(f"order must be >= {lo}, got {n}")
    if n > hi:
        raise UnsupportedOrderError(f"order {n} exceeds the supported maximum {hi}")
    return n


def g_derivative(spec: RVSpec, t: float, n: int) -> float:
    """``d^n/dt^n f(1/t)`` via Faa di Bruno for the inversion ``t -> 1/t``.

    ``g^(n)(t) = sum_m (n!/m!) binom(n-1, m-1) (-1)^n t^-(n+m) f^(m)(1/t)``.
    """
    n = _order(n, 0, MAX_DERIVATIVE_ORDER)
    t = float(t)
    if not t > 0:
        raise DomainError("g_derivative needs t > 0")
    x = 1.0 / t
    if n == 0:
        return float(rv_eval(spec, x))
    total = 0.0
    for m in range(1, n + 1):
        coef = math.factorial(n) // math.factorial(m) * math.comb(n - 1, m - 1)
        total += coef * t ** (-(n + m)) * rv_derivative(spec, x, m)
    return (-1) ** n * total


def ratio_limit_series(spec: RVSpec, n: int, t_grid) -> np.ndarray:
    """``(-1)^n t^n g^(n)(t) / g(t)`` on ``t_grid``; the limit is ``Gamma(p+n)/Gamma(p)``."""
    if not spec.p > 0:
        raise DomainError("ratio_limit_series needs a law with positive index p")
    n = _order(n, 0, MAX_DERIVATIVE_ORDER)
    g = np.asarray(t_grid, dtype=np.float64)
    if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) >= 0):
        raise UsageError("t_grid must be strictly decreasing")
    return np.array([(-1) ** n * t**n * g_derivative(spec, t, n) / g_derivative(spec, t, 0) for t in g])


def pochhammer_identity(n: int, p):
    """``(lhs, rhs)`` of ``sum_m (n!/m!) binom(n-1,m-1) (p)_m^falling = (p)_n^rising``.

    A ``Fraction`` (or int) ``p`` is evaluated exactly; a float ``p`` in floating
    point with ``math.fsum``.
    """
    n = _order(n, 1, MAX_POCHHAMMER_ORDER)
    exact = isinstance(p, (Fraction, int)) and not isinstance(p, bool)
    if exact:
        p = Fraction(p)
        falling, lhs = Fraction(1), Fraction(0)
        for m in range(1, n + 1):
            falling *= p - (m - 1)
            lhs += math.factorial(n) // math.factorial(m) * math.comb(n - 1, m - 1) * falling
        rhs = Fraction(1)
        for j in range(n):
            rhs *= p + j
        return lhs, rhs
    p = float(p)
    terms, falling = [], 1.0
    for m in range(1, n + 1):
        falling *= p - (m - 1)
        terms.append(float(math.factorial(n) // math.factorial(m) * math.comb(n - 1, m - 1)) * falling)
    return math.fsum(terms), rising_factorial(p, n)


def fd_derivative_check(s, t: float, n: int, h: float | None = None) -> DerivativeCheck:
    """``(-1)^n Theta_n(t)`` against a central difference of ``Theta_0`` with step ``h``."""
    s = build_spectrum(s)
    n = _order(n, 1, 4)
    t = float(t)
    if not s.is_real or s.min_real_part < 0:
        raise DomainError("fd_derivative_check needs a real spectrum with nonnegative eigenvalues")
    if h is None:
        h = _STEP_SCALE[n] * t
    h = float(h)
    if not (0 < h < t / 10):
        raise UsageError(f"step h = {h:g} must satisfy 0 < h < t/10 = {t / 10:g}")
    analytic = (-1) ** n * trace_power(s, t, n).value.real
    offsets, weights = _STENCILS[n]
    numeric = math.fsum(w * trace_power(s, t + o * h, 0).value.real for o, w in zip(offsets, weights)) / h**n
    rel = abs(analytic - numeric) / max(abs(analytic), TINY)
    return DerivativeCheck(n, t, analytic, numeric, rel)


@dataclass(frozen=True)
class CauchyReport:
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    holds: np.ndarray
    all_hold: bool
    c_n: float
    a: float


def cauchy_bound_check(s, t_grid, n: int, theta: float) -> CauchyReport:
    """``||A^n e^{-tA}||_1 <= n! sin(theta)^-n t^-n Theta_0((1 - sin theta) t)`` pointwise."""
    s = build_spectrum(s)
    n = _order(n, 0, MAX_DERIVATIVE_ORDER)
    if not 0 < theta < math.pi / 2:
        raise DomainError("theta must lie in (0, pi/2)")
    if not s.is_real or s.min_real_part < 0:
        raise DomainError("cauchy_bound_check needs a real spectrum with nonnegative eigenvalues")
    g = np.asarray(t_grid, dtype=np.float64)
    if g.ndim != 1 or g.size == 0 or np.any(g <= 0):
        raise UsageError("t_grid must be a non-empty list of positive values")
    sin = math.sin(theta)
    c_n = math.factorial(n) * sin ** (-n)
    a = 1.0 - sin
    lhs = np.array([trace_power(s, t, n).norm_value for t in g])
    rhs = np.array([c_n * t ** (-n) * trace_power(s, a * t, 0).value.real for t in g])
    holds = lhs <= rhs
    return CauchyReport(g, lhs, rhs, holds, bool(holds.all()), c_n, a)


def derivative_asymptotics_check(s, spec: RVSpec, n: int, t_grid) -> np.ndarray:
    """``Theta_n(t) / (Gamma(p+n)/Gamma(p) t^-n f(1/t))``, expected to tend to 1.

    ``spec`` is the law of ``Theta_0`` itself, amplitude included.
    """
    s = build_spectrum(s)
    n = _order(n, 0, MAX_DERIVATIVE_ORDER)
    if n >= 1 and not spec.p > 0:
        raise DomainError("derivative asymptotics need a law with positive index p")
    g = np.asarray(t_grid, dtype=np.float64)
    if g.ndim != 1 or g.size == 0 or np.any(g <= 0):
        raise UsageError("t_grid must be a non-empty list of positive values")
    factor = rising_factorial(spec.p, n)
    return np.array(
        [trace_power(s, t, n).value.real / (factor * t ** (-n) * float(rv_eval(spec, 1.0 / t))) for t in g]
    )
