"""Regularly varying laws ``C x^p L(x)^r`` and the special functions they need."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DomainError, UnsupportedOrderError, UsageError

MAX_DERIVATIVE_ORDER = 8


class LogMode(str, Enum):
    SHIFTED = "shifted"  # Ln_{k+1}(x) = ln(1 + Ln_k(x)), defined on [0, inf)
    RAW = "raw"  # k-fold composition of ln, defined above a tower threshold


def _as_mode(mode) -> LogMode:
    if isinstance(mode, LogMode):
        return mode
    try:
        return LogMode(str(mode).lower())
    except ValueError as exc:
        raise DomainError(f"unknown log mode {mode!r}") from exc


def ln_iter(k: int, x, mode: LogMode | str = LogMode.SHIFTED):
    """Iterated logarithm ``Ln_k(x)`` (shifted) or ``ln∘...∘ln(x)`` (raw).

    Works on scalars and numpy arrays.  In raw mode every argument handed to
    ``ln`` must be positive; the error message names the first failing depth.
    """
    mode = _as_mode(mode)
    if int(k) != k or k < 0:
        raise DomainError(f"log depth k must be a non-negative integer, got {k!r}")
    scalar = np.isscalar(x)
    v = np.asarray(x, dtype=np.float64)
    if mode is LogMode.SHIFTED:
        if np.any(v < 0):
            raise DomainError("shifted iterated log needs x >= 0")
        for _ in range(int(k)):
            v = np.log1p(v)
    else:
        for depth in range(1, int(k) + 1):
            if np.any(v <= 0):
                raise DomainError(f"raw iterated log undefined: argument <= 0 at depth {depth}")
            v = np.log(v)
    return float(v) if scalar else v


@dataclass(frozen=True)
class RVSpec:
    """Parametric regularly varying law ``C * x**p * (log term)**r``.

    The log term is ``Ln_k`` in shifted mode and the raw ``k``-fold logarithm in
    raw mode.  ``r != 0`` requires ``k >= 1``; ``p == 0`` requires ``r > 0``.
    """

    C: float = 1.0
    p: float = 0.0
    r: float = 0.0
    k: int = 0
    log_mode: LogMode = LogMode.SHIFTED

    def __post_init__(self):
        object.__setattr__(self, "log_mode", _as_mode(self.log_mode))
        if not (self.C > 0 and math.isfinite(self.C)):
            raise DomainError(f"amplitude C must be positive and finite, got {self.C!r}")
        if int(self.k) != self.k or self.k < 0:
            raise DomainError(f"log depth k must be a non-negative integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if self.p < 0:
            raise DomainError(f"index p must be >= 0, got {self.p!r}")
        if self.p == 0 and self.r <= 0:
            raise DomainError("p = 0 requires r > 0 (the case p = 0, r <= 0 is excluded)")
        if self.r != 0 and self.k == 0:
            raise DomainError("a log exponent r != 0 needs log depth k >= 1")

    @cached_property
    def domain_threshold(self) -> float:
        """Infimum of the evaluation domain (open).  ``inf`` means empty in floats."""
        if self.log_mode is LogMode.SHIFTED or self.k == 0:
            return 0.0
        tower = 1.0
        for _ in range(self.k - 1):
            if tower > 709.0:
                return math.inf
            tower = math.exp(tower)
        return tower

    def with_amplitude(self, C: float) -> "RVSpec":
        return RVSpec(C=C, p=self.p, r=self.r, k=self.k, log_mode=self.log_mode)


def rv_eval(spec: RVSpec, x):
    """Evaluate ``spec`` at ``x`` (scalar or array) on its open domain."""
    scalar = np.isscalar(x)
    v = np.asarray(x, dtype=np.float64)
    thr = spec.domain_threshold
    if math.isinf(thr):
        raise DomainError(f"raw log tower of depth {spec.k} has an empty floating-point domain")
    if np.any(v <= thr):
        raise DomainError(f"x must exceed the domain threshold {thr:g} of this law")
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = spec.C * np.power(v, spec.p)
        if spec.r != 0:
            out = out * np.power(ln_iter(spec.k, v, spec.log_mode), spec.r)
    if not np.all(np.isfinite(out)):
        raise OverflowError("regularly varying law is not finite at the requested point")
    return float(out) if scalar else out


def rv_eval_at_inverse(spec: RVSpec, t):
    """``rv_eval(spec, 1/t)``, the form in which laws enter heat-trace asymptotics."""
    return rv_eval(spec, 1.0 / np.asarray(t, dtype=np.float64) if not np.isscalar(t) else 1.0 / t)


# ------------------------------------------------------------------ Gamma

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def gamma(x: float) -> float:
    """Gamma function on ``x > 0`` (Lanczos, g = 7, nine coefficients)."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"gamma is only provided for x > 0, got {x!r}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (z + i)
    tt = z + _LANCZOS_G + 0.5
    try:
        half = tt ** ((z + 0.5) / 2.0)
        value = _SQRT_2PI * half * (half * math.exp(-tt)) * acc
    except OverflowError:
        raise OverflowError(f"gamma({x}) overflows") from None
    if not math.isfinite(value):
        raise OverflowError(f"gamma({x}) overflows")
    return value


def rising_factorial(p: float, n: int) -> float:
    """``p (p+1) ... (p+n-1)``, i.e. ``Gamma(p+n)/Gamma(p)``."""
    out = 1.0
    for j in range(n):
        out *= p + j
    return out


def falling_factorial(p: float, n: int) -> float:
    out = 1.0
    for j in range(n):
        out *= p - j
    return out


# ------------------------------------------------------------- Lambert W0


def lambert_w0(y: float) -> float:
    """Principal branch of Lambert W on ``[0, inf)``: the ``x >= 0`` with ``x e^x = y``."""
    y = float(y)
    if y < 0 or math.isnan(y):
        raise DomainError(f"lambert_w0 is restricted to y >= 0, got {y!r}")
    if y == 0.0:
        return 0.0
    if math.isinf(y):
        return math.inf
    lo, hi = 0.0, max(1.0, math.log1p(y))
    log_y = math.log(y)

    def excess(w):
        # sign of w e^w - y, evaluated in log space
        return math.log(w) + w - log_y if w > 0 else -math.inf

    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
    w = 0.5 * (lo + hi)
    for _ in range(2):
        w = w - (w - math.exp(log_y - w)) / (1.0 + w)
    return w


# ------------------------------------------------------- Taylor jets
# A jet holds c_j = x^j f^(j)(x) / j!, i.e. the Taylor coefficients of
# u -> f(x (1 + u)) at u = 0.  Arithmetic on jets is the chain rule.


def _jet_mul(a, b):
    n = len(a)
    out = np.zeros(n)
    for i in range(n):
        out[i] = np.dot(a[: i + 1], b[i::-1])
    return out


def _jet_log(a):
    if a[0] <= 0:
        raise DomainError("logarithm of a non-positive value inside a derivative jet")
    n = len(a)
    out = np.zeros(n)
    out[0] = math.log(a[0])
    for k in range(1, n):
        acc = a[k]
        for j in range(1, k):
            acc -= j * out[j] * a[k - j] / k
        out[k] = acc / a[0]
    return out


def _jet_pow(a, r):
    if a[0] <= 0:
        raise DomainError("power of a non-positive value inside a derivative jet")
    n = len(a)
    out = np.zeros(n)
    out[0] = a[0] ** r
    for k in range(1, n):
        acc = 0.0
        for j in range(1, k + 1):
            acc += ((r + 1.0) * j - k) * a[j] * out[k - j]
        out[k] = acc / (k * a[0])
    return out


def derivative_jet(spec: RVSpec, x: float, n: int) -> np.ndarray:
    """Coefficients ``x^j f^(j)(x) / j!`` for ``j = 0..n``."""
    if int(n) != n or n < 0:
        raise UsageError(f"derivative order must be a non-negative integer, got {n!r}")
    if n > MAX_DERIVATIVE_ORDER:
        raise UnsupportedOrderError(f"derivative order {n} exceeds {MAX_DERIVATIVE_ORDER}")
    n = int(n)
    x = float(x)
    if not x > spec.domain_threshold:
        raise DomainError(f"x = {x!r} is outside the domain of this law")
    unit = np.zeros(n + 1)
    unit[0] = 1.0
    if n >= 1:
        unit[1] = 1.0
    jet = spec.C * x**spec.p * _jet_pow(unit, spec.p)
    if spec.r != 0:
        log_term = x * unit
        for _ in range(spec.k):
            if spec.log_mode is LogMode.SHIFTED:
                shifted = log_term.copy()
                shifted[0] += 1.0
                log_term = _jet_log(shifted)
            else:
                log_term = _jet_log(log_term)
        jet = _jet_mul(jet, _jet_pow(log_term, spec.r))
    return jet


def rv_derivative(spec: RVSpec, x: float, n: int) -> float:
    """``f^(n)(x)`` for the law ``spec``."""
    jet = derivative_jet(spec, x, n)
    return math.factorial(n) * jet[n] / x**n


def smooth_var_ratio(spec: RVSpec, n: int, x: float) -> float:
    """``x^n f^(n)(x) / f(x)``; tends to ``p (p-1) ... (p-n+1)`` at infinity."""
    if int(n) != n or n < 1:
        raise UsageError(f"order n must be a positive integer, got {n!r}")
    jet = derivative_jet(spec, x, n)
    return math.factorial(int(n)) * jet[int(n)] / jet[0]


# ---------------------------------------------------------- Potter bounds


@dataclass(frozen=True)
class PotterReport:
    holds: bool
    worst_pair: tuple[float, float]
    worst_margin: float  # max over the grid of lhs / rhs; holds <=> <= 1
    threshold_used: float


def potter_check(
    spec: RVSpec,
    a: float,
    eps: float,
    grid: Sequence[tuple[float, float]],
    threshold: float | None = None,
) -> PotterReport:
    """Sample ``f(y)/f(x) <= a max((y/x)^(p+eps), (y/x)^(p-eps))`` over ``grid``."""
    if not a > 1:
        raise DomainError(f"Potter constant a must exceed 1, got {a!r}")
    if not eps > 0:
        raise DomainError(f"Potter exponent slack eps must be positive, got {eps!r}")
    pairs = np.asarray(list(grid), dtype=np.float64)
    if pairs.size == 0:
        raise UsageError("potter_check needs a non-empty grid of (x, y) pairs")
    pairs = pairs.reshape(-1, 2)
    thr = spec.domain_threshold if threshold is None else float(threshold)
    if np.any(pairs <= thr):
        raise UsageError(f"every grid point must exceed the threshold {thr:g}")
    xs, ys = pairs[:, 0], pairs[:, 1]
    ratio = ys / xs
    lhs = rv_eval(spec, ys) / rv_eval(spec, xs)
    rhs = a * np.maximum(ratio ** (spec.p + eps), ratio ** (spec.p - eps))
    margin = lhs / rhs
    worst = int(np.argmax(margin))
    return PotterReport(
        holds=bool(np.all(margin <= 1.0)),
        worst_pair=(float(xs[worst]), float(ys[worst])),
        worst_margin=float(margin[worst]),
        threshold_used=thr,
    )


# ----------------------------------------------- ln(1+x) <= c_eps x^eps


def _h_of_log(s: float) -> float:
    # h(x) = (1+x) ln(1+x) / x written in s = ln(1+x)
    if s == 0.0:
        return 1.0
    return s / -math.expm1(-s)


def ln_bound_constant(eps: float) -> tuple[float, float]:
    """Smallest ``c`` with ``ln(1+x) <= c x^eps`` on ``[0, inf)``, and its touching point.

    Returns ``(c_eps, x_eps)``.  ``x_eps`` solves ``(1+x) ln(1+x) / x = 1/eps``
    and may be ``inf`` in floating point for very small ``eps``; ``c_eps`` is
    computed in log space and stays finite.
    """
    eps = float(eps)
    if not 0 < eps <= 1:
        raise DomainError(f"eps must lie in (0, 1], got {eps!r}")
    if eps == 1.0:
        return 1.0, 0.0
    target = 1.0 / eps
    # s <= h(s) <= s + 1 brackets the root in s = ln(1 + x)
    lo, hi = max(target - 1.0, 0.0), target
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _h_of_log(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    s = 0.5 * (lo + hi)
    log_x = s + math.log(-math.expm1(-s))  # ln(e^s - 1)
    c = math.exp(math.log(s) - eps * log_x)
    x = math.expm1(s) if s < 709.0 else math.inf
    return c, x


def ln_bound_peak() -> tuple[float, float]:
    """``(eps*, F_max)``: the exponent whose touching point is ``x = 1`` and the peak of ``1/c_eps``.

    ``d/d eps F_eps(x_eps) = F_eps(x_eps) ln x_eps`` vanishes only at ``x_eps = 1``.
    """
    eps_star = 1.0 / _h_of_log(math.log(2.0))
    c, _ = ln_bound_constant(eps_star)
    return eps_star, 1.0 / c
