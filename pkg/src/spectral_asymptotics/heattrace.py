"""Truncated heat traces ``sum w lam^n exp(-t lam)`` with certified tails.

Truncation: slots are summed in batches (chunk-aligned, doubling) until a
Stieltjes bound on the discarded tail, built from the model's counting
majorant, falls below ``rel_tol`` times the running trace norm.  Power-law
models whose cutoff would exceed the enumeration budget switch to an
Euler–Maclaurin tail with an explicit remainder bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from . import _kernels
from .errors import BudgetError, DivergenceError, DomainError, UsageError
from .quadrature import integrate
from .rvfun import RVSpec, gamma, rv_eval
from .spectrum import DEFAULT_MAX_TERMS, PowerLaw, Spectrum, build_spectrum

DEFAULT_REL_TOL = 1e-12
FIRST_BATCH = _kernels.CHUNK
MAX_BATCH = 2**22
EM_DIRECT_SLOTS = 2**16
EM_SWITCH_SLOTS = 2**21
EXP_UNDERFLOW = 745.0


@dataclass(frozen=True)
class TraceValue:
    value: complex
    norm_value: float
    truncation_index: int
    tail_bound: float
    t: float
    n: int
    certified: bool = True
    method: str = "direct"


@dataclass(frozen=True)
class PowerSum:
    value: float
    tail_bound: float
    truncation_index: int
    certified: bool = True


# ------------------------------------------------------------------ tails


def _tail_bound(env, t: float, X: float) -> float:
    """Bound on ``sum_{re lam > X} w |lam|^n e^{-t re lam}`` from a power envelope."""
    if env is None or X <= 0:
        return math.inf
    A, alpha, B, m = env
    z = t * X
    b = alpha + m
    if z <= max(m, 0.0) or z <= max(b, 0.0):
        return math.inf
    lx = math.log(X)
    total = 0.0
    e1 = b * lx - z
    if e1 > 700:
        return math.inf
    total += math.exp(e1) / (1.0 - max(b, 0.0) / z)
    if m < 0:
        b2 = b - 1.0
        if z <= max(b2, 0.0):
            return math.inf
        e2 = b2 * lx - z
        if e2 > 700:
            return math.inf
        total += -m * math.exp(e2) / (t * (1.0 - max(b2, 0.0) / z))
    return B * A * total


class _Kahan:
    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float):
        y = x - self.c
        tmp = self.s + y
        self.c = (tmp - self.s) - y
        self.s = tmp


def _check_t(t):
    t = float(t)
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t must be positive and finite, got {t!r}")
    return t


def _check_invertible(s: Spectrum, what: str):
    if not s.is_positive_real_part or s.has_zero_eigenvalue:
        raise DomainError(f"{what} needs an invertible spectrum with positive real parts")


# ----------------------------------------------------- Euler–Maclaurin path


def upper_gamma(a: float, z: float) -> float:
    """Upper incomplete gamma ``Gamma(a, z)`` for real ``a`` and ``z > 0``."""
    if a > 0:
        return float(special.gammaincc(a, z) * special.gamma(a))
    m = int(math.floor(-a)) + 1  # a + m > 0
    top = a + m
    if abs(top - 1.0) < 1e-15 and abs(a - round(a)) < 1e-15:
        # non-positive integer a: recurse down from Gamma(0, z) = E1(z)
        value = float(special.exp1(z))
        cur = 0.0
        while cur > a + 0.5:
            cur -= 1.0
            value = (value - z**cur * math.exp(-z)) / cur
        return value
    value = float(special.gammaincc(top, z) * special.gamma(top))
    cur = top
    while cur > a + 0.5:
        cur -= 1.0
        value = (value - z**cur * math.exp(-z)) / cur
    return value


def _power_exp_derivative(terms, decay, expo):
    # d/dx of sum c x^beta e^{-decay x^expo}
    out = []
    for c, beta in terms:
        if beta != 0.0:
            out.append((c * beta, beta - 1.0))
        out.append((-c * decay * expo, beta + expo - 1.0))
    return out


def _em_power_law(s: PowerLaw, t: float, n: int) -> TraceValue:
    head = _direct(s, t, n, rel_tol=0.0, max_terms=EM_DIRECT_SLOTS, cutoff=None, fixed=EM_DIRECT_SLOTS)
    a = float(EM_DIRECT_SLOTS + 1)
    p, C = s.p, s.C
    expo = 1.0 / p
    decay = t * C ** (-expo)
    scale = C ** (-n / p)
    # f(x) = scale * x^(n/p) * exp(-decay x^(1/p)) is the k-th term at x = k
    terms = [(1.0, n / p)]
    derivs = [terms]
    for _ in range(4):
        derivs.append(_power_exp_derivative(derivs[-1], decay, expo))
    ea = math.exp(-decay * a**expo)

    def at(ts):
        return scale * ea * sum(c * a**beta for c, beta in ts)

    lam_a = (a / C) ** expo
    integral = C * p * t ** (-p - n) * upper_gamma(p + n, t * lam_a)
    tail = integral + at(derivs[0]) / 2.0 - at(derivs[1]) / 12.0 + at(derivs[3]) / 720.0
    z_a = decay * a**expo
    remainder = 0.0
    for c, beta in derivs[4]:
        shape = (beta + 1.0) / expo
        remainder += abs(c) * p * decay ** (-shape) * upper_gamma(shape, z_a)
    remainder *= scale / 720.0
    value = head.value.real + tail
    return TraceValue(
        value=complex(value, 0.0),
        norm_value=value,
        truncation_index=EM_DIRECT_SLOTS,
        tail_bound=remainder,
        t=t,
        n=n,
        certified=True,
        method="euler_maclaurin",
    )


def _em_preferred(s: Spectrum, t: float, n: int) -> bool:
    if not isinstance(s, PowerLaw):
        return False
    x_star = (45.0 + 3.0 * (s.p + abs(n))) / t
    return s.C * x_star**s.p > EM_SWITCH_SLOTS


# ------------------------------------------------------------ direct path


def _direct(s, t, n, rel_tol, max_terms, cutoff, fixed=None) -> TraceValue:
    shift = min(s.min_real_part, 0.0)
    avail = s.available_slots
    if fixed is not None:
        target = fixed
    elif cutoff is not None:
        target = s.slot_count_upto(cutoff)
        if avail is not None and target > avail:
            raise BudgetError(f"cutoff {cutoff:g} exceeds the enumerable part of the spectrum")
    else:
        target = None
    acc_r, acc_i, acc_n = _Kahan(), _Kahan(), _Kahan()
    K = 0
    batch = FIRST_BATCH
    tail = math.inf
    last_re = None
    while True:
        stop = K + batch
        if target is not None:
            stop = min(stop, target)
        if avail is not None:
            stop = min(stop, avail)
        stop = min(stop, max_terms)
        if stop > K:
            re, im, w = s.slots(K, stop)
            chunks = _kernels.heat_chunk_sums(re, im, w, t, n, shift)
            for row in chunks:
                acc_r.add(float(row[0]))
                acc_i.add(float(row[1]))
                acc_n.add(float(row[2]))
            last_re = float(re[-1])
            K = stop
        if s.is_finite and K == avail:
            tail = 0.0
            break
        if target is not None and K >= target:
            X = cutoff if cutoff is not None else last_re
            tail = _tail_bound(s.tail_envelope(X, n), t, X) if X is not None else math.inf
            break
        if last_re == math.inf:
            # every later slot overflowed as well and contributes exactly 0
            tail = 0.0
            break
        if last_re is not None:
            tail = _tail_bound(s.tail_envelope(last_re, n), t, last_re)
            if tail <= rel_tol * acc_n.s:
                break
        if stop <= K and (K >= max_terms or (avail is not None and K >= avail)):
            raise BudgetError(
                f"truncation budget exhausted after {K} slots without a tail certificate "
                f"(best bound {tail:.3g})",
                best_bound=tail,
            )
        batch = min(batch * 2, MAX_BATCH)
    factor = math.exp(-t * shift)
    value = complex(acc_r.s, acc_i.s) * factor
    norm = acc_n.s * factor
    return TraceValue(
        value=value,
        norm_value=norm,
        truncation_index=K,
        tail_bound=tail * factor,
        t=t,
        n=n,
        certified=math.isfinite(tail),
    )


def trace_power(
    s,
    t: float,
    n: int = 0,
    rel_tol: float = DEFAULT_REL_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    cutoff: float | None = None,
) -> TraceValue:
    """``sum w lam^n e^{-t lam}`` and its trace norm ``sum w |lam|^n e^{-t re lam}``.

    ``cutoff`` forces summation over exactly the eigenvalues with real part
    ``<= cutoff`` and reports the tail bound beyond it.
    """
    s = build_spectrum(s)
    t = _check_t(t)
    if int(n) != n:
        raise DomainError(f"power n must be an integer, got {n!r}")
    n = int(n)
    if n < 0:
        _check_invertible(s, "a negative power")
    if cutoff is None and _em_preferred(s, t, n):
        return _em_power_law(s, t, n)
    return _direct(s, t, n, rel_tol, max_terms, cutoff)


def trace_norm_power(s, t: float, n: int = 0, **kwargs) -> float:
    """``sum w |lam|^n e^{-t re lam}``, the trace norm of ``A^n e^{-tA}`` for normal ``A``."""
    return trace_power(s, t, n, **kwargs).norm_value


def heat_trace(s, t: float, **kwargs) -> float:
    """Real part of ``Tr e^{-tA}``; the usual entry point for real spectra."""
    return trace_power(s, t, 0, **kwargs).value.real


# -------------------------------------------------------------- power sums


def _power_law_tail_integral(s: PowerLaw, q: float, shift: float, a: float) -> float:
    # int_a^inf (shift + (x/C)^(1/p))^(-q) dx
    p, C = s.p, s.C
    u = (a / C) ** (1.0 / p)
    if shift == 0.0:
        return C * p * u ** (p - q) / (q - p)
    w = shift / (shift + u)
    return C * p * shift ** (p - q) * float(special.beta(q - p, p) * special.betainc(q - p, p, w))


def power_sum(
    s,
    q: float,
    shift: float = 0.0,
    rel_tol: float = 1e-10,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> PowerSum:
    """``sum w (shift + |lam|)^(-q)`` with a certified tail.

    Power laws bracket the tail between integral comparisons; other infinite
    models add half the Stieltjes tail bound and report the other half.
    """
    s = build_spectrum(s)
    q, shift = float(q), float(shift)
    if shift < 0:
        raise DomainError("power_sum shift must be >= 0")
    if s.has_zero_eigenvalue and shift == 0:
        raise DomainError("power_sum with shift 0 needs a spectrum without zero eigenvalues")
    if not s.is_finite and q <= s.index:
        raise DivergenceError(f"sum of |lam|^(-{q:g}) diverges: exponent must exceed the spectral index {s.index:g}")
    avail = s.available_slots
    acc = _Kahan()
    K = 0
    batch = FIRST_BATCH
    estimate_tail, half_width = math.inf, math.inf
    while True:
        stop = min(K + batch, max_terms)
        if avail is not None:
            stop = min(stop, avail)
        if stop > K:
            re, im, w = s.slots(K, stop)
            for v in _kernels.power_chunk_sums(re, im, w, q, shift):
                acc.add(float(v))
            last = float(np.hypot(re[-1], im[-1]))
            K = stop
        if s.is_finite and K == avail:
            estimate_tail, half_width = 0.0, 0.0
            break
        if last == math.inf:
            estimate_tail, half_width = 0.0, 0.0
            break
        estimate_tail, half_width = _power_tail(s, q, shift, K, last)
        if half_width <= rel_tol * (acc.s + estimate_tail):
            break
        if K >= max_terms or (avail is not None and K >= avail):
            raise BudgetError(
                f"power sum budget exhausted after {K} slots (tail half-width {half_width:.3g})",
                best_bound=half_width,
            )
        batch = min(batch * 2, MAX_BATCH)
    return PowerSum(acc.s + estimate_tail, half_width, K, math.isfinite(half_width))


def _power_tail(s, q, shift, K, last_abs):
    if isinstance(s, PowerLaw):
        p = s.p
        a_exp = 1.0 / p
        u_k = (K / s.C) ** a_exp
        convex = a_exp <= 1.0 or u_k ** 1.0 >= (a_exp - 1.0) * shift / (1.0 + q * a_exp)
        lo_int = _power_law_tail_integral(s, q, shift, K + 1.0)
        if convex:
            g_next = (shift + ((K + 1.0) / s.C) ** a_exp) ** (-q)
            lo = lo_int + g_next / 2.0
            hi = _power_law_tail_integral(s, q, shift, K + 0.5)
        else:
            lo, hi = lo_int, _power_law_tail_integral(s, q, shift, float(K))
        return 0.5 * (lo + hi), 0.5 * (hi - lo)
    env = s.tail_envelope(last_abs, 0)
    if env is None or q <= env.alpha:
        return math.inf, math.inf
    bound = q * env.A * last_abs ** (env.alpha - q) / (q - env.alpha)
    return 0.5 * bound, 0.5 * bound


# -------------------------------------------------------- derived checks


@dataclass(frozen=True)
class DefectReport:
    d: complex
    bound: float
    holds: bool


def imaginary_defect(s, t: float) -> DefectReport:
    """``d = sum e^{-t re lam} - Tr e^{-tA}`` against the bound ``t ||A e^{-tA}||_1``."""
    s = build_spectrum(s)
    t0 = trace_power(s, t, 0)
    t1 = trace_power(s, t, 1)
    d = complex(t0.norm_value, 0.0) - t0.value
    bound = t * t1.norm_value
    slack = 2.0 * t0.tail_bound + t * t1.tail_bound + 1e-13 * (t0.norm_value + bound)
    return DefectReport(d=d, bound=bound, holds=abs(d) <= bound + slack)


def _vectorised(f: Callable) -> Callable:
    def g(x):
        try:
            out = f(x)
            if np.shape(out) == np.shape(x):
                return out
        except (TypeError, ValueError):
            pass
        return np.vectorize(f, otypes=[np.float64])(x)

    return g


def integral_proxy(f, t: float, rtol: float = 1e-9) -> float:
    """``int_0^inf exp(-t f(x)) dx`` for a positive nondecreasing ``f``.

    For raw-log laws the integral starts at the law's domain threshold.  The
    range is cut where ``t f(x) > 45``.
    """
    t = _check_t(t)
    if isinstance(f, RVSpec):
        spec = f
        x_lo = spec.domain_threshold
        fun = lambda x: rv_eval(spec, x)  # noqa: E731
    else:
        x_lo = 0.0
        fun = _vectorised(f)
    x = max(1.0, 2.0 * x_lo)
    while t * float(np.asarray(fun(np.array([x])))[0]) <= 45.0:
        x *= 2.0
        if x > 1e300:
            raise DivergenceError("integrand exp(-t f) does not decay: f grows too slowly")
    span = x - x_lo
    breaks = np.concatenate([[x_lo], x_lo + span * 2.0 ** -np.arange(40, -1, -1.0)])
    value, _ = integrate(lambda z: np.exp(-t * fun(z)), breaks, rtol=rtol)
    return value


@dataclass(frozen=True)
class CavalieriReport:
    lhs: float
    rhs: float
    rel_gap: float


def cavalieri_check(s, t: float, rtol: float = 1e-13) -> CavalieriReport:
    """Compare ``sum e^{-t lam}`` with ``int_0^inf N(x/t) e^{-x} dx`` (step-function quadrature)."""
    s = build_spectrum(s)
    t = _check_t(t)
    if not s.is_real or s.min_real_part < 0:
        raise DomainError("cavalieri_check needs a real spectrum with nonnegative eigenvalues")
    lhs = trace_power(s, t, 0).value.real
    x_end = EXP_UNDERFLOW
    if s.is_finite:
        lam_max, _, _ = s.slots(s.available_slots - 1, s.available_slots)
        x_end = min(x_end, t * float(lam_max[0]))
    elif s.available_slots is not None:
        lam_last, _, _ = s.slots(s.available_slots - 1, s.available_slots)
        x_end = min(x_end, t * float(lam_last[0]))
        rest = _tail_bound(s.tail_envelope(x_end / t, 0), t, x_end / t)
        if rest > 1e-12 * lhs:
            raise BudgetError("spectrum is not enumerable far enough for the Cavalieri integral", rest)
    k = s.slot_count_upto(x_end / t)
    jumps, _, _ = s.slots(0, k)
    breaks = np.unique(np.concatenate([[0.0], t * np.asarray(jumps), [x_end]]))
    breaks = breaks[breaks <= x_end]
    integrand = lambda x: s.counting_array(x / t) * np.exp(-x)  # noqa: E731
    rhs, _ = integrate(integrand, breaks, rtol=rtol, max_intervals=10**7)
    if s.is_finite:
        rhs += s.total_multiplicity * math.exp(-x_end)
    return CavalieriReport(lhs=lhs, rhs=rhs, rel_gap=abs(lhs - rhs) / lhs)


@dataclass(frozen=True)
class MellinReport:
    series: float
    integral: float
    rel_gap: float
    series_tail_bound: float
    integral_error: float


def mellin_power(s, q: float, shift: float = 1.0, rtol: float = 1e-9) -> MellinReport:
    """``sum (shift + lam)^(-q)`` against ``Gamma(q)^-1 int t^(q-1) Tr e^{-t(shift + A)} dt``."""
    s = build_spectrum(s)
    q, shift = float(q), float(shift)
    if not s.is_real:
        raise DomainError("mellin_power needs a real spectrum")
    if s.min_real_part + shift <= 0:
        raise DomainError("mellin_power needs shift + lam > 0 for every eigenvalue")
    if not q > s.index:
        raise DivergenceError(
            f"q = {q:g} must exceed the spectral index {s.index:g}; the Mellin integral diverges at 0"
        )
    if s.min_real_part < 0:
        raise DomainError("mellin_power sums (shift + lam)^(-q) over nonnegative eigenvalues only")
    series = power_sum(s, q, shift, rel_tol=rtol * 1e-2)

    def theta(tt):
        flat = np.asarray(tt, dtype=np.float64).ravel()
        vals = np.array([math.exp(-x * shift) * trace_power(s, x, 0).value.real for x in flat])
        return vals.reshape(np.shape(tt))

    A, a = s.counting_majorant(0.5 * (s.index + q))
    small_budget = 1e-3 * rtol * series.value
    t0 = (small_budget * (q - a) / (A * gamma(a + 1.0))) ** (1.0 / (q - a))
    t0 = min(max(t0, 1e-300), 0.5)
    small_piece = A * gamma(a + 1.0) * t0 ** (q - a) / (q - a)
    y_max = -math.log(t0)
    y_breaks = np.linspace(0.0, y_max, max(int(math.ceil(y_max)), 1) + 1)
    near, err_near = integrate(lambda y: np.exp(-q * y) * theta(np.exp(-y)), y_breaks, rtol=rtol)
    rate = shift + s.min_real_part
    t_far = 1.0 + (60.0 + 10.0 * max(q - 1.0, 0.0)) / rate
    far, err_far = integrate(
        lambda tt: tt ** (q - 1.0) * theta(tt), np.linspace(1.0, t_far, 33), rtol=rtol
    )
    g = gamma(q)
    integral = (near + far) / g
    return MellinReport(
        series=series.value,
        integral=integral,
        rel_gap=abs(series.value - integral) / abs(series.value),
        series_tail_bound=series.tail_bound,
        integral_error=(err_near + err_far + small_piece) / g,
    )
