"""Prefix diagnostics for Schatten, weak Schatten and Macaev ideals.

Sequences are handled as runs of equal values, so block sequences with tens of
millions of entries cost one row per block.  Within a run the weak quantity
``k^(1/p) s_k`` peaks at the run end and the Macaev ratio ``S(m)/ln(1+m)`` is
quasi-convex, so running sups evaluated at run endpoints are exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError, DomainError, UsageError
from .heattrace import power_sum, trace_power
from .spectrum import Spectrum, build_spectrum, counterexample_blocks, counterexample_value

MAX_EXPANDED = 10**7
MIN_VERDICT_DEPTH = 16
BOUNDED_ELASTICITY = 0.3
DIVERGING_ELASTICITY = 0.6


class Verdict(str, enum.Enum):
    BOUNDED_SO_FAR = "BOUNDED_SO_FAR"
    DIVERGING = "DIVERGING"
    INCONCLUSIVE = "INCONCLUSIVE"


# ------------------------------------------------------------ singular values


def singular_value_runs(s, n: int, inverse: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """``(values, multiplicities)`` of the first ``n`` eigenvalue slots, sorted nonincreasing.

    The finite section uses the first ``n`` distinct eigenvalues in the model's
    enumeration order; ``inverse`` takes ``1/|lam|``.
    """
    s = build_spectrum(s)
    n = int(n)
    if n < 0:
        raise DomainError("number of slots must be >= 0")
    avail = s.available_slots
    if avail is not None:
        n = min(n, avail)
    re, im, w = s.slots(0, n)
    mod = np.hypot(re, im)
    if inverse:
        if np.any(mod == 0):
            raise DomainError("inverse singular values need a spectrum without zero eigenvalues")
        mod = 1.0 / mod
    order = np.argsort(-mod, kind="stable")
    vals, mult = mod[order], np.asarray(w, dtype=np.float64)[order]
    return _merge_runs(vals, mult)


def singular_values(s, n: int, inverse: bool = False) -> np.ndarray:
    """First ``n`` singular values (multiplicity expanded, nonincreasing) of the diagonal model."""
    vals, mult = singular_value_runs(s, n, inverse)
    counts = np.asarray(np.round(mult), dtype=np.int64)
    if np.any(np.abs(mult - counts) > 1e-9):
        raise DomainError("singular values need integer multiplicities")
    want = min(int(n), int(counts.sum()))
    if want > MAX_EXPANDED:
        raise DomainError(f"expansion would exceed {MAX_EXPANDED} entries; use singular_value_runs")
    r = int(np.searchsorted(np.cumsum(counts), want)) + 1
    counts = counts[:r].copy()
    if r:
        counts[-1] -= int(counts.sum()) - want
    return np.repeat(vals[:r], counts)


def _merge_runs(vals, mult):
    if vals.size == 0:
        return vals, mult
    new = np.concatenate([[True], vals[1:] != vals[:-1]])
    idx = np.flatnonzero(new)
    return vals[idx], np.add.reduceat(mult, idx)


# -------------------------------------------------------------- prefix scan


class RunProfile:
    """Exact prefix quasinorms for a nonincreasing run-length sequence."""

    def __init__(self, values, mult, p: float):
        v = np.asarray(values, dtype=np.float64)
        m = np.asarray(mult, dtype=np.float64)
        if v.ndim != 1 or v.shape != m.shape or v.size == 0:
            raise UsageError("need matching non-empty value and multiplicity arrays")
        if np.any(np.diff(v) > 0):
            raise UsageError("singular values must be nonincreasing")
        if np.any(v < 0) or np.any(m <= 0):
            raise UsageError("values must be >= 0 and multiplicities > 0")
        if not p > 0:
            raise DomainError("exponent p must be positive")
        self.p = float(p)
        self.values = v
        self.ends = np.cumsum(m)
        self.starts = self.ends - m + 1.0
        vp = v**self.p
        self.vp = vp
        run_sum = vp * m
        self.sum_before = np.concatenate([[0.0], np.cumsum(run_sum)[:-1]])
        weak_end = self.ends ** (1.0 / self.p) * v
        self.weak_before = np.concatenate([[0.0], np.maximum.accumulate(weak_end)[:-1]])
        mac_start = (self.sum_before + vp) / np.log1p(self.starts)
        mac_end = (self.sum_before + run_sum) / np.log1p(self.ends)
        mac_run = np.maximum(mac_start, mac_end)
        self.mac_start = mac_start
        self.mac_before = np.concatenate([[0.0], np.maximum.accumulate(mac_run)[:-1]])

    @classmethod
    def from_values(cls, values, p: float):
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise UsageError("need a non-empty 1-D sequence")
        if np.any(np.diff(v) > 0):
            raise UsageError("singular values must be nonincreasing")
        vals, mult = _merge_runs(v, np.ones_like(v))
        return cls(vals, mult, p)

    @property
    def depth(self) -> int:
        return int(self.ends[-1])

    def query(self, n):
        """``(schatten, weak, macaev)`` at depths ``n`` (1-based, array-like)."""
        n = np.asarray(n, dtype=np.float64)
        if np.any(n < 1) or np.any(n > self.ends[-1]):
            raise UsageError(f"depth must lie in [1, {self.depth}]")
        i = np.searchsorted(self.ends, n, side="left")
        inside = n - self.starts[i] + 1.0
        S = self.sum_before[i] + self.vp[i] * inside
        W = np.maximum(self.weak_before[i], n ** (1.0 / self.p) * self.values[i])
        M = np.maximum(self.mac_before[i], np.maximum(self.mac_start[i], S / np.log1p(n)))
        return S, W, M


def prefix_table(profile: RunProfile, depths=None) -> np.ndarray:
    """Rows ``(n, schatten, weak, macaev)``; default depths are run ends plus powers of two."""
    if depths is None:
        powers = 2.0 ** np.arange(0, int(math.log2(profile.depth)) + 1)
        depths = np.unique(np.concatenate([powers, profile.ends]))
        if depths.size > 4096:
            depths = np.unique(np.concatenate([powers, np.geomspace(1, profile.depth, 1024).round(), [profile.depth]]))
    d = np.asarray(depths, dtype=np.float64)
    S, W, M = profile.query(d)
    return np.column_stack([d, S, W, M])


@dataclass(frozen=True)
class GrowthEvidence:
    n_mid: int
    n_end: int
    value_mid: float
    value_end: float
    log_elasticity: float  # d ln Q / d ln ln n over the upper half of the depth range
    power_exponent: float  # d ln Q / d ln n over the same range


@dataclass(frozen=True)
class IdealReport:
    depth: int
    p: float
    schatten_partial: float
    weak_quasinorm: float
    macaev_norm: float
    verdicts: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)


def _growth(Q_mid, Q_end, n_mid, n_end) -> GrowthEvidence:
    if Q_mid > 0 and Q_end > 0 and n_mid > 1:
        el = math.log(Q_end / Q_mid) / math.log(math.log(n_end) / math.log(n_mid))
        pw = math.log(Q_end / Q_mid) / math.log(n_end / n_mid)
    else:
        el = pw = math.inf if Q_end > Q_mid else 0.0
    return GrowthEvidence(int(n_mid), int(n_end), float(Q_mid), float(Q_end), el, pw)


def _verdict(ev: GrowthEvidence, depth: int) -> Verdict:
    if depth < MIN_VERDICT_DEPTH:
        return Verdict.INCONCLUSIVE
    if ev.log_elasticity <= BOUNDED_ELASTICITY:
        return Verdict.BOUNDED_SO_FAR
    if ev.log_elasticity >= DIVERGING_ELASTICITY:
        return Verdict.DIVERGING
    return Verdict.INCONCLUSIVE


def ideal_report(s_values=None, p: float = 1.0, *, runs=None, depth: int | None = None) -> IdealReport:
    """Schatten partial, weak quasinorm and Macaev norm at ``depth`` with growth verdicts.

    Pass either a nonincreasing sequence ``s_values`` or ``runs=(values, mult)``.
    The verdict compares each quantity at ``sqrt(depth)`` and ``depth``: its
    elasticity against ``ln n`` is ~1 for logarithmic growth and ~0 for a
    bounded quantity.
    """
    if (s_values is None) == (runs is None):
        raise UsageError("pass exactly one of s_values or runs")
    prof = RunProfile.from_values(s_values, p) if runs is None else RunProfile(runs[0], runs[1], p)
    n_end = prof.depth if depth is None else int(depth)
    n_mid = max(int(math.floor(math.sqrt(n_end))), 1)
    S, W, M = (float(x) for x in np.array(prof.query([n_end])).ravel())
    Sm, Wm, Mm = (float(x) for x in np.array(prof.query([n_mid])).ravel())
    evidence = {
        "schatten": _growth(Sm, S, n_mid, n_end),
        "weak": _growth(Wm, W, n_mid, n_end),
        "macaev": _growth(Mm, M, n_mid, n_end),
    }
    verdicts = {k: _verdict(ev, n_end) for k, ev in evidence.items()}
    return IdealReport(n_end, float(p), S, W, M, verdicts, evidence)


def spectrum_ideal_report(s, p: float, n: int, inverse: bool = False) -> IdealReport:
    """``ideal_report`` for the singular values of the first ``n`` slots of a spectrum."""
    return ideal_report(p=p, runs=singular_value_runs(s, n, inverse))


# ----------------------------------------------------------- counterexample


class Witness(NamedTuple):
    c: float
    n: int
    value: Fraction
    bound: Fraction
    holds: bool


def counterexample_witnesses(levels: int, cs) -> list[Witness]:
    """For each ``c``, the index ``n = 2^((ceil(c)+1)^2) - 1`` with ``lam_n > c/n`` (exact)."""
    out = []
    for c in cs:
        if not c > 1:
            raise DomainError("witnesses exist for c > 1 only")
        m = math.ceil(c)
        n = 2 ** ((m + 1) ** 2) - 1
        value = counterexample_value(levels, n)
        bound = Fraction(c).limit_denominator(10**12) / n
        out.append(Witness(float(c), n, value, bound, value > bound))
    return out


class BoundaryRow(NamedTuple):
    ell: int
    n: int
    partial_sum: Fraction
    macaev_ratio: float


def counterexample_boundaries(levels: int) -> list[BoundaryRow]:
    """``(1/ln(1+n)) sum_{k=2}^n lam_k`` at the last index of every block."""
    rows = []
    total = Fraction(0)
    for b in counterexample_blocks(levels):
        total += b.value * b.multiplicity
        n = b.k_ell + b.multiplicity - 1
        rows.append(BoundaryRow(b.ell, n, total, float(total) / math.log1p(n)))
    return rows


# ---------------------------------------------------------------- zeta scan


class ScanPoint(NamedTuple):
    eps: float
    value: float
    tail_bound: float


def zeta_eps_scan(s, p: float, eps_grid) -> list[ScanPoint]:
    """``eps * sum |lam|^-(p+eps)`` over a decreasing grid of ``eps``."""
    s = build_spectrum(s)
    eps = np.asarray(eps_grid, dtype=np.float64)
    if eps.ndim != 1 or eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise UsageError("eps_grid must be a strictly decreasing list of positive numbers")
    if not s.is_positive_real_part or s.has_zero_eigenvalue:
        raise DomainError("zeta_eps_scan needs an invertible spectrum with positive real parts")
    out = []
    for e in eps:
        try:
            ps = power_sum(s, p + float(e), 0.0)
        except DivergenceError as exc:
            raise DivergenceError(f"series diverges at eps = {e:g}: {exc}") from exc
        out.append(ScanPoint(float(e), float(e) * ps.value, float(e) * ps.tail_bound))
    return out


# ------------------------------------------------------------ Z1 <-> log


@dataclass(frozen=True)
class Z1Report:
    t: np.ndarray
    ratio: np.ndarray  # ||A^-1 e^{-tA}||_1 / ln(1/t)
    derivative_rel_err: np.ndarray
    max_derivative_rel_err: float


def _inverse_norm(s: Spectrum, t: float) -> float:
    return trace_power(s, t, -1).norm_value


def z1_log_check(s, t_grid, rel_step: float = 1e-3) -> Z1Report:
    """Ratio ``||A^-1 e^{-tA}||_1 / ln(1/t)`` and the check ``d/dt ||A^-1 e^{-tA}||_1 = -||e^{-tA}||_1``.

    The derivative is a Richardson-extrapolated central difference.
    """
    s = build_spectrum(s)
    if not s.is_positive_real_part or s.has_zero_eigenvalue:
        raise DomainError("z1_log_check needs an invertible spectrum with positive real parts")
    g = np.asarray(t_grid, dtype=np.float64)
    if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) >= 0) or np.any(g <= 0):
        raise UsageError("t_grid must be strictly decreasing and positive")
    ratio, err = [], []
    for t in g:
        F = _inverse_norm(s, t)
        ratio.append(F / math.log(1.0 / t) if t < 1 else math.nan)
        h = rel_step * t
        d1 = (_inverse_norm(s, t + h) - _inverse_norm(s, t - h)) / (2 * h)
        d2 = (_inverse_norm(s, t + h / 2) - _inverse_norm(s, t - h / 2)) / h
        deriv = (4 * d2 - d1) / 3
        target = -trace_power(s, t, 0).norm_value
        err.append(abs(deriv - target) / abs(target))
    err = np.array(err)
    return Z1Report(g, np.array(ratio), err, float(err.max()))
