"""Fits of ``C t^-p (ln 1/t)^r`` to heat traces and Karamata-type ratio checks.

The limit statements are only evidenced on finite grids: every check returns
the raw ratio series (or minima over the grid) and leaves the limit to the
caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FitError, UsageError
from .heattrace import trace_power
from .rvfun import RVSpec, gamma, lambert_w0, rv_eval
from .spectrum import Counterexample, build_spectrum

POINTS_PER_DECADE = 40
MIN_SAMPLES = 8
MIN_DECADES = 2.0
MAX_FIT_T = 0.5
DEFAULT_SLACK = 0.05


@dataclass(frozen=True)
class AsymptoticFit:
    p_hat: float
    r_hat: float
    C_hat: float
    residual: float
    t_window: tuple
    n_points: int


def geometric_grid(t_min: float, t_max: float, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    """Geometric grid from ``t_min`` to ``t_max`` inclusive, ``per_decade`` points per decade."""
    if not (0 < t_min < t_max):
        raise UsageError("geometric_grid needs 0 < t_min < t_max")
    count = max(int(round(per_decade * math.log10(t_max / t_min))), 1) + 1
    return np.geomspace(t_min, t_max, count)


def sample_trace(s, t_grid) -> list:
    """``[(t, Theta(t))]`` for the real part of the heat trace on ``t_grid``."""
    s = build_spectrum(s)
    return [(float(t), trace_power(s, float(t), 0).value.real) for t in t_grid]


def fit_prc(samples, fix_p: float | None = None) -> AsymptoticFit:
    """Least-squares fit of ``ln theta = ln(C Gamma(1+p)) - p ln t + r ln ln(1/t)``.

    ``fix_p`` drops the p column (use ``fix_p=0`` for purely logarithmic laws).
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise UsageError("samples must be a sequence of (t, theta) pairs")
    if arr.shape[0] < MIN_SAMPLES:
        raise UsageError(f"fit_prc needs at least {MIN_SAMPLES} samples, got {arr.shape[0]}")
    t, theta = arr[:, 0], arr[:, 1]
    if np.any(~np.isfinite(theta)) or np.any(theta <= 0):
        raise DomainError("fit_prc needs positive finite theta values")
    if np.any(t <= 0) or np.any(t >= MAX_FIT_T):
        raise UsageError(f"fit_prc needs 0 < t < {MAX_FIT_T}")
    if math.log10(t.max() / t.min()) < MIN_DECADES - 1e-9:
        raise UsageError(f"fit_prc needs t spanning at least {MIN_DECADES:g} decades")
    lt = np.log(t)
    llt = np.log(-lt)
    y = np.log(theta)
    if fix_p is None:
        X = np.column_stack([np.ones_like(lt), -lt, llt])
        rhs = y
    else:
        X = np.column_stack([np.ones_like(lt), llt])
        rhs = y + float(fix_p) * lt
    if np.linalg.matrix_rank(X) < X.shape[1] or np.linalg.cond(X) > 1e12:
        raise FitError("degenerate t-grid: design matrix is singular")
    coef, *_ = np.linalg.lstsq(X, rhs, rcond=None)
    if fix_p is None:
        intercept, p_hat, r_hat = (float(c) for c in coef)
    else:
        intercept, r_hat = (float(c) for c in coef)
        p_hat = float(fix_p)
    resid = rhs - X @ coef
    if 1.0 + p_hat <= 0:
        raise FitError(f"fitted index {p_hat:g} leaves Gamma(1+p) undefined")
    C_hat = math.exp(intercept) / gamma(1.0 + p_hat)
    return AsymptoticFit(
        p_hat=p_hat,
        r_hat=r_hat,
        C_hat=C_hat,
        residual=float(np.sqrt(np.mean(resid**2))),
        t_window=(float(t.min()), float(t.max())),
        n_points=int(arr.shape[0]),
    )


def _monotone(grid, increasing: bool, name: str) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise UsageError(f"{name} must be a non-empty 1-D grid")
    d = np.diff(g)
    if (increasing and np.any(d <= 0)) or (not increasing and np.any(d >= 0)):
        raise UsageError(f"{name} must be strictly {'increasing' if increasing else 'decreasing'}")
    return g


def karamata_forward(s, spec: RVSpec, t_grid) -> np.ndarray:
    """``Theta(t) / f(1/t)`` with ``f`` the law at unit amplitude.

    The limit is ``Gamma(1+p) C`` when the counting function is ``~ C f``.
    """
    s = build_spectrum(s)
    g = _monotone(t_grid, increasing=False, name="t_grid")
    unit = spec.with_amplitude(1.0)
    return np.array([trace_power(s, t, 0).value.real / float(rv_eval(unit, 1.0 / t)) for t in g])


def karamata_inverse(s, spec: RVSpec, lam_grid) -> np.ndarray:
    """``N(lam) / f(lam)`` with ``f`` the law at unit amplitude."""
    s = build_spectrum(s)
    if isinstance(s, Counterexample):
        raise DomainError("counterexample values are singular numbers, not an eigenvalue sequence")
    g = _monotone(lam_grid, increasing=True, name="lam_grid")
    unit = spec.with_amplitude(1.0)
    return s.counting_array(g) / np.asarray(rv_eval(unit, g), dtype=np.float64)


@dataclass(frozen=True)
class LiminfReport:
    min_lambda_ratio: float
    min_t_ratio: float
    hypothesis_met: bool
    threshold: float
    verdict: str  # "pass", "fail" or "hypothesis not met"


def liminf_check(s, spec: RVSpec, c: float, t_grid, lam_grid, slack: float = DEFAULT_SLACK) -> LiminfReport:
    """Grid version of: ``liminf N/f >= c`` implies ``liminf Theta/f(1/t) >= c Gamma(1+p)``.

    The hypothesis is accepted at ``c (1 - slack)`` and the conclusion tested
    at ``c Gamma(1+p) (1 - slack)``.
    """
    if not c > 0:
        raise DomainError("liminf_check needs c > 0")
    inv = karamata_inverse(s, spec, lam_grid)
    fwd = karamata_forward(s, spec, t_grid)
    m_lam, m_t = float(inv.min()), float(fwd.min())
    hyp = m_lam >= c * (1.0 - slack)
    threshold = c * gamma(1.0 + spec.p) * (1.0 - slack)
    if not hyp:
        verdict = "hypothesis not met"
    else:
        verdict = "pass" if m_t >= threshold else "fail"
    return LiminfReport(m_lam, m_t, hyp, threshold, verdict)


def lambert_weyl_check(s, p: float, r: float, lam_grid) -> np.ndarray:
    """``N(e^{W0(lam)}) / (lam^r e^{(p-r) W0(lam)})``; boundedness is the check."""
    s = build_spectrum(s)
    g = _monotone(lam_grid, increasing=True, name="lam_grid")
    if np.any(g <= 0):
        raise DomainError("lambert_weyl_check needs positive lam")
    w = np.array([lambert_w0(float(x)) for x in g])
    arg = g / w  # e^{W(x)} = x / W(x) for x > 0
    counts = s.counting_array(arg)
    denom = np.exp(r * np.log(g) + (p - r) * w)
    return counts / denom

