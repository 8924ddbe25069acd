"""Discrete spectra: closed-form eigenvalue generators plus explicit lists.

Eigenvalues are enumerated as *slots* in nondecreasing real part.  A slot is
one distinct eigenvalue with an integer multiplicity; multiplicities are kept
as weights and never expanded.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, NamedTuple

import numpy as np

from . import _kernels
from .errors import BudgetError, DomainError

MAX_SIEVE_LIMIT = 10**8
MAX_EXPLICIT = 10**7
MAX_COUNTEREXAMPLE_LEVELS = 5
DEFAULT_MAX_TERMS = 10**9
# pi(x) < 1.25506 x / ln x for x > 1 (Rosser & Schoenfeld)
_PRIME_COUNT_CONSTANT = 1.25506


class Eigenvalues(NamedTuple):
    re: np.ndarray
    im: np.ndarray
    mult: np.ndarray

    def to_list(self) -> list[tuple[float, float, int]]:
        return [(float(a), float(b), int(m)) for a, b, m in zip(self.re, self.im, self.mult)]

    @property
    def total_multiplicity(self) -> int:
        return int(self.mult.sum())


class TailEnvelope(NamedTuple):
    """For real parts ``x >= X``: ``N(x) <= A x**alpha`` and ``|lam|**n <= B x**m``."""

    A: float
    alpha: float
    B: float
    m: float


class Spectrum(ABC):
    model: str = ""
    is_finite: bool = False
    is_real: bool = True

    # -- enumeration ------------------------------------------------------
    @abstractmethod
    def slots(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(re, im, weight) arrays for slots ``i0 <= i < i1``."""

    @property
    def available_slots(self) -> int | None:
        """Number of slots that can be enumerated; ``None`` when unlimited."""
        return None

    @abstractmethod
    def slot_count_upto(self, cutoff: float) -> int:
        """Number of slots whose real part is ``<= cutoff``."""

    @abstractmethod
    def counting(self, lam: float) -> int:
        """``N(lam)``: eigenvalues with real part ``<= lam``, with multiplicity."""

    def counting_array(self, lams) -> np.ndarray:
        lams = np.asarray(lams, dtype=np.float64)
        return np.vectorize(self.counting, otypes=[np.float64])(lams)

    # -- metadata ---------------------------------------------------------
    @property
    @abstractmethod
    def min_real_part(self) -> float: ...

    @property
    def is_positive_real_part(self) -> bool:
        return self.min_real_part > 0

    @property
    def has_zero_eigenvalue(self) -> bool:
        return False

    @property
    def index(self) -> float:
        """Growth exponent of the counting function (0 for finite spectra)."""
        return 0.0

    def tail_envelope(self, X: float, n: int) -> TailEnvelope | None:
        """Certified power envelopes beyond real part ``X``; ``None`` for finite spectra."""
        return None

    def counting_majorant(self, alpha: float) -> tuple[float, float]:
        """``(A, a)`` with ``N(x) <= A x**a`` for every ``x > 0`` and some ``a <= alpha``."""
        raise DomainError(f"{self.model} spectrum has no global counting majorant")

    def eigenvalue(self, k: int) -> complex:
        """The ``k``-th distinct eigenvalue (1-based slot index)."""
        re, im, _ = self.slots(k - 1, k)
        return complex(re[0], im[0])

    def descriptor(self) -> dict[str, Any]:
        return {"model": self.model, "params": {}}


def _adjust_count(guess: int, value_of, cutoff: float) -> int:
    # value_of(k) is the real part of the k-th slot (1-based), increasing in k
    m = max(guess, 0)
    while m > 0 and value_of(m) > cutoff:
        m -= 1
    while value_of(m + 1) <= cutoff:
        m += 1
    return m


@dataclass(frozen=True, eq=False)
class PowerLaw(Spectrum):
    """``lam_k = (k / C) ** (1 / p)``, ``k >= 1``; ``N(lam) = floor(C lam^p)``."""

    p: float
    C: float = 1.0
    model = "power_law"

    def __post_init__(self):
        if not (self.p > 0 and math.isfinite(self.p)):
            raise DomainError(f"power_law parameter p must be > 0, got {self.p!r}")
        if not (self.C > 0 and math.isfinite(self.C)):
            raise DomainError(f"power_law parameter C must be > 0, got {self.C!r}")

    def _value(self, k):
        return (np.asarray(k, dtype=np.float64) / self.C) ** (1.0 / self.p)

    def slots(self, i0, i1):
        k = np.arange(i0 + 1, i1 + 1, dtype=np.float64)
        re = self._value(k)
        return re, np.zeros_like(re), np.ones_like(re)

    def slot_count_upto(self, cutoff):
        if cutoff < float(self._value(1)):
            return 0
        guess = int(min(math.floor(self.C * cutoff**self.p), 2**62))
        return _adjust_count(guess, lambda k: float(self._value(k)), cutoff)

    def counting(self, lam):
        return self.slot_count_upto(lam)

    def counting_array(self, lams):
        lams = np.asarray(lams, dtype=np.float64)
        return np.floor(self.C * np.power(np.maximum(lams, 0.0), self.p))

    @property
    def min_real_part(self):
        return float(self._value(1))

    @property
    def index(self):
        return self.p

    def tail_envelope(self, X, n):
        return TailEnvelope(self.C, self.p, 1.0, float(n))

    def counting_majorant(self, alpha):
        return self.C, self.p

    def descriptor(self):
        return {"model": self.model, "params": {"p": self.p, "C": self.C}}


@dataclass(frozen=True, eq=False)
class LogLaw(Spectrum):
    """``lam_k = exp(k ** (1 / r))``; ``N(lam) = floor((ln lam) ** r)``."""

    r: float
    model = "log_law"

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise DomainError(f"log_law parameter r must be > 0, got {self.r!r}")

    def _value(self, k):
        return np.exp(np.asarray(k, dtype=np.float64) ** (1.0 / self.r))

    def slots(self, i0, i1):
        k = np.arange(i0 + 1, i1 + 1, dtype=np.float64)
        with np.errstate(over="ignore"):
            re = self._value(k)
        return re, np.zeros_like(re), np.ones_like(re)

    def slot_count_upto(self, cutoff):
        if cutoff < math.e:
            return 0
        guess = int(math.floor(math.log(cutoff) ** self.r))
        with np.errstate(over="ignore"):
            return _adjust_count(guess, lambda k: float(self._value(k)), cutoff)

    def counting(self, lam):
        return self.slot_count_upto(lam)

    def counting_array(self, lams):
        lams = np.asarray(lams, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.floor(np.power(np.log(np.maximum(lams, 1.0)), self.r))
        return np.where(lams < math.e, 0.0, out)

    @property
    def min_real_part(self):
        return math.e

    def tail_envelope(self, X, n):
        if X <= math.e:
            return None
        # ln ln is concave in ln x, so (ln x)^r <= (ln X)^r (x / X)^(r / ln X) for x >= X
        lx = math.log(X)
        delta = self.r / lx
        return TailEnvelope(lx**self.r * X ** (-delta), delta, 1.0, float(n))

    def counting_majorant(self, alpha):
        if not alpha > 0:
            raise DomainError("log_law counting majorant needs a positive exponent")
        # max over x >= 1 of (ln x)^r x^(-alpha) is (r / (e alpha))^r
        return (self.r / (math.e * alpha)) ** self.r, alpha

    def descriptor(self):
        return {"model": self.model, "params": {"r": self.r}}


@lru_cache(maxsize=4)
def _cached_primes(limit: int) -> np.ndarray:
    primes = _kernels.sieve_primes(limit)
    primes.setflags(write=False)
    return primes


def primes_upto(limit: int) -> np.ndarray:
    """All primes ``<= limit`` by an odd-only sieve of Eratosthenes."""
    if int(limit) != limit or limit < 2:
        raise DomainError(f"prime sieve limit must be an integer >= 2, got {limit!r}")
    if limit > MAX_SIEVE_LIMIT:
        raise BudgetError(f"prime sieve limit {limit} exceeds the budget {MAX_SIEVE_LIMIT}")
    return _cached_primes(int(limit))


@dataclass(frozen=True, eq=False)
class Primes(Spectrum):
    """The primes as a spectrum, enumerable up to the sieve ``limit``."""

    limit: int
    model = "primes"

    def __post_init__(self):
        if int(self.limit) != self.limit or self.limit < 2:
            raise DomainError(f"primes parameter limit must be an integer >= 2, got {self.limit!r}")
        if self.limit > MAX_SIEVE_LIMIT:
            raise BudgetError(f"primes parameter limit {self.limit} exceeds {MAX_SIEVE_LIMIT}")
        object.__setattr__(self, "limit", int(self.limit))

    @property
    def primes(self) -> np.ndarray:
        return primes_upto(self.limit)

    @property
    def available_slots(self):
        return int(self.primes.size)

    def slots(self, i0, i1):
        re = self.primes[i0:i1].astype(np.float64)
        return re, np.zeros_like(re), np.ones_like(re)

    def _check(self, lam):
        if lam > self.limit:
            raise BudgetError(f"prime counting at {lam:g} needs a sieve beyond limit {self.limit}")

    def slot_count_upto(self, cutoff):
        self._check(cutoff)
        return int(np.searchsorted(self.primes, cutoff, side="right"))

    def counting(self, lam):
        return self.slot_count_upto(lam)

    def counting_array(self, lams):
        lams = np.asarray(lams, dtype=np.float64)
        self._check(float(lams.max()) if lams.size else 0.0)
        return np.searchsorted(self.primes, lams, side="right").astype(np.float64)

    @property
    def min_real_part(self):
        return 2.0

    @property
    def index(self):
        return 1.0

    def tail_envelope(self, X, n):
        if X <= 1:
            return None
        return TailEnvelope(_PRIME_COUNT_CONSTANT / math.log(X), 1.0, 1.0, float(n))

    def counting_majorant(self, alpha):
        return 1.0, 1.0  # pi(x) <= x

    def descriptor(self):
        return {"model": self.model, "params": {"limit": self.limit}}


class _Finite(Spectrum):
    is_finite = True

    def _init_arrays(self, re, im, mult):
        order = np.lexsort((im, re))
        re, im, mult = re[order], im[order], mult[order]
        if re.size > 1:
            new = np.ones(re.size, dtype=bool)
            new[1:] = (re[1:] != re[:-1]) | (im[1:] != im[:-1])
            starts = np.flatnonzero(new)
            mult = np.add.reduceat(mult, starts)
            re, im = re[starts], im[starts]
        for arr in (re, im, mult):
            arr.setflags(write=False)
        object.__setattr__(self, "_re", re)
        object.__setattr__(self, "_im", im)
        object.__setattr__(self, "_mult", mult)
        cum = np.cumsum(mult)
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    @property
    def available_slots(self):
        return int(self._re.size)

    def slots(self, i0, i1):
        return self._re[i0:i1], self._im[i0:i1], self._mult[i0:i1].astype(np.float64)

    def slot_count_upto(self, cutoff):
        return int(np.searchsorted(self._re, cutoff, side="right"))

    def counting(self, lam):
        k = self.slot_count_upto(lam)
        return int(self._cum[k - 1]) if k else 0

    def counting_array(self, lams):
        k = np.searchsorted(self._re, np.asarray(lams, dtype=np.float64), side="right")
        padded = np.concatenate([[0], self._cum])
        return padded[k].astype(np.float64)

    @property
    def min_real_part(self):
        return float(self._re[0])

    @property
    def is_real(self):
        return bool(np.all(self._im == 0.0))

    @property
    def has_zero_eigenvalue(self):
        return bool(np.any((self._re == 0.0) & (self._im == 0.0)))

    @property
    def total_multiplicity(self) -> int:
        return int(self._cum[-1])

    def counting_majorant(self, alpha):
        return float(self.total_multiplicity), 0.0

    def reciprocal(self) -> "Explicit":
        """Spectrum of the inverse operator (real, nonzero eigenvalues only)."""
        if not self.is_real or self.has_zero_eigenvalue:
            raise DomainError("reciprocal spectrum needs real nonzero eigenvalues")
        return Explicit.from_arrays(1.0 / self._re, None, self._mult)


@dataclass(frozen=True, eq=False)
class Explicit(_Finite):
    """A finite list of ``(re, im, multiplicity)`` triples."""

    entries: tuple = field(default=())
    model = "explicit"

    def __post_init__(self):
        rows = list(self.entries)
        if not rows:
            raise DomainError("explicit spectrum parameter eigenvalues must be non-empty")
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim == 2 and arr.shape[1] == 1:
            arr = arr[:, 0]
        if arr.ndim == 1:
            arr = np.stack([arr, np.zeros_like(arr), np.ones_like(arr)], axis=1)
        elif arr.shape[1] == 2:
            arr = np.concatenate([arr, np.ones((arr.shape[0], 1))], axis=1)
        self._from(arr[:, 0], arr[:, 1], arr[:, 2])

    def _from(self, re, im, mult):
        if re.size > MAX_EXPLICIT:
            raise BudgetError(f"explicit spectrum has {re.size} entries, cap is {MAX_EXPLICIT}")
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise DomainError("explicit spectrum parameter eigenvalues must be finite")
        if np.any(mult < 1) or np.any(mult != np.floor(mult)):
            raise DomainError("explicit spectrum parameter multiplicity must be an integer >= 1")
        self._init_arrays(
            np.array(re, dtype=np.float64),
            np.array(im, dtype=np.float64),
            np.array(mult, dtype=np.int64),
        )

    @classmethod
    def from_arrays(cls, re, im=None, mult=None) -> "Explicit":
        re = np.asarray(re, dtype=np.float64).ravel()
        im = np.zeros_like(re) if im is None else np.asarray(im, dtype=np.float64).ravel()
        mult = np.ones(re.size) if mult is None else np.asarray(mult, dtype=np.float64).ravel()
        obj = cls.__new__(cls)
        object.__setattr__(obj, "entries", ())
        obj._from(re, im, mult)
        return obj

    def descriptor(self):
        rows = [[float(a), float(b), int(m)] for a, b, m in zip(self._re, self._im, self._mult)]
        return {"model": self.model, "params": {"eigenvalues": rows}}


@dataclass(frozen=True)
class CounterexampleBlock:
    ell: int
    k_ell: int  # first 1-based index of the block, 2**(ell**2)
    value: Fraction  # ell / (k_{ell+1} - k_ell)
    multiplicity: int


def counterexample_blocks(levels: int) -> list[CounterexampleBlock]:
    if int(levels) != levels or not 1 <= levels <= MAX_COUNTEREXAMPLE_LEVELS:
        raise DomainError(
            f"counterexample parameter levels must be an integer in [1, {MAX_COUNTEREXAMPLE_LEVELS}], got {levels!r}"
        )
    out = []
    for ell in range(1, int(levels) + 1):
        k0, k1 = 2 ** (ell * ell), 2 ** ((ell + 1) ** 2)
        out.append(CounterexampleBlock(ell, k0, Fraction(ell, k1 - k0), k1 - k0))
    return out


@dataclass(frozen=True, eq=False)
class Counterexample(_Finite):
    """Eigenvalues constant on the blocks ``[2^(l^2), 2^((l+1)^2))``, indexed from ``k = 2``."""

    levels: int
    model = "counterexample"

    def __post_init__(self):
        blocks = counterexample_blocks(self.levels)
        object.__setattr__(self, "blocks", tuple(blocks))
        re = np.array([float(b.value) for b in blocks])
        mult = np.array([b.multiplicity for b in blocks], dtype=np.int64)
        self._init_arrays(re, np.zeros_like(re), mult)

    def descriptor(self):
        return {"model": self.model, "params": {"levels": self.levels}}


def counterexample_partial_sum(levels: int, n: int) -> float:
    """``sum_{k=2}^{n} lam_k`` for the block counterexample (exact, then rounded)."""
    if int(n) != n or n < 2:
        raise DomainError(f"partial sum needs n >= 2, got {n!r}")
    blocks = counterexample_blocks(levels)
    last = blocks[-1].k_ell + blocks[-1].multiplicity - 1
    if n > last:
        raise DomainError(f"n = {n} lies beyond the {levels} constructed levels (last index {last})")
    total = Fraction(0)
    for b in blocks:
        hi = min(n, b.k_ell + b.multiplicity - 1)
        count = hi - b.k_ell + 1
        if count <= 0:
            break
        total += count * b.value
    return float(total)


def counterexample_value(levels: int, n: int) -> Fraction:
    """``lam_n`` of the block counterexample, exact."""
    for b in counterexample_blocks(levels):
        if b.k_ell <= n < b.k_ell + b.multiplicity:
            return b.value
    raise DomainError(f"index {n} is not covered by {levels} levels")


class _UnitStep(Spectrum):
    """Complex models with real parts ``k = 1, 2, ...``."""

    def slot_count_upto(self, cutoff):
        return max(int(math.floor(cutoff)), 0)

    @property
    def min_real_part(self):
        return 1.0

    @property
    def is_real(self):
        return False


@dataclass(frozen=True, eq=False)
class ComplexLine(_UnitStep):
    """``lam_k = (1 + i c) k``."""

    c: float
    model = "complex_line"

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise DomainError(f"complex_line parameter c must be finite, got {self.c!r}")

    def slots(self, i0, i1):
        k = np.arange(i0 + 1, i1 + 1, dtype=np.float64)
        return k, self.c * k, np.ones_like(k)

    def counting(self, lam):
        return self.slot_count_upto(lam)

    def counting_array(self, lams):
        return np.floor(np.maximum(np.asarray(lams, dtype=np.float64), 0.0))

    @property
    def is_real(self):
        return self.c == 0

    @property
    def index(self):
        return 1.0

    def tail_envelope(self, X, n):
        return TailEnvelope(1.0, 1.0, (1.0 + self.c**2) ** (n / 2.0), float(n))

    def counting_majorant(self, alpha):
        return 1.0, 1.0

    def descriptor(self):
        return {"model": self.model, "params": {"c": self.c}}


@dataclass(frozen=True, eq=False)
class TriangularComplex(_UnitStep):
    """``lam_k = (1 + i) k`` with multiplicity ``k``."""

    model = "triangular_complex"

    def slots(self, i0, i1):
        k = np.arange(i0 + 1, i1 + 1, dtype=np.float64)
        return k, k.copy(), k.copy()

    def counting(self, lam):
        m = self.slot_count_upto(lam)
        return m * (m + 1) // 2

    def counting_array(self, lams):
        m = np.floor(np.maximum(np.asarray(lams, dtype=np.float64), 0.0))
        return m * (m + 1) / 2

    @property
    def index(self):
        return 2.0

    def tail_envelope(self, X, n):
        # N(x) = K(K+1)/2 <= x^2 for x >= 1, |lam| = sqrt(2) x
        return TailEnvelope(1.0, 2.0, 2.0 ** (n / 2.0), float(n))

    def counting_majorant(self, alpha):
        return 1.0, 2.0


@dataclass(frozen=True, eq=False)
class NonHolo(_UnitStep):
    """``lam_k = k + i k^2``."""

    model = "nonholo"

    def slots(self, i0, i1):
        k = np.arange(i0 + 1, i1 + 1, dtype=np.float64)
        return k, k * k, np.ones_like(k)

    def counting(self, lam):
        return self.slot_count_upto(lam)

    def counting_array(self, lams):
        return np.floor(np.maximum(np.asarray(lams, dtype=np.float64), 0.0))

    @property
    def index(self):
        return 1.0

    def tail_envelope(self, X, n):
        # |lam|^n = x^n (1 + x^2)^(n/2): <= 2^(n/2) x^(2n) for n >= 0, <= x^(2n) for n < 0
        B = 2.0 ** (n / 2.0) if n >= 0 else 1.0
        return TailEnvelope(1.0, 1.0, B, 2.0 * n)

    def counting_majorant(self, alpha):
        return 1.0, 1.0


# ------------------------------------------------------------ construction

_MODELS = {
    "power_law": PowerLaw,
    "log_law": LogLaw,
    "primes": Primes,
    "explicit": Explicit,
    "counterexample": Counterexample,
    "complex_line": ComplexLine,
    "triangular_complex": TriangularComplex,
    "nonholo": NonHolo,
}
_POSITIONAL = {"primes": "limit", "counterexample": "levels", "log_law": "r", "complex_line": "c", "power_law": "p"}
_INT_PARAMS = {"limit", "levels"}


def _coerce(name: str, raw: str):
    if name in _INT_PARAMS:
        return int(float(raw))
    return float(raw)


def parse_descriptor(text: str) -> dict[str, Any]:
    """Parse ``model[:k=v,...]`` (or a JSON object) into ``{"model", "params"}``."""
    text = text.strip()
    if text.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"spectrum descriptor is not valid JSON: {exc}") from exc
        return obj
    model, _, rest = text.partition(":")
    model = model.strip().lower()
    params: dict[str, Any] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            if model not in _POSITIONAL or params:
                raise DomainError(f"cannot interpret spectrum parameter {item!r} for model {model!r}")
            key, value = _POSITIONAL[model], key
        key = key.strip()
        try:
            params[key] = _coerce(key, value.strip())
        except ValueError as exc:
            raise DomainError(f"spectrum parameter {key} has non-numeric value {value!r}") from exc
    return {"model": model, "params": params}


def build_spectrum(model) -> Spectrum:
    """Build a :class:`Spectrum` from a descriptor string, dict or existing spectrum."""
    if isinstance(model, Spectrum):
        return model
    if isinstance(model, str):
        model = parse_descriptor(model)
    if not isinstance(model, dict) or "model" not in model:
        raise DomainError("spectrum descriptor must be an object with a 'model' key")
    name = str(model["model"]).lower()
    params = dict(model.get("params") or {})
    cls = _MODELS.get(name)
    if cls is None:
        raise DomainError(f"unknown spectrum model {name!r}; expected one of {sorted(_MODELS)}")
    if cls is Explicit:
        if "eigenvalues" not in params:
            raise DomainError("explicit spectrum needs parameter eigenvalues")
        return Explicit(tuple(tuple(row) if isinstance(row, (list, tuple)) else (row,) for row in params["eigenvalues"]))
    try:
        if "limit" in params:
            params["limit"] = int(params["limit"])
        if "levels" in params:
            params["levels"] = int(params["levels"])
        return cls(**params)
    except TypeError as exc:
        raise DomainError(f"invalid parameters for spectrum model {name!r}: {exc}") from exc


def eigenvalues_upto(s: Spectrum, cutoff: float, max_terms: int = DEFAULT_MAX_TERMS) -> Eigenvalues:
    """All eigenvalues with real part ``<= cutoff`` in nondecreasing real part."""
    k = s.slot_count_upto(cutoff) if cutoff >= s.min_real_part else 0
    if k > max_terms:
        raise BudgetError(f"cutoff {cutoff:g} produces {k} eigenvalues, budget is {max_terms}")
    re, im, w = s.slots(0, k)
    return Eigenvalues(np.asarray(re), np.asarray(im), np.asarray(w).astype(np.int64))


def counting(s: Spectrum, lam: float) -> int:
    return s.counting(lam)
