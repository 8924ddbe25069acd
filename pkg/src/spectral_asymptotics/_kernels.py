"""Hot loops: chunked heat-trace sums, power sums and the prime sieve.

Every kernel exists twice, a numba ``@njit`` version and a vectorised numpy
version; ``SPECTRAL_ASYMPTOTICS_JIT`` picks one at import time.  Both reduce in
fixed chunks of :data:`CHUNK` terms, so per-chunk partial sums do not depend on
how many threads evaluate them.  Chunks are then combined sequentially in
index order by :func:`kahan_combine`.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import HAS_NUMBA, USE_JIT, numba

CHUNK = 4096
_LOG_OVERFLOW = 600.0


def kahan_combine(values) -> float:
    """Compensated sum of ``values`` taken strictly in the given order."""
    s = 0.0
    c = 0.0
    for v in values:
        y = float(v) - c
        tmp = s + y
        c = (tmp - s) - y
        s = tmp
    return s


# ---------------------------------------------------------------- numpy path


def _heat_terms_numpy(re, im, w, t, n, shift):
    if n == 0:
        mag = w * np.exp(-t * (re - shift))
        ang = -t * im
    else:
        a = np.hypot(re, im)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            loga = np.log(a)
            direct = np.abs(n * loga) < _LOG_OVERFLOW
            mag = np.where(
                direct,
                w * np.power(a, float(n)) * np.exp(-t * (re - shift)),
                w * np.exp(n * loga - t * (re - shift)),
            )
        mag = np.where(a == 0.0, 0.0, mag)
        ang = n * np.arctan2(im, re) - t * im
    # eigenvalues that overflowed to +inf contribute nothing
    mag = np.where(re == np.inf, 0.0, mag)
    ang = np.where(re == np.inf, 0.0, ang)
    real_axis = ang == 0.0
    vr = np.where(real_axis, mag, mag * np.cos(ang))
    vi = np.where(real_axis, 0.0, mag * np.sin(ang))
    return vr, vi, mag


def _chunk_rows(x, chunk):
    size = x.shape[0]
    nchunks = (size + chunk - 1) // chunk
    padded = np.zeros(nchunks * chunk)
    padded[:size] = x
    return padded.reshape(nchunks, chunk).sum(axis=1)


def _heat_chunks_numpy(re, im, w, t, n, shift, chunk=CHUNK):
    vr, vi, nm = _heat_terms_numpy(re, im, w, t, n, shift)
    return np.stack([_chunk_rows(vr, chunk), _chunk_rows(vi, chunk), _chunk_rows(nm, chunk)], axis=1)


def _power_chunks_numpy(re, im, w, q, shift, chunk=CHUNK):
    terms = w * np.power(shift + np.hypot(re, im), -q)
    return _chunk_rows(terms, chunk)


def _sieve_numpy(limit):
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    size = (limit - 1) // 2  # index i <-> odd number 2i + 3
    flags = np.ones(size, dtype=np.bool_)
    i = 0
    while True:
        p = 2 * i + 3
        if p * p > limit:
            break
        if flags[i]:
            flags[(p * p - 3) // 2 :: p] = False
        i += 1
    odd = 2 * np.flatnonzero(flags).astype(np.int64) + 3
    return np.concatenate([np.array([2], dtype=np.int64), odd])


# ---------------------------------------------------------------- numba path

HAS_JIT = HAS_NUMBA

if HAS_JIT:

    @numba.njit(parallel=True, cache=True)
    def _heat_chunks_jit(re, im, w, t, n, shift, chunk=CHUNK):
        size = re.shape[0]
        nchunks = (size + chunk - 1) // chunk
        out = np.zeros((nchunks, 3))
        for c in numba.prange(nchunks):
            i0 = c * chunk
            i1 = min(i0 + chunk, size)
            sr = 0.0
            cr = 0.0
            si = 0.0
            ci = 0.0
            sn = 0.0
            cn = 0.0
            for i in range(i0, i1):
                x = re[i]
                y = im[i]
                if x == math.inf:
                    continue
                if n == 0:
                    mag = w[i] * math.exp(-t * (x - shift))
                    ang = -t * y
                else:
                    a = math.hypot(x, y)
                    if a == 0.0:
                        continue
                    la = n * math.log(a)
                    if abs(la) < _LOG_OVERFLOW:
                        mag = w[i] * a ** n * math.exp(-t * (x - shift))
                    else:
                        mag = w[i] * math.exp(la - t * (x - shift))
                    ang = n * math.atan2(y, x) - t * y
                if ang == 0.0:
                    vr = mag
                    vi = 0.0
                else:
                    vr = mag * math.cos(ang)
                    vi = mag * math.sin(ang)
                yv = vr - cr
                tv = sr + yv
                cr = (tv - sr) - yv
                sr = tv
                yv = vi - ci
                tv = si + yv
                ci = (tv - si) - yv
                si = tv
                yv = mag - cn
                tv = sn + yv
                cn = (tv - sn) - yv
                sn = tv
            out[c, 0] = sr
            out[c, 1] = si
            out[c, 2] = sn
        return out

    @numba.njit(parallel=True, cache=True)
    def _power_chunks_jit(re, im, w, q, shift, chunk=CHUNK):
        size = re.shape[0]
        nchunks = (size + chunk - 1) // chunk
        out = np.zeros(nchunks)
        for c in numba.prange(nchunks):
            i0 = c * chunk
            i1 = min(i0 + chunk, size)
            s = 0.0
            comp = 0.0
            for i in range(i0, i1):
                term = w[i] * (shift + math.hypot(re[i], im[i])) ** (-q)
                yv = term - comp
                tv = s + yv
                comp = (tv - s) - yv
                s = tv
            out[c] = s
        return out

    @numba.njit(cache=True)
    def _sieve_jit(limit):
        if limit < 2:
            return np.zeros(0, dtype=np.int64)
        size = (limit - 1) // 2
        flags = np.ones(size, dtype=np.bool_)
        i = 0
        while True:
            p = 2 * i + 3
            if p * p > limit:
                break
            if flags[i]:
                for j in range((p * p - 3) // 2, size, p):
                    flags[j] = False
            i += 1
        count = 1
        for j in range(size):
            if flags[j]:
                count += 1
        out = np.empty(count, dtype=np.int64)
        out[0] = 2
        k = 1
        for j in range(size):
            if flags[j]:
                out[k] = 2 * j + 3
                k += 1
        return out


if USE_JIT:
    heat_chunks = _heat_chunks_jit
    power_chunks = _power_chunks_jit
    sieve = _sieve_jit
else:
    heat_chunks = _heat_chunks_numpy
    power_chunks = _power_chunks_numpy
    sieve = _sieve_numpy


def heat_chunk_sums(re, im, w, t: float, n: int, shift: float) -> np.ndarray:
    """Per-chunk sums of (Re, Im, |.|) of ``w * lam**n * exp(-t (lam - shift))``."""
    return heat_chunks(
        np.ascontiguousarray(re, dtype=np.float64),
        np.ascontiguousarray(im, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
        float(t),
        int(n),
        float(shift),
        CHUNK,
    )


def power_chunk_sums(re, im, w, q: float, shift: float) -> np.ndarray:
    """Per-chunk sums of ``w * (shift + |lam|) ** (-q)``."""
    return power_chunks(
        np.ascontiguousarray(re, dtype=np.float64),
        np.ascontiguousarray(im, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
        float(q),
        float(shift),
        CHUNK,
    )


def sieve_primes(limit: int) -> np.ndarray:
    return sieve(int(limit))
