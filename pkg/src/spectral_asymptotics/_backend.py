"""Kernel backend selection.

``SPECTRAL_ASYMPTOTICS_JIT=0`` forces the pure-numpy kernels even when numba is
installed.  ``SPECTRAL_ASYMPTOTICS_THREADS`` caps the numba thread pool.
"""

from __future__ import annotations

import os

JIT_ENV = "SPECTRAL_ASYMPTOTICS_JIT"
THREADS_ENV = "SPECTRAL_ASYMPTOTICS_THREADS"


def _jit_requested() -> bool:
    return os.environ.get(JIT_ENV, "1").strip().lower() not in {"0", "false", "no", "off"}


# the TBB layer on this platform is too old; workqueue is always present
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_JIT = HAS_NUMBA and _jit_requested()


def requested_threads() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV} must be an integer >= 1, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be an integer >= 1, got {raw!r}")
    return value


def apply_thread_cap() -> int:
    """Apply the env thread cap to numba and return the thread count in effect."""
    cap = requested_threads()
    if not USE_JIT:
        return 1
    available = numba.config.NUMBA_NUM_THREADS
    n = available if cap is None else min(cap, available)
    numba.set_num_threads(n)
    return n


def backend_name() -> str:
    return "numba" if USE_JIT else "numpy"
