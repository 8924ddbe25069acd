import os

import pytest
from hypothesis import settings

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) the JIT kernels once, outside any timed test."""
    from spectral_asymptotics import heattrace
    from spectral_asymptotics.spectrum import build_spectrum

    s = build_spectrum("power_law:p=1")
    heattrace.trace_power(s, 0.5, 0)
    heattrace.trace_power(build_spectrum("triangular_complex"), 0.5, 1)
    heattrace.power_sum(s, 2.0)
    build_spectrum("primes:limit=1000").counting(100)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
