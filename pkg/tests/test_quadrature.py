import math

import numpy as np
import pytest

from spectral_asymptotics.errors import DivergenceError
from spectral_asymptotics.quadrature import GAUSS_W, KRONROD_W, NODES, gk15, integrate


def test_rule_weights():
    assert KRONROD_W.sum() == pytest.approx(2.0, rel=1e-15)
    assert GAUSS_W.sum() == pytest.approx(2.0, rel=1e-15)
    assert np.all(np.diff(NODES) > 0)


def test_exact_for_polynomials():
    # K15 integrates degree <= 22 exactly on [-1, 1]
    for deg in range(0, 23, 2):
        val, _ = gk15(lambda x, d=deg: x**d, -1.0, 1.0)
        assert val[0] == pytest.approx(2.0 / (deg + 1), rel=1e-13)


@pytest.mark.parametrize(
    "f, pts, exact",
    [
        (np.exp, [0.0, 3.0], math.e**3 - 1),
        (lambda x: 1 / (1 + x * x), [-50.0, 0.0, 50.0], 2 * math.atan(50.0)),
        (lambda x: np.sqrt(x), [0.0, 1.0], 2 / 3),
        (lambda x: np.log(x), [1e-12, 1.0], -1.0 + 1e-12 - 1e-12 * math.log(1e-12)),
        (lambda x: np.exp(-x) * np.sin(10 * x), [0.0, 40.0], 10 / 101),
    ],
)
def test_integrals(f, pts, exact):
    val, err = integrate(f, pts, rtol=1e-11)
    assert val == pytest.approx(exact, rel=1e-9, abs=1e-12)
    assert err <= 1e-9 * max(abs(exact), 1.0)


def test_step_function_with_breakpoints():
    val, _ = integrate(lambda x: np.floor(x), np.arange(0.0, 11.0), rtol=1e-13)
    assert val == pytest.approx(45.0, rel=1e-13)


def test_non_finite_rejected():
    with pytest.raises(DivergenceError):
        integrate(lambda x: np.full_like(x, np.inf), [0.0, 1.0])


def test_empty_interval():
    assert integrate(np.exp, [1.0, 1.0]) == (0.0, 0.0)
    with pytest.raises(ValueError):
        integrate(np.exp, [1.0])
