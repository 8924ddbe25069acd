import math
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy import special

from spectral_asymptotics.asymderiv import (
    cauchy_bound_check,
    derivative_asymptotics_check,
    fd_derivative_check,
    g_derivative,
    pochhammer_identity,
    ratio_limit_series,
)
from spectral_asymptotics.errors import DomainError, UnsupportedOrderError, UsageError
from spectral_asymptotics.heattrace import trace_power
from spectral_asymptotics.rvfun import LogMode, RVSpec, rv_eval
from spectral_asymptotics.spectrum import Explicit, build_spectrum
from spectral_asymptotics.tauberian import karamata_forward

PRIME_LAW = RVSpec(p=1, r=-1, k=1, log_mode=LogMode.RAW)
LINEAR = build_spectrum("power_law:p=1")


class TestGDerivative:
    @pytest.mark.parametrize("p", [0.5, 1.0, 2.7])
    def test_power(self, p):
        spec = RVSpec(p=p)
        for t in (0.01, 0.3, 2.0):
            assert g_derivative(spec, t, 1) == pytest.approx(-p * t ** (-p - 1), rel=1e-13)
            assert g_derivative(spec, t, 2) == pytest.approx(p * (p + 1) * t ** (-p - 2), rel=1e-13)

    def test_prime_law(self):
        for t in (1e-4, 1e-2, 0.2):
            lt = math.log(t)
            assert g_derivative(PRIME_LAW, t, 1) == pytest.approx((1 + lt) / (t * lt) ** 2, rel=1e-12)

    @pytest.mark.parametrize("spec", [RVSpec(p=1, r=2, k=1), RVSpec(p=2.5, r=-1, k=2), PRIME_LAW, RVSpec(p=0.4)])
    @pytest.mark.parametrize("t", [1e-3, 0.05, 0.4])
    def test_finite_differences(self, spec, t):
        g = lambda x: float(rv_eval(spec, 1.0 / x))  # noqa: E731
        h = 1e-3 * t
        fd = {
            1: (g(t + h) - g(t - h)) / (2 * h),
            2: (g(t + h) - 2 * g(t) + g(t - h)) / h**2,
        }
        h3 = 1e-3 * t
        fd[3] = (g(t + 2 * h3) - 2 * g(t + h3) + 2 * g(t - h3) - g(t - 2 * h3)) / (2 * h3**3)
        for n, ref in fd.items():
            assert g_derivative(spec, t, n) == pytest.approx(ref, rel=1e-5)

    def test_order_limits(self):
        with pytest.raises(UnsupportedOrderError):
            g_derivative(RVSpec(p=1), 0.1, 9)
        assert g_derivative(RVSpec(p=1), 0.5, 0) == 2.0


class TestRatioLimit:
    def test_order_zero(self):
        assert np.allclose(ratio_limit_series(RVSpec(p=1.3, r=1, k=1), 0, [0.1, 0.01]), 1.0)

    def test_pure_power_exact(self):
        for p, n in ((1.0, 2), (2.5, 3), (0.7, 5)):
            series = ratio_limit_series(RVSpec(p=p), n, [0.5, 1e-3, 1e-6])
            assert np.allclose(series, special.poch(p, n), rtol=1e-12)

    def test_log_law_converges(self):
        target = 2.5 * 3.5 * 4.5
        assert target == 39.375
        series = ratio_limit_series(RVSpec(p=2.5, r=1, k=1), 3, [1e-2, 1e-4, 1e-8, 1e-12, 1e-30])
        dev = np.abs(series - target)
        assert np.all(np.diff(dev) < 0)
        assert dev[-1] / target < 0.03

    def test_errors(self):
        with pytest.raises(DomainError):
            ratio_limit_series(RVSpec(p=0, r=1, k=1), 1, [0.1])
        with pytest.raises(UsageError):
            ratio_limit_series(RVSpec(p=1), 1, [0.1, 0.2])


class TestPochhammer:
    def test_examples(self):
        assert pochhammer_identity(1, Fraction(7, 3)) == (Fraction(7, 3), Fraction(7, 3))
        lhs, rhs = pochhammer_identity(2, Fraction(5, 4))
        p = Fraction(5, 4)
        assert lhs == rhs == 2 * p + p * (p - 1) == p * (p + 1)
        lhs, rhs = pochhammer_identity(5, 2.5)
        assert lhs == pytest.approx(1407.65625, rel=1e-15) and rhs == pytest.approx(1407.65625, rel=1e-15)
        assert pochhammer_identity(5, Fraction(5, 2)) == (Fraction(140765625, 100000), Fraction(140765625, 100000))

    def test_exact_random_rationals(self):
        rng = random.Random(314)
        for _ in range(20):
            p = Fraction(rng.randint(-80, 80), rng.randint(1, 16))
            for n in range(1, 11):
                lhs, rhs = pochhammer_identity(n, p)
                assert isinstance(lhs, Fraction) and lhs == rhs

    def test_float_path(self):
        rng = np.random.default_rng(5)
        for p in rng.uniform(0.1, 10, 25):
            for n in range(1, 21):
                lhs, rhs = pochhammer_identity(n, float(p))
                assert abs(lhs - rhs) <= 1e-9 * abs(rhs)

    def test_order_cap(self):
        with pytest.raises(UnsupportedOrderError):
            pochhammer_identity(21, 1.0)
        with pytest.raises(UsageError):
            pochhammer_identity(0, 1.0)


class TestFiniteDifference:
    @pytest.mark.parametrize("t", [0.3, 0.5])
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_linear(self, t, n):
        chk = fd_derivative_check(LINEAR, t, n)
        assert chk.rel_err <= (1e-6 if n <= 2 else 5e-5)
        assert chk.rel_err == abs(chk.analytic - chk.numeric) / abs(chk.analytic)

    def test_explicit_step(self):
        chk = fd_derivative_check(LINEAR, 0.5, 1, h=5e-5)
        assert chk.analytic == pytest.approx(-math.exp(0.5) / math.expm1(0.5) ** 2, rel=1e-12)
        assert chk.rel_err <= 1e-6

    def test_zero_eigenvalue(self):
        chk = fd_derivative_check(Explicit(((0.0,),)), 0.7, 1)
        assert chk.analytic == 0 and chk.numeric == 0

    def test_primes(self):
        assert fd_derivative_check("primes:limit=1000000", 0.01, 1, h=1e-6).rel_err <= 1e-4

    def test_step_guard(self):
        with pytest.raises(UsageError):
            fd_derivative_check(LINEAR, 0.5, 1, h=0.06)
        with pytest.raises(DomainError):
            fd_derivative_check("triangular_complex", 0.5, 1)

    def test_alternating_signs(self):
        # F^(n) = (-1)^n Theta_n, so Theta_n > 0 is the sign pattern
        for desc in ("power_law:p=1", "primes:limit=100000", "log_law:r=2"):
            for n in range(0, 6):
                for t in (0.01, 0.5):
                    assert trace_power(build_spectrum(desc), t, n).value.real > 0


class TestCauchy:
    def test_linear(self):
        rep = cauchy_bound_check(LINEAR, [0.1], 1, math.pi / 6)
        assert rep.c_n == pytest.approx(2.0) and rep.a == pytest.approx(0.5)
        closed_lhs = math.exp(0.1) / math.expm1(0.1) ** 2
        assert rep.lhs[0] == pytest.approx(closed_lhs, rel=1e-12)
        assert rep.rhs[0] == pytest.approx(2 / 0.1 / math.expm1(0.05), rel=1e-12)
        assert rep.all_hold

    def test_single_eigenvalue_scan(self):
        ts = np.linspace(0.01, 1.0, 100)
        for theta in (0.1, math.pi / 6, math.pi / 3, 1.5):
            rep = cauchy_bound_check(Explicit(((1.0,),)), ts, 2, theta)
            sin = math.sin(theta)
            scalar = np.exp(-ts) <= 2 * sin**-2 * ts**-2 * np.exp(-(1 - sin) * ts)
            assert rep.all_hold and np.all(scalar)

    def test_power_law_grid(self):
        rep = cauchy_bound_check("power_law:p=2", np.geomspace(1e-4, 1.0, 30), 3, math.pi / 4)
        assert rep.all_hold

    def test_domain(self):
        with pytest.raises(DomainError):
            cauchy_bound_check(LINEAR, [0.1], 1, math.pi / 2)


class TestDerivativeAsymptotics:
    def test_linear(self):
        ts = [1e-1, 1e-3, 1e-5]
        ratios = derivative_asymptotics_check(LINEAR, RVSpec(p=1), 1, ts)
        closed = [math.exp(t) / math.expm1(t) ** 2 * t**2 for t in ts]
        assert np.allclose(ratios, closed, rtol=1e-11)
        assert abs(ratios[-1] - 1) < 1e-4

    def test_primes(self):
        s = build_spectrum("primes:limit=10000000")
        t = 1e-4
        ratio = derivative_asymptotics_check(s, PRIME_LAW, 1, [t])[0]
        assert abs(ratio - 1) <= 0.2
        direct = trace_power(s, t, 1).value.real / abs(g_derivative(PRIME_LAW, t, 1))
        assert abs(direct - 1) <= 0.2

    def test_order_zero_is_forward(self):
        ts = [1e-2, 1e-4]
        # the law of Theta_0 carries the amplitude Gamma(1+p)
        a = derivative_asymptotics_check("power_law:p=2", RVSpec(C=2.0, p=2), 0, ts)
        b = karamata_forward("power_law:p=2", RVSpec(p=2), ts) / special.gamma(3)
        assert np.allclose(a, b, rtol=1e-14)

    def test_nonholo_ratio_data(self):
        # trace norm of A e^{-tA} against the self-adjoint prediction grows like 1/t
        ts = [1e-1, 1e-2, 1e-3]
        s = build_spectrum("nonholo")
        ratios = [trace_power(s, t, 1).norm_value * t**2 for t in ts]
        assert np.all(np.diff(ratios) > 0)
