import cmath
import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import special

from spectral_asymptotics.errors import BudgetError, DivergenceError, DomainError
from spectral_asymptotics.heattrace import (
    cavalieri_check,
    heat_trace,
    imaginary_defect,
    integral_proxy,
    mellin_power,
    power_sum,
    trace_norm_power,
    trace_power,
    upper_gamma,
)
from spectral_asymptotics.rvfun import RVSpec
from spectral_asymptotics.spectrum import Explicit, build_spectrum

LINEAR = build_spectrum("power_law:p=1")
TRI = build_spectrum("triangular_complex")


class TestTracePower:
    @pytest.mark.parametrize("t", [0.01, 0.1, 1.0, 3.0])
    def test_geometric(self, t):
        tv = trace_power(LINEAR, t, 0)
        assert tv.value.real == pytest.approx(1 / math.expm1(t), rel=1e-12)
        assert tv.value.imag == 0.0
        assert tv.tail_bound <= 1e-12 * tv.norm_value and tv.certified

    def test_examples(self):
        assert heat_trace(LINEAR, 0.1) == pytest.approx(1 / math.expm1(0.1), rel=1e-13)
        # the quoted short form 9.5083306 is good to about 1.5e-6 only
        assert heat_trace(LINEAR, 0.1) == pytest.approx(9.5083306, abs=2e-6)
        assert trace_norm_power(LINEAR, 1.0, 0) == pytest.approx(0.5819767, abs=1e-7)
        for t in (0.3, 2.0):
            assert heat_trace(Explicit(((0.0,),)), t) == 1.0

    @pytest.mark.parametrize("c", [1.0, -2.0, 0.25])
    def test_complex_line(self, c):
        s = build_spectrum(f"complex_line:c={c}")
        for t in (0.05, 0.5):
            ref = 1 / (cmath.exp(complex(1, c) * t) - 1)
            got = trace_power(s, t, 0).value
            assert abs(got - ref) <= 1e-12 * abs(ref)

    @pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
    def test_triangular(self, t):
        tv = trace_power(TRI, t, 0)
        assert tv.norm_value == pytest.approx((2 * math.sinh(t / 2)) ** -2, rel=1e-10)
        z = complex(1, 1) * t
        ref = cmath.exp(-z) / (1 - cmath.exp(-z)) ** 2  # sum k e^{-kz}
        assert abs(tv.value - ref) <= 1e-10 * abs(ref)

    def test_triangular_small_t(self):
        tv = trace_power(TRI, 0.01, 0)
        assert tv.value.real == pytest.approx(-1 / 12, abs=1e-3)
        assert tv.value.imag * 0.01**2 == pytest.approx(-0.5, abs=1e-3)

    def test_first_derivative_geometric(self):
        for t in (0.01, 0.1, 1.0):
            assert trace_power(LINEAR, t, 1).value.real == pytest.approx(math.exp(t) / math.expm1(t) ** 2, rel=1e-11)

    @pytest.mark.parametrize("t", [0.05, 0.01, 0.002])
    def test_nonholo_norm(self, t):
        s = build_spectrum("nonholo")
        norm = trace_norm_power(s, t, 1)
        assert 2 * t**-3 < norm < 2 * math.sqrt(2) * t**-3

    def test_negative_power(self):
        # sum e^{-tk}/k = -ln(1 - e^{-t})
        for t in (0.5, 1e-3):
            assert trace_power(LINEAR, t, -1).value.real == pytest.approx(-math.log(-math.expm1(-t)), rel=1e-12)

    def test_negative_real_parts_shifted(self):
        s = Explicit(((-2.0, 0.0, 1), (0.0, 0.0, 3), (1.5, 0.5, 2)))
        t, n = 0.7, 2
        ref = math.exp(1.4) * 4 + 2 * complex(1.5, 0.5) ** n * cmath.exp(-t * complex(1.5, 0.5))
        tv = trace_power(s, t, n)
        assert abs(tv.value - ref) <= 1e-14 * abs(ref)
        assert tv.tail_bound == 0.0

    def test_euler_maclaurin_matches_direct(self):
        s = build_spectrum("power_law:p=2")
        em = trace_power(s, 0.01, 0)
        assert em.method == "euler_maclaurin"
        direct = trace_power(s, 0.01, 0, cutoff=1e4)
        assert direct.method == "direct"
        assert abs(em.value.real - direct.value.real) <= em.tail_bound + direct.tail_bound + 1e-13 * em.norm_value

    def test_euler_maclaurin_closed_form(self):
        for t in (1e-5, 1e-6):
            tv = trace_power(LINEAR, t, 1)
            assert tv.method == "euler_maclaurin"
            assert tv.value.real == pytest.approx(math.exp(t) / math.expm1(t) ** 2, rel=1e-11)

    def test_errors(self):
        with pytest.raises(DomainError):
            trace_power(LINEAR, 0.0, 0)
        with pytest.raises(DomainError):
            trace_power(LINEAR, -1.0, 0)
        with pytest.raises(DomainError):
            trace_power(Explicit(((0.0,), (1.0,))), 1.0, -1)
        with pytest.raises(BudgetError) as info:
            trace_power(build_spectrum("primes:limit=1000"), 1e-3, 0)
        assert info.value.best_bound > 0


class TestInvariants:
    def test_monotone_divergence(self):
        ts = np.geomspace(1.0, 1e-4, 50)
        for desc in ("power_law:p=0.5", "primes:limit=10000000", "log_law:r=3"):
            vals = [heat_trace(build_spectrum(desc), t) for t in ts]
            assert np.all(np.diff(vals) > 0)
        vals = [heat_trace(LINEAR, t) for t in ts]
        assert vals[-1] > 9999

    @pytest.mark.parametrize("desc", ["triangular_complex", "nonholo", "complex_line:c=3", "power_law:p=1.5"])
    @pytest.mark.parametrize("n", [0, 1, 2, -1])
    def test_norm_dominates_value(self, desc, n):
        s = build_spectrum(desc)
        for t in (0.003, 0.1, 1.0):
            tv = trace_power(s, t, n)
            assert abs(tv.value) <= tv.norm_value * (1 + 1e-14)

    @pytest.mark.parametrize("desc", ["power_law:p=1", "primes:limit=1000000", "triangular_complex", "log_law:r=2"])
    def test_tail_certificate(self, desc):
        s = build_spectrum(desc)
        t = 0.05
        base = trace_power(s, t, 1, cutoff=300.0)
        wide = trace_power(s, t, 1, cutoff=600.0)
        assert abs(wide.value - base.value) <= base.tail_bound
        assert base.tail_bound > 0

    def test_semigroup_consistency(self):
        t1, t2 = 0.13, 0.29
        k = np.arange(1, 5000, dtype=np.float64)
        ref = math.fsum(2 * np.exp(-(t1 + t2) * k))
        doubled = Explicit.from_arrays(k, None, np.full(k.size, 2.0))
        assert heat_trace(doubled, t1 + t2) == pytest.approx(ref, rel=1e-14)

    @pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
    def test_sandwich(self, p):
        s = build_spectrum(f"power_law:p={p}")
        for t in np.geomspace(1e-4, 1.0, 25):
            assert abs(heat_trace(s, t) - special.gamma(1 + p) * t**-p) <= 1.0


class TestUpperGamma:
    @pytest.mark.parametrize("a", [2.5, 1.0, 0.3, 0.0, -0.5, -1.0, -2.7, -3.0])
    @pytest.mark.parametrize("z", [0.2, 1.0, 7.5])
    def test_against_quadrature(self, a, z):
        ref, _ = sp_integrate.quad(lambda u: u ** (a - 1) * math.exp(-u), z, np.inf, epsabs=0, epsrel=1e-13)
        assert upper_gamma(a, z) == pytest.approx(ref, rel=1e-10)

    def test_recurrence(self):
        for a in (-2.3, -0.4, 0.7, 3.1):
            z = 1.7
            assert upper_gamma(a + 1, z) == pytest.approx(a * upper_gamma(a, z) + z**a * math.exp(-z), rel=1e-12)


class TestPowerSum:
    @pytest.mark.parametrize("q", [2.0, 3.0, 1.01, 1.5])
    def test_zeta(self, q):
        ps = power_sum(LINEAR, q)
        ref = float(special.zeta(q))
        assert abs(ps.value - ref) <= ps.tail_bound + 1e-13 * ref
        assert abs(ps.value - ref) <= 1e-10 * ref

    def test_shifted_basel(self):
        ps = power_sum(LINEAR, 2.0, shift=1.0)
        assert ps.value == pytest.approx(math.pi**2 / 6 - 1, rel=1e-10)

    def test_hurwitz_general_power_law(self):
        # lam_k = (k/C)^(1/p) with p=0.5: sum (k/C)^(-2q)
        s = build_spectrum("power_law:p=0.5,C=2")
        ps = power_sum(s, 1.0)
        assert ps.value == pytest.approx(4 * special.zeta(2.0), rel=1e-10)

    def test_divergence(self):
        with pytest.raises(DivergenceError):
            power_sum(LINEAR, 1.0)
        with pytest.raises(DivergenceError):
            power_sum(TRI, 2.0)

    def test_finite_exact(self):
        s = Explicit(((1.0, 0.0, 2), (3.0, 4.0, 1)))
        assert power_sum(s, 2.0, shift=1.0).value == pytest.approx(2 / 4 + 1 / 36, rel=1e-15)


class TestDefect:
    def test_real_spectrum_zero(self):
        assert imaginary_defect(LINEAR, 0.3).d == 0

    @pytest.mark.parametrize("t", [0.5, 0.05, 1.5])
    def test_complex_line_holds(self, t):
        rep = imaginary_defect(build_spectrum("complex_line:c=1"), t)
        z = complex(1, 1) * t
        direct = 1 / math.expm1(t) - 1 / (cmath.exp(z) - 1)
        assert abs(rep.d - direct) <= 1e-12 * abs(direct)
        assert rep.holds

    def test_triangular(self):
        rep = imaginary_defect(TRI, 0.01)
        assert rep.holds
        assert rep.bound >= abs(rep.d)


class TestIntegralProxy:
    @pytest.mark.parametrize("t", [0.01, 0.5, 2.0])
    def test_linear(self, t):
        assert integral_proxy(lambda x: x, t) == pytest.approx(1 / t, rel=1e-9)

    @pytest.mark.parametrize("p", [0.5, 2.0, 3.5])
    def test_power(self, p):
        t = 0.01
        got = integral_proxy(lambda x: x ** (1 / p), t)
        assert got == pytest.approx(special.gamma(1 + p) * t**-p, rel=1e-8)
        assert integral_proxy(RVSpec(p=1 / p), t) == pytest.approx(got, rel=1e-9)

    def test_gaussian(self):
        assert integral_proxy(lambda x: x * x, 1.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-9)

    def test_non_decaying(self):
        with pytest.raises(DivergenceError):
            integral_proxy(lambda x: np.zeros_like(x), 1.0)


class TestCavalieri:
    def test_single_eigenvalue(self):
        for t in (0.2, 1.0, 3.0):
            rep = cavalieri_check(Explicit(((1.0,),)), t)
            assert rep.lhs == pytest.approx(math.exp(-t), rel=1e-14)
            assert rep.rhs == pytest.approx(math.exp(-t), rel=1e-12)

    def test_linear(self):
        assert cavalieri_check(LINEAR, 0.5).rel_gap <= 1e-8

    def test_primes(self):
        assert cavalieri_check(build_spectrum("primes:limit=100000"), 0.01).rel_gap <= 1e-6


class TestMellin:
    def test_single_zero(self):
        rep = mellin_power(Explicit(((0.0,),)), 3.0, shift=1.0)
        assert rep.series == 1.0
        assert rep.integral == pytest.approx(1.0, rel=1e-9)

    def test_basel(self):
        rep = mellin_power(LINEAR, 2.0, shift=1.0)
        ref = math.pi**2 / 6 - 1
        assert rep.series == pytest.approx(ref, rel=1e-6)
        assert rep.integral == pytest.approx(ref, rel=1e-6)
        assert rep.rel_gap <= 1e-6

    def test_divergent(self):
        with pytest.raises(DivergenceError):
            mellin_power(LINEAR, 1.0, shift=1.0)
