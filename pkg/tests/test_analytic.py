import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EPS_GRID_40
from poisson_gmi.analytic import (
    bound_point,
    digamma,
    exact_mi_direct,
    exact_mi_gamma,
    gmi_closed_form,
    gmi_evaluation,
    gmi_terms,
    lapidoth_moser_bound,
    lm_cancellation_s,
    lm_closed_form,
    lm_rate_check,
    output_entropy,
    output_marginal,
    marginal_truncation,
    s_hat,
    scan_gmi,
    scan_gmi_grid,
    theorem_rate,
    weighted_metric_denominator,
)
from poisson_gmi.channel import DecoderConfig, GammaInput, gamma_density, poisson_pmf
from poisson_gmi.quadrature import integrate_adaptive


def euler_gamma_oracle(digits=30):
    """Euler-Mascheroni constant from H_n - log n with Euler-Maclaurin terms."""
    with mpmath.workdps(digits + 10):
        n = 1000
        h = mpmath.fsum(mpmath.mpf(1) / k for k in range(1, n + 1))
        n = mpmath.mpf(n)
        corr = (-1 / (2 * n) + 1 / (12 * n ** 2) - 1 / (120 * n ** 4)
                + 1 / (252 * n ** 6) - 1 / (240 * n ** 8))
        return h - mpmath.log(n) + corr


EULER = float(euler_gamma_oracle())


class TestGmi:
    def test_theorem_point(self):
        assert gmi_closed_form(1.0, 2.0, 0.25) == pytest.approx(0.5 * math.log(2), abs=1e-15)
        assert gmi_closed_form(1.0, 2.0, 0.25) == pytest.approx(0.3465736, abs=1e-7)

    def test_zero_tilt(self):
        assert gmi_closed_form(3.0, 1.5, 0.0) == 0.0

    def test_a_one_point(self):
        # -1.2 + sqrt(1.44) + log(1.8)/2
        lin, root, log_term = gmi_terms(1.0, 1.0, 0.4)
        assert lin == pytest.approx(-1.2)
        assert root == pytest.approx(1.2)
        assert gmi_closed_form(1.0, 1.0, 0.4) == pytest.approx(0.5 * math.log(1.8), abs=1e-15)
        assert gmi_closed_form(1.0, 1.0, 0.4) == pytest.approx(0.2939, abs=1e-4)

    def test_evaluation_defaults(self):
        g = gmi_evaluation(1.0)
        assert (g.a, g.s) == (2.0, 0.25)
        assert g.value == pytest.approx(0.5 * math.log(2))
        with pytest.raises(ValueError):
            gmi_evaluation(0.0)

    def test_gmi_matches_expectation_by_summation(self):
        """E[s log q - log denominator] by quadrature over x and summation over y."""
        eps, a, s = 0.7, 1.9, 0.3
        cfg = DecoderConfig(a, s)
        inp = GammaInput(eps)

        def inner(x):
            y = np.arange(200)[:, None]
            w = poisson_pmf(y, x[None, :])
            per = s * (-a * x[None, :] - y ** 2 / x[None, :]) - np.log(
                weighted_metric_denominator(y, eps, cfg))
            return gamma_density(x, inp) * np.sum(w * per, axis=0)

        r = integrate_adaptive(inner, 0, np.inf, rel_tol=1e-11, points=[eps, 10 * eps])
        assert r.value == pytest.approx(gmi_closed_form(eps, a, s), rel=1e-9)


class TestSHat:
    def test_value(self):
        assert s_hat(1.0, 2.0) == 0.25

    def test_formula_exact_rational(self):
        """2 a s_hat = 1 at a = 1 + 1/eps, in exact arithmetic."""
        for eps in [Fraction(1, 100), Fraction(1, 3), Fraction(1), Fraction(7, 2), Fraction(100)]:
            a = 1 + 1 / eps
            sh = 2 * eps / ((a - 1) ** 2 * eps ** 2 + 2 * eps * (a + 1) + 1)
            assert 2 * a * sh == 1
            assert 2 * a * eps * sh == eps

    @pytest.mark.parametrize("eps", EPS_GRID_40)
    def test_two_a_s_hat_is_one(self, eps):
        a = 1 + 1 / eps
        assert abs(2 * a * s_hat(eps, a) - 1) < 1e-14

    @pytest.mark.parametrize("eps", EPS_GRID_40)
    def test_linear_terms_cancel(self, eps):
        a = 1 + 1 / eps
        lin, root, _ = gmi_terms(eps, a, s_hat(eps, a))
        assert abs(lin + root) < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(eps=st.floats(1e-3, 1e3), a=st.floats(0.05, 50))
    def test_cancellation_any_a(self, eps, a):
        lin, root, _ = gmi_terms(eps, a, s_hat(eps, a))
        assert abs(lin + root) <= 1e-12 * max(1.0, abs(lin))

    @pytest.mark.parametrize("eps", EPS_GRID_40)
    def test_theorem_identity(self, eps):
        a = 1 + 1 / eps
        assert abs(gmi_closed_form(eps, a, s_hat(eps, a)) - theorem_rate(eps)) < 1e-12

    @pytest.mark.parametrize("eps", EPS_GRID_40[::4])
    def test_scan_is_no_worse_than_s_hat(self, eps):
        scan = scan_gmi(eps)
        assert scan.value_best >= scan.value_at_s_hat - 1e-12
        assert scan.s_hat == pytest.approx(s_hat(eps, 1 + 1 / eps))

    def test_grid_scan_shape(self):
        g = scan_gmi_grid(1.0, [1.0, 2.0, 3.0], np.linspace(0.01, 1, 5))
        assert g.shape == (3, 5)
        assert g[1, 0] == pytest.approx(gmi_closed_form(1.0, 2.0, 0.01))


class TestRates:
    def test_theorem_rate(self):
        assert theorem_rate(0.0) == 0.0
        assert theorem_rate(math.e ** 2 - 1) == pytest.approx(1.0, abs=1e-15)
        assert theorem_rate(1.0) == pytest.approx(0.3465736, abs=1e-7)

    def test_lapidoth_moser_values(self):
        direct = math.log(4) - 1 - math.sqrt(math.pi / 24)
        assert lapidoth_moser_bound(1.0) == pytest.approx(direct, abs=1e-15)
        assert lapidoth_moser_bound(1.0) == pytest.approx(0.024493, abs=1e-6)
        assert lapidoth_moser_bound(0.01) < 0
        assert lapidoth_moser_bound(10.0) == pytest.approx(1.0853, abs=1e-4)
        assert lapidoth_moser_bound(10.0) < theorem_rate(10.0)
        assert theorem_rate(10.0) == pytest.approx(1.1989, abs=1e-4)

    def test_lapidoth_moser_literal_form(self):
        for eps in [0.05, 0.5, 2.0, 40.0]:
            lit = math.log((1 + 1 / eps) ** (1 + eps) * math.sqrt(eps)) - (
                1 + math.sqrt(math.pi / (24 * eps)))
            assert lapidoth_moser_bound(eps) == pytest.approx(lit, rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("eps", EPS_GRID_40)
    def test_theorem_rate_beats_lapidoth_moser(self, eps):
        assert theorem_rate(eps) >= lapidoth_moser_bound(eps)

    def test_bound_point(self):
        p = bound_point(1.0, "lapidoth-moser")
        assert p.bound_id == "lapidoth-moser" and p.eps_s == 1.0
        with pytest.raises(ValueError):
            bound_point(1.0, "nope")


class TestDenominator:
    def test_zero_output(self):
        cfg = DecoderConfig(1.3, 0.4)
        assert weighted_metric_denominator(0, 2.0, cfg) == pytest.approx(
            1 / math.sqrt(1 + 2 * 1.3 * 2.0 * 0.4))

    def test_value(self):
        v = weighted_metric_denominator(3, 1.0, DecoderConfig(2.0, 0.25))
        assert v == pytest.approx(math.exp(-3) / math.sqrt(2), rel=1e-15)
        assert v == pytest.approx(0.0352048, abs=1e-7)

    @pytest.mark.parametrize("y", [0, 2, 15])
    @pytest.mark.parametrize("eps", [0.2, 1.0, 8.0])
    @pytest.mark.parametrize("s_factor", [0.3, 1.0, 3.0])
    @pytest.mark.parametrize("w_kind", ["zero", "lm", "large"])
    def test_against_quadrature(self, y, eps, s_factor, w_kind):
        a = 1.4
        s = s_factor * s_hat(eps, a)
        w = {"zero": 0.0, "lm": s / eps, "large": 2.0}[w_kind]
        cfg = DecoderConfig(a, s, w)
        inp = GammaInput(eps)

        def f(x):
            return gamma_density(x, inp) * np.exp(-w * x - s * (a * x + y * y / x))

        # peak of exp(-beta x - s y^2 / x) sits at sqrt(s y^2 / beta)
        beta = 1 / (2 * eps) + a * s + w
        peak = math.sqrt(s * y * y / beta) if y else 1.0
        r = integrate_adaptive(f, 0, np.inf, rel_tol=1e-11, abs_tol=1e-300,
                               points=[peak / 4, peak, 4 * peak])
        assert r.converged
        assert weighted_metric_denominator(y, eps, cfg) == pytest.approx(r.value, rel=1e-8)


class TestLm:
    def test_rate_equals_theorem(self):
        assert lm_rate_check(1.0) == pytest.approx(0.3465736, abs=1e-7)

    @pytest.mark.parametrize("eps", EPS_GRID_40[::3])
    def test_rate_equals_theorem_on_grid(self, eps):
        assert lm_rate_check(eps) == pytest.approx(theorem_rate(eps), abs=1e-11)

    @pytest.mark.parametrize("eps", [0.05, 1.0, 20.0])
    def test_cancellation_point(self, eps):
        # derived analogue of s_hat: eps / (2 (1 + eps))
        assert lm_cancellation_s(eps) == pytest.approx(eps / (2 * (1 + eps)), rel=1e-11)

    def test_zero_energy_limit(self):
        assert lm_rate_check(0.0) == 0.0
        assert lm_rate_check(1e-10) == pytest.approx(0.0, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(eps=st.floats(1e-3, 1e3), s=st.floats(0.0, 10))
    def test_lm_equals_gmi_with_shifted_coefficient(self, eps, s):
        """exp(-(s/eps) x) weighting with a=1 is the GMI metric with a=1+1/eps."""
        scale = abs(gmi_terms(eps, 1 + 1 / eps, s)[0])  # rounding floor of the cancellation
        assert lm_closed_form(eps, s) == pytest.approx(
            gmi_closed_form(eps, 1 + 1 / eps, s), rel=1e-12, abs=1e-14 * max(1.0, scale))

    def test_lm_by_summation(self):
        eps, s = 2.0, 0.3
        w = s / eps
        cfg = DecoderConfig(1.0, s, w)
        inp = GammaInput(eps)

        def inner(x):
            y = np.arange(300)[:, None]
            p = poisson_pmf(y, x[None, :])
            per = (-w * x[None, :] + s * (-x[None, :] - y ** 2 / x[None, :])
                   - np.log(weighted_metric_denominator(y, eps, cfg)))
            return gamma_density(x, inp) * np.sum(p * per, axis=0)

        r = integrate_adaptive(inner, 0, np.inf, rel_tol=1e-11, points=[eps, 10 * eps])
        assert r.value == pytest.approx(lm_closed_form(eps, s), rel=1e-9)


class TestDigamma:
    @pytest.mark.parametrize("z", [0.5, 1.0, 2.5])
    def test_recurrence(self, z):
        assert digamma(z + 1) == pytest.approx(digamma(z) + 1 / z, rel=1e-14)

    def test_one(self):
        assert digamma(1.0) == pytest.approx(-EULER, rel=1e-14)
        assert digamma(1.0) == pytest.approx(-0.5772156649, abs=1e-10)

    def test_three_halves(self):
        expect = 2 - EULER - 2 * math.log(2)
        assert digamma(1.5) == pytest.approx(expect, rel=1e-13)
        assert digamma(1.5) == pytest.approx(0.0364899, abs=1e-7)

    @settings(max_examples=200, deadline=None)
    @given(z=st.floats(1e-3, 1e6))
    def test_against_mpmath(self, z):
        assert digamma(z) == pytest.approx(float(mpmath.digamma(z)), rel=1e-12, abs=1e-13)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            digamma(0.0)


class TestMarginal:
    @pytest.mark.parametrize("eps", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("nu", [0.5, 1.0, 2.0])
    def test_normalization_and_mean(self, eps, nu):
        y = np.arange(marginal_truncation(eps, nu) + 1)
        p = output_marginal(y, eps, nu)
        assert math.fsum(p) == pytest.approx(1.0, abs=1e-10)
        assert math.fsum(y * p) == pytest.approx(eps, abs=1e-9 * max(1, eps))

    def test_zero_count(self):
        assert output_marginal(0, 1.0, 0.5) == pytest.approx(math.sqrt(1 / 3), rel=1e-14)
        assert output_marginal(0, 1.0, 0.5) == pytest.approx(0.57735, abs=1e-5)

    @pytest.mark.parametrize("y", [0, 1, 4, 30])
    @pytest.mark.parametrize("nu", [0.5, 2.0])
    def test_against_quadrature(self, y, nu):
        eps = 3.0
        inp = GammaInput(eps, nu)
        r = integrate_adaptive(lambda x: gamma_density(x, inp) * poisson_pmf(y, x),
                               0, np.inf, rel_tol=1e-12, abs_tol=1e-300,
                               points=[max(y, 1) / 2, max(y, 1), 2 * max(y, 1)])
        assert output_marginal(y, eps, nu) == pytest.approx(r.value, rel=1e-10)


class TestExactMi:
    def test_zero_energy(self):
        assert exact_mi_gamma(0.0, 0.5) == 0.0
        assert exact_mi_gamma(1e-9, 0.5) == pytest.approx(0.0, abs=1e-9)
        assert exact_mi_direct(0.0, 0.5) == 0.0

    def test_exceeds_theorem_rate(self):
        assert exact_mi_gamma(1.0, 0.5) >= theorem_rate(1.0)

    @pytest.mark.parametrize("eps", [0.1, 1.0, 10.0])
    def test_oracle_agreement_half_shape(self, eps):
        assert exact_mi_gamma(eps, 0.5) == pytest.approx(exact_mi_direct(eps, 0.5), rel=1e-6)

    @pytest.mark.parametrize("eps", [0.3, 4.0])
    @pytest.mark.parametrize("nu", [0.2, 1.0, 3.5])
    def test_oracle_agreement_other_shapes(self, eps, nu):
        assert exact_mi_gamma(eps, nu) == pytest.approx(exact_mi_direct(eps, nu), rel=1e-6)

    @pytest.mark.parametrize("eps", [0.1, 1.0, 10.0])
    def test_below_output_entropy(self, eps):
        assert exact_mi_direct(eps, 0.5) <= output_entropy(eps, 0.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            exact_mi_gamma(1.0, 5.0)
        with pytest.raises(ValueError):
            exact_mi_gamma(1.0, 0.5, tol=1e-12)

    def test_full_output(self):
        v, res = exact_mi_gamma(1.0, 0.5, full_output=True)
        assert res.converged and v == exact_mi_gamma(1.0, 0.5)
