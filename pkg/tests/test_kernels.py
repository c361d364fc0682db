import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from dephasing_nm.exceptions import DomainError
from dephasing_nm.kernels import (
    ColoredKernel,
    ColoredParams,
    DephasingTrace,
    RtnParams,
    colored_dephasing,
    dephasing_trace,
    rtn_dephasing,
    rtn_kernel,
    switching_rate_pdf,
)
from dephasing_nm.measures import positive_variation


def trig_form(tau, g):
    w = math.sqrt(4 - g * g)
    return math.exp(-g * tau) * (math.cos(w * tau) + g / w * math.sin(w * tau))


def hyperbolic_form(tau, g):
    d = math.sqrt(g * g - 4)
    return math.exp(-g * tau) * (math.cosh(d * tau) + g / d * math.sinh(d * tau))


class TestParams:
    def test_rtn_rejects_nonpositive_rate(self):
        with pytest.raises(DomainError):
            RtnParams(0.0)
        with pytest.raises(DomainError):
            RtnParams(-1.0)

    @pytest.mark.parametrize("kw", [
        dict(alpha=0.0), dict(alpha=1.0, n_fluctuators=0),
        dict(alpha=1.0, gamma_min=1.0, gamma_max=1.0),
        dict(alpha=1.0, gamma_min=-1.0), dict(alpha=1.0, n_fluctuators=1.5),
    ])
    def test_colored_rejects_invalid(self, kw):
        with pytest.raises(DomainError):
            ColoredParams(**kw)

    def test_alpha_beyond_typical_range_accepted(self):
        assert ColoredParams(2.5, 10).alpha == 2.5

    def test_trace_invariants(self):
        with pytest.raises(DomainError):
            DephasingTrace([0.0, 1.0], [0.9, 0.5])
        with pytest.raises(DomainError):
            DephasingTrace([0.0, 1.0], [1.0, 1.5])
        with pytest.raises(DomainError):
            DephasingTrace([0.1, 1.0], [1.0, 0.5])
        with pytest.raises(DomainError):
            DephasingTrace([0.0], [1.0])


class TestRtnDephasing:
    def test_unity_at_zero(self):
        for g in (0.01, 1.0, 2.0, 3.0, 100.0):
            assert rtn_dephasing(0.0, RtnParams(g)) == 1.0

    def test_critical_rate_value(self):
        assert rtn_dephasing(1.0, RtnParams(2.0)) == pytest.approx(3 * math.exp(-2), rel=1e-14)
        # both closed forms just off the critical point
        assert hyperbolic_form(1.0, 2 + 1e-6) == pytest.approx(3 * math.exp(-2), rel=1e-5)
        assert trig_form(1.0, 2 - 1e-6) == pytest.approx(3 * math.exp(-2), rel=1e-5)

    def test_first_extremum(self):
        tau = math.pi / math.sqrt(3)
        assert rtn_dephasing(tau, RtnParams(1.0)) == pytest.approx(
            -math.exp(-math.pi / math.sqrt(3)), rel=1e-12)

    @pytest.mark.parametrize("g", [0.05, 0.7, 1.9, 2.3, 7.0, 40.0])
    def test_matches_textbook_forms(self, g):
        form = trig_form if g < 2 else hyperbolic_form
        for tau in (0.1, 0.9, 3.3, 8.0):
            assert rtn_dephasing(tau, RtnParams(g)) == pytest.approx(form(tau, g), rel=1e-11, abs=1e-300)

    def test_large_rate_no_overflow(self):
        vals = rtn_dephasing(np.array([10.0, 1e3, 1e5]), RtnParams(1e4))
        assert np.all(np.isfinite(vals))
        assert vals[0] == pytest.approx(math.exp(-2 * 10.0 / 1e4), rel=1e-6)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            rtn_dephasing(-0.1, RtnParams(1.0))

    def test_array_and_scalar(self):
        out = rtn_dephasing([0.0, 1.0], RtnParams(1.0))
        assert isinstance(out, np.ndarray) and out.shape == (2,)
        assert isinstance(rtn_dephasing(1.0, RtnParams(1.0)), float)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 1e3), st.floats(1e-4, 1e4))
    def test_bounded(self, tau, g):
        assert abs(rtn_dephasing(tau, RtnParams(g))) <= 1.0

    def test_bounded_dense_random(self, rng):
        tau = rng.uniform(0, 200, 10_000)
        g = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), 10_000))
        assert np.all(np.abs(rtn_kernel(tau, g)) <= 1.0)

    @pytest.mark.parametrize("tau", [0.3, 1.0, 4.0, 12.0])
    def test_continuous_across_critical_rate(self, tau):
        limit = math.exp(-2 * tau) * (1 + 2 * tau)
        for g in (2 - 1e-8, 2 + 1e-8):
            assert rtn_dephasing(tau, RtnParams(g)) == pytest.approx(limit, rel=1e-6)
        # the band edge hands over smoothly to the closed forms
        lo = rtn_dephasing(tau, RtnParams(2 - 1.01e-6))
        hi = rtn_dephasing(tau, RtnParams(2 - 0.99e-6))
        assert lo == pytest.approx(hi, rel=1e-6)

    @pytest.mark.parametrize("g", [2.0, 2.0 + 1e-7, 2.5, 5.0, 50.0])
    def test_monotone_for_fast_switching(self, g):
        t = np.linspace(0, 50, 20001)
        v = rtn_dephasing(t, RtnParams(g))
        assert np.all(v >= 0)
        assert np.all(np.diff(v) <= 0)

    @pytest.mark.parametrize("g", [0.3, 1.0, 1.7])
    def test_extrema_positions(self, g):
        dt = 1e-4
        t = np.arange(0, 4 * math.pi / math.sqrt(4 - g * g) + 0.5, dt)
        d = np.abs(rtn_dephasing(t, RtnParams(g)))
        inner = np.flatnonzero((d[1:-1] > d[:-2]) & (d[1:-1] >= d[2:])) + 1
        tk = np.arange(1, inner.size + 1) * math.pi / math.sqrt(4 - g * g)
        assert inner.size >= 3
        assert np.all(np.abs(t[inner] - tk) <= dt)
        assert np.any(np.diff(np.sign(rtn_dephasing(t, RtnParams(g)))) != 0)


class TestRatePdf:
    def test_log_uniform_value(self):
        p = ColoredParams(1.0)
        assert switching_rate_pdf(1.0, p) == pytest.approx(1 / math.log(1e8), rel=1e-14)
        assert switching_rate_pdf(1.0, p) == pytest.approx(0.05429, abs=1e-5)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0, 2.5])
    def test_normalised(self, alpha):
        p = ColoredParams(alpha)
        # quadrature in ln(gamma) keeps the heavy edge resolvable
        total = quad(lambda u: switching_rate_pdf(math.exp(u), p) * math.exp(u),
                     math.log(1e-4), math.log(1e4), epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        assert total == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("alpha", [0.5, 1.5, 2.5])
    def test_textbook_power_law_branch(self, alpha):
        g1, g2 = 1e-4, 1e4
        for g in (1e-3, 0.2, 30.0):
            ref = (alpha - 1) / g ** alpha * (g1 * g2) ** (alpha - 1) / (g2 ** (alpha - 1) - g1 ** (alpha - 1))
            assert switching_rate_pdf(g, ColoredParams(alpha)) == pytest.approx(ref, rel=1e-12)

    def test_continuity_at_alpha_one(self):
        for g in (1e-3, 1.0, 500.0):
            one = switching_rate_pdf(g, ColoredParams(1.0))
            near = switching_rate_pdf(g, ColoredParams(1.0 + 1e-8))
            assert near == pytest.approx(one, rel=1e-6)

    def test_outside_window(self):
        with pytest.raises(DomainError):
            switching_rate_pdf(2e4, ColoredParams(1.0))


def quad_colored(tau, alpha, lo=1e-4, hi=1e4):
    p = ColoredParams(alpha, 1, lo, hi)
    f = lambda u: rtn_kernel(tau, math.exp(u)) * switching_rate_pdf(math.exp(u), p) * math.exp(u)  # noqa: E731
    return quad(f, math.log(lo), math.log(hi), epsabs=1e-14, epsrel=1e-12, limit=500)[0]


class TestColoredDephasing:
    def test_unity_at_zero(self):
        for alpha in (0.5, 1.0, 2.5):
            assert colored_dephasing(0.0, ColoredParams(alpha, 7)) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("tau", [0.25, 1.0, 3.7, 40.0])
    def test_against_scipy_quad(self, alpha, tau):
        assert colored_dephasing(tau, ColoredParams(alpha)) == pytest.approx(
            quad_colored(tau, alpha), rel=1e-8, abs=1e-12)

    def test_power_law_identity(self):
        t = np.linspace(0, 10, 20)
        for alpha in (0.5, 1.0, 2.0):
            single = colored_dephasing(t, ColoredParams(alpha, 1))
            for nf in (2, 5, 10):
                np.testing.assert_allclose(colored_dephasing(t, ColoredParams(alpha, nf)),
                                           single ** nf, rtol=1e-12)

    @pytest.mark.parametrize("window", [(1e-4, 1e4), (1e-4, 2.0), (2.0, 1e4)])
    def test_weighted_average_bounds(self, window):
        lo, hi = window
        rates = np.geomspace(lo, hi, 4001)
        for tau in (0.5, 2.0, 9.0):
            v = colored_dephasing(tau, ColoredParams(1.0), window=window)
            g = rtn_kernel(tau, rates)
            assert g.min() - 1e-9 <= v <= g.max() + 1e-9

    def test_window_override_renormalises(self):
        p = ColoredParams(1.0, 1)
        assert colored_dephasing(0.0, p, window=(2.0, 1e4)) == pytest.approx(1.0)
        assert colored_dephasing(1.3, p, window=(1e-3, 1.0)) == pytest.approx(
            quad_colored(1.3, 1.0, 1e-3, 1.0), rel=1e-8)

    def test_kernel_cache_consistent(self):
        k = ColoredKernel(1.5)
        t = np.linspace(0, 5, 11)
        np.testing.assert_allclose(k(t, 3), colored_dephasing(t, ColoredParams(1.5, 3)), rtol=1e-14)
        np.testing.assert_allclose(k(t[::2], 3), colored_dephasing(t[::2], ColoredParams(1.5, 3)), rtol=1e-14)


class TestDephasingTrace:
    def test_slow_rtn_first_zero(self):
        g = 0.01
        grid = np.linspace(0, 20, 20001)
        tr = dephasing_trace(RtnParams(g), grid)
        root = brentq(lambda t: trig_form(t, g), 0.1, 1.5)
        first = np.flatnonzero(np.diff(np.sign(tr.values)) != 0)[0]
        assert grid[first] <= root <= grid[first + 1]
        assert positive_variation(np.abs(tr.values)) > 1.0

    def test_window_regimes(self):
        grid = np.linspace(0, 20, 2001)
        hi = dephasing_trace(ColoredParams(1.0), grid, rate_window_override=(2.0, 1e4))
        lo = dephasing_trace(ColoredParams(1.0), grid, rate_window_override=(1e-4, 2.0))
        assert np.all(np.diff(np.abs(hi.values)) <= 0)
        assert positive_variation(np.abs(lo.values)) > 0.1

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            dephasing_trace(RtnParams(1.0), [0.1, 0.2])
        with pytest.raises(DomainError):
            dephasing_trace(RtnParams(1.0), [0.0, 0.2, 0.1])
        with pytest.raises(DomainError):
            dephasing_trace(RtnParams(1.0), [0.0, 1.0], rate_window_override=(1, 2))
