"""1D variance lab: quadrature oracles and strategy comparisons."""

import numpy as np
import pytest

from dtofsim.modulation import Waveform
from dtofsim.varlab import (analytic_F_sinusoid, antithetic_variance,
                            autoconvolution, autocorrelation, default_shift,
                            expected_autoconvolution_sinusoid,
                            modulation_signal, sampler_variance_surface,
                            shift_sweep, simpson_quad, strategy_variance,
                            strategy_variance_mc, theta_averaged_variance)

TWO_PI = 2.0 * np.pi
SIN = Waveform("sinusoidal")


class TestQuadrature:
    def test_simpson_polynomial_exact(self):
        # Simpson is exact for cubics.
        val = simpson_quad(lambda t: t ** 3 - 2.0 * t + 1.0, 0.0, 2.0,
                           panels=8)
        assert val == pytest.approx(4.0 - 4.0 + 2.0, rel=1e-14)

    def test_simpson_cosine(self):
        val = simpson_quad(np.cos, 0.0, np.pi / 2.0)
        assert val == pytest.approx(1.0, rel=1e-10)


class TestCorrelations:
    def test_autocorrelation_full_period_cosine(self):
        # x = cos(2*pi*t), T = 1: R(0) = 1/2, R(T/2) = -1/2.
        x = modulation_signal(SIN, TWO_PI, 0.0)
        assert autocorrelation(x, 1.0, 0.0) == pytest.approx(0.5, rel=1e-9)
        assert autocorrelation(x, 1.0, 0.5) == pytest.approx(-0.5, rel=1e-9)

    def test_autoconvolution_cosine(self):
        # C(ts) = int cos(w t + th) cos(-w t + w ts + th) dt; for th = 0,
        # w = 2*pi, T = 1: C(ts) = cos(2*pi*ts)/2.
        x = modulation_signal(SIN, TWO_PI, 0.0)
        for ts in (0.0, 0.2, 0.5, 0.8):
            expected = 0.5 * np.cos(TWO_PI * ts)
            assert autoconvolution(x, 1.0, ts) == pytest.approx(
                expected, abs=1e-9)

    def test_expected_autoconvolution_values(self):
        # omega_d = pi, T = 1, ts = 0.5: (sin(pi/2) + sin(pi/2))/(2 pi).
        assert expected_autoconvolution_sinusoid(np.pi, 1.0, 0.5) == \
            pytest.approx(1.0 / np.pi, rel=1e-14)
        # omega_d -> 0 limit is T/2.
        assert expected_autoconvolution_sinusoid(1e-9, 2.0, 0.7) == 1.0

    def test_expected_autoconvolution_matches_theta_average(self):
        omega_d, T, ts = 1.3 * TWO_PI, 1.0, 0.37
        thetas = TWO_PI * (np.arange(64) + 0.5) / 64
        avg = np.mean([autoconvolution(modulation_signal(SIN, omega_d, th),
                                       T, ts) for th in thetas])
        assert avg == pytest.approx(
            expected_autoconvolution_sinusoid(omega_d, T, ts), abs=1e-9)

    def test_analytic_F_decomposition(self):
        # R(ts) = F(ts) + F(T - ts) against the quadrature autocorrelation.
        for wt in (0.3, 0.7, 1.0):
            omega_d = wt * TWO_PI
            for theta in (0.0, 1.1, 4.0):
                x = modulation_signal(SIN, omega_d, theta)
                for ts in (0.1, 0.5, 0.9):
                    r = analytic_F_sinusoid(omega_d, theta, 1.0, ts) \
                        + analytic_F_sinusoid(omega_d, theta, 1.0, 1.0 - ts)
                    assert autocorrelation(x, 1.0, ts) == pytest.approx(
                        r, abs=1e-9)


class TestStrategyVariance:
    def test_uniform_cosine_full_period(self):
        # Un-normalized Var of the 2-sample mean: (T/2) Var[x] = 1/4.
        x = modulation_signal(SIN, TWO_PI, 0.0)
        assert strategy_variance(x, 1.0, "uniform") == pytest.approx(
            0.25, rel=1e-9)

    def test_shifted_half_period_cancels_full_heterodyne(self):
        x = modulation_signal(SIN, TWO_PI, 0.4)
        assert antithetic_variance(x, 1.0, "shifted", 0.5) == \
            pytest.approx(0.0, abs=1e-15)

    def test_mirrored_zero_shift_on_even_signal(self):
        # cos(w t) is even, so the mirrored partner at ts = 0 duplicates the
        # primal: variance equals the single-sample (uniform doubled) one.
        x = modulation_signal(SIN, TWO_PI, 0.0)
        v_mir = antithetic_variance(x, 1.0, "mirrored", 0.0)
        v_uni = strategy_variance(x, 1.0, "uniform")
        assert v_mir == pytest.approx(2.0 * v_uni, rel=1e-9)

    def test_default_shift(self):
        assert default_shift("shifted", 2.0) == 1.0
        assert default_shift("mirrored", 2.0) == 0.0

    def test_unknown_strategy(self):
        x = modulation_signal(SIN, TWO_PI, 0.0)
        with pytest.raises(ValueError):
            strategy_variance(x, 1.0, "sobol")

    @pytest.mark.parametrize("strategy,t_s", [("uniform", None),
                                              ("stratified", None),
                                              ("shifted", 0.3),
                                              ("mirrored", 0.7)])
    def test_monte_carlo_cross_check(self, strategy, t_s):
        x = modulation_signal(SIN, 0.8 * TWO_PI, 1.2)
        quad = strategy_variance(x, 1.0, strategy, t_s)
        mc = strategy_variance_mc(x, 1.0, strategy, t_s, n_pairs=200_000,
                                  rng=np.random.default_rng(7))
        assert mc == pytest.approx(quad, rel=0.05, abs=1e-4)

    def test_variance_nonnegative_grid(self):
        for kind in ("sinusoidal", "rectangular"):
            wf = Waveform(kind)
            surf = sampler_variance_surface(wf, "shifted",
                                            [0.25, 0.75], [0.0, 2.0],
                                            panels=2048)
            assert surf.shape == (2, 2)
            assert np.all(surf >= -1e-12)


class TestShiftSweep:
    def test_shifted_optimum_at_half_exposure(self):
        ts_grid = np.linspace(0.0, 1.0, 21)
        var = shift_sweep(SIN, "shifted", 0.7, 0.9, ts_grid, panels=4096)
        assert np.argmin(var) == 10

    def test_theta_average_reduces_scatter(self):
        # The theta average must lie between the per-theta extremes.
        vals = [strategy_variance(modulation_signal(SIN, 0.6 * TWO_PI, th),
                                  1.0, "mirrored", 0.0, panels=4096)
                for th in TWO_PI * np.arange(16) / 16]
        avg = theta_averaged_variance(SIN, "mirrored", 0.6, t_s=0.0,
                                      n_theta=16, panels=4096)
        assert min(vals) - 1e-12 <= avg <= max(vals) + 1e-12
