"""Waveforms, cross-correlation tables and the low-pass modulation term."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtofsim.modulation import (ModulationConfig, Waveform,
                                cross_correlation_table, eval_full_product,
                                eval_modulation_term, eval_table, path_phase)

TWO_PI = 2.0 * np.pi


class TestWaveform:
    def test_sinusoidal_values(self):
        wf = Waveform("sinusoidal")
        assert wf(0.0) == pytest.approx(1.0)
        assert wf(np.pi) == pytest.approx(-1.0)
        assert wf(np.pi / 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_rectangular_levels_and_zero_mean(self):
        wf = Waveform("rectangular", duty=0.25)
        # High over the duty fraction centered on phase 0.
        assert wf(0.0) == 1.0
        assert wf(np.pi) == pytest.approx(-0.25 / 0.75)
        p = TWO_PI * (np.arange(4096) + 0.5) / 4096
        assert abs(wf(p).mean()) < 1e-12

    def test_triangular_extremes(self):
        wf = Waveform("triangular")
        assert wf(0.0) == pytest.approx(1.0)
        assert wf(np.pi) == pytest.approx(-1.0)
        assert wf(np.pi / 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_trapezoidal_plateaus_and_edges(self):
        wf = Waveform("trapezoidal", rise=0.25)
        assert wf(0.0) == pytest.approx(1.0)
        assert wf(np.pi) == pytest.approx(-1.0)
        # Quarter phase sits at the middle of the linear edge.
        assert wf(np.pi / 2.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("kind", ("sinusoidal", "rectangular",
                                      "triangular", "trapezoidal"))
    def test_zero_mean_unit_amplitude(self, kind):
        wf = Waveform(kind)
        p = TWO_PI * (np.arange(1 << 14) + 0.5) / (1 << 14)
        vals = wf(p)
        assert abs(vals.mean()) < 1e-9
        assert np.max(np.abs(vals)) <= 1.0 + 1e-12

    @given(phase=st.floats(-100.0, 100.0),
           k=st.integers(-3, 3),
           kind=st.sampled_from(("sinusoidal", "rectangular", "triangular",
                                 "trapezoidal")))
    @settings(max_examples=200, deadline=None)
    def test_periodicity(self, phase, k, kind):
        wf = Waveform(kind)
        assert wf(phase + k * TWO_PI) == pytest.approx(float(wf(phase)),
                                                       abs=1e-9)

    @given(phase=st.floats(-20.0, 20.0),
           kind=st.sampled_from(("sinusoidal", "rectangular", "triangular",
                                 "trapezoidal")))
    @settings(max_examples=200, deadline=None)
    def test_even_symmetry(self, phase, kind):
        # Every default waveform is centered so w(-x) = w(x).
        wf = Waveform(kind)
        assert wf(-phase) == pytest.approx(float(wf(phase)), abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            Waveform("sawtooth")
        with pytest.raises(ValueError):
            Waveform("rectangular", duty=0.0)
        with pytest.raises(ValueError):
            Waveform("trapezoidal", rise=0.6)


class TestCrossCorrelation:
    def test_sinusoid_table_matches_half_cosine(self):
        table = cross_correlation_table(Waveform("sinusoidal"),
                                        Waveform("sinusoidal"))
        delta = TWO_PI * np.arange(table.shape[0]) / table.shape[0]
        assert np.allclose(table, 0.5 * np.cos(delta), atol=1e-12)

    def test_rectangular_autocorrelation_is_triangular(self):
        # Duty-0.5 square wave: circular autocorrelation is the unit
        # triangle wave 1 - 4*|delta|/pi on [0, pi/2] etc.
        table = cross_correlation_table(Waveform("rectangular"),
                                        Waveform("rectangular"))
        delta = TWO_PI * np.arange(table.shape[0]) / table.shape[0]
        tri = Waveform("triangular")(delta)
        assert np.allclose(table, tri, atol=1e-9)

    def test_table_matches_direct_quadrature(self):
        sensor = Waveform("trapezoidal")
        illum = Waveform("rectangular", duty=0.3)
        table = cross_correlation_table(sensor, illum)
        bins = table.shape[0]
        s = TWO_PI * (np.arange(1 << 16) + 0.5) / (1 << 16)
        for k in (0, 17, 1000, 3000):
            delta = TWO_PI * k / bins
            direct = np.mean(sensor(s + delta) * illum(s))
            assert table[k] == pytest.approx(direct, abs=5e-4)

    def test_eval_table_exact_on_nodes_and_periodic(self):
        table = np.sin(TWO_PI * np.arange(64) / 64)
        phase = TWO_PI * np.arange(64) / 64
        assert np.allclose(eval_table(table, phase), table, atol=1e-12)
        assert eval_table(table, 0.3) == pytest.approx(
            float(eval_table(table, 0.3 + TWO_PI)), abs=1e-12)


class TestModulationConfig:
    def test_omega_f_derived(self):
        cfg = ModulationConfig(omega_g=TWO_PI * 30e6, omega_d=100.0)
        assert cfg.omega_f == cfg.omega_g + 100.0

    def test_omega_tilde_round_trip(self):
        cfg = ModulationConfig.from_omega_tilde(0.6625, T=1.5e-3)
        assert cfg.omega_tilde == pytest.approx(0.6625, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            ModulationConfig(T=-1.0)
        with pytest.raises(ValueError):
            ModulationConfig(omega_d=TWO_PI / 1.5e-3 * 1.5)
        with pytest.warns(UserWarning):
            ModulationConfig(omega_g=10.0)

    def test_chi_sinusoid_closed_form(self):
        cfg = ModulationConfig()
        x = np.linspace(-5.0, 5.0, 11)
        assert np.allclose(cfg.chi(x), 0.5 * np.cos(x), atol=1e-15)

    def test_path_phase_sign(self):
        cfg = ModulationConfig(omega_g=1e8)
        assert path_phase(cfg, 2e-8) == pytest.approx(-2.0)

    def test_modulation_term_sinusoid(self):
        cfg = ModulationConfig(omega_g=TWO_PI * 30e6, omega_d=1000.0,
                               psi=0.3, g1=2.0)
        t, tau = 1e-4, 3e-8
        expected = 2.0 * 0.5 * np.cos(1000.0 * t + cfg.omega_g * tau + 0.3)
        assert eval_modulation_term(cfg, t, tau) == pytest.approx(expected,
                                                                  rel=1e-12)

    def test_low_pass_term_equals_averaged_full_product(self):
        # Averaging the unfiltered product over whole carrier periods must
        # reproduce the low-pass modulation term (the omega_f + omega_g
        # component integrates out).
        cfg = ModulationConfig(omega_g=TWO_PI * 30e6, omega_d=0.0,
                               psi=0.7, g0=0.5)
        tau = 1.7e-8
        period = TWO_PI / cfg.omega_g
        t = np.linspace(0.0, 64 * period, 1 << 16, endpoint=False)
        full = eval_full_product(cfg, t, tau)
        lp = eval_modulation_term(cfg, 0.0, tau)
        assert full.mean() == pytest.approx(float(lp), abs=2e-4)
