"""Modulation waveforms and the low-pass-filtered modulation term.

The sensor is modulated with a unit-amplitude zero-mean waveform at angular
frequency ``omega_f = omega_g + omega_d`` with programmable phase ``psi``; the
illumination carries the DC/AC gains, ``g0 + g1 * w(omega_g * t)``.  After
low-pass filtering, the product of the two reduces to
``g1 * chi(omega_d * t - phi + psi)`` where ``chi`` is the one-period circular
cross-correlation of the two waveforms and ``phi = -omega_g * tau`` is the
phase delay accumulated over a path's time of flight ``tau``.  For sinusoids
``chi(x) = cos(x) / 2`` and the familiar ``(g1/2) cos(omega_d t - phi + psi)``
term is recovered.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

# Cross-correlation tables for non-sinusoidal waveforms use this resolution.
CORRELATION_TABLE_BINS = 4096

WAVEFORM_KINDS = ("sinusoidal", "rectangular", "triangular", "trapezoidal")


@dataclass(frozen=True)
class Waveform:
    """Periodic, zero-mean, unit-amplitude modulation waveform.

    The phase argument has period ``2*pi``.  ``duty`` applies to rectangular
    waveforms (fraction of the period spent at the high level) and ``rise``
    to trapezoidal ones (fraction of the period spent on each linear edge).
    """

    kind: str = "sinusoidal"
    duty: float = 0.5
    rise: float = 0.25

    def __post_init__(self):
        if self.kind not in WAVEFORM_KINDS:
            raise ValueError(f"unknown waveform kind {self.kind!r}")
        if not 0.0 < self.duty < 1.0:
            raise ValueError("duty cycle must lie in (0, 1)")
        if not 0.0 < self.rise <= 0.5:
            raise ValueError("rise fraction must lie in (0, 0.5]")

    def __call__(self, phase):
        """Evaluate the waveform at ``phase`` (radians, vectorized)."""
        p = np.mod(np.asarray(phase, dtype=np.float64) / TWO_PI, 1.0)
        if self.kind == "sinusoidal":
            return np.cos(TWO_PI * p)
        if self.kind == "rectangular":
            # Zero-mean two-level wave: +1 over the duty fraction (centered on
            # phase 0 so the wave is even, like the cosine), balancing
            # negative level elsewhere.
            d = self.duty
            lo = -d / (1.0 - d)
            on = (p < d / 2.0) | (p >= 1.0 - d / 2.0)
            return np.where(on, 1.0, lo)
        if self.kind == "triangular":
            return np.where(p < 0.5, 1.0 - 4.0 * p, 4.0 * p - 3.0)
        # trapezoidal: +1 plateau around phase 0, -1 plateau around pi,
        # linear edges of width `rise` centered on the quarter phases.
        w = self.rise
        up_hi = 0.25 - w / 2.0
        out = np.empty_like(p)
        q = np.where(p > 0.5, 1.0 - p, p)  # even symmetry
        out = np.where(q <= up_hi, 1.0,
                       np.where(q >= 0.25 + w / 2.0, -1.0,
                                1.0 - 2.0 * (q - up_hi) / w))
        return out


def cross_correlation_table(sensor: Waveform, illum: Waveform,
                            bins: int = CORRELATION_TABLE_BINS):
    """One-period circular cross-correlation ``chi`` of two waveforms.

    ``chi(delta) = (1/2pi) * integral of sensor(s + delta) * illum(s) ds``
    over one period.  Returned as a table of ``bins`` samples over
    ``[0, 2*pi)``; evaluate with :func:`eval_table`.
    """
    s = TWO_PI * np.arange(bins) / bins
    fs = sensor(s)
    fi = illum(s)
    # Circular correlation via FFT; index k holds mean of f[(j+k) % n]*g[j].
    chi = np.fft.irfft(np.fft.rfft(fs) * np.conj(np.fft.rfft(fi)), n=bins)
    return chi / bins


def eval_table(table, phase):
    """Linear interpolation into a periodic table sampled over [0, 2*pi)."""
    bins = table.shape[0]
    x = np.mod(np.asarray(phase, dtype=np.float64) / TWO_PI, 1.0) * bins
    i0 = np.floor(x).astype(np.int64) % bins
    i1 = (i0 + 1) % bins
    frac = x - np.floor(x)
    return table[i0] * (1.0 - frac) + table[i1] * frac


@dataclass
class ModulationConfig:
    """Illumination/sensor modulation setup for one D-ToF measurement.

    ``omega_g`` is the illumination angular frequency, ``omega_d`` the
    heterodyne offset (sensor frequency is always derived as
    ``omega_g + omega_d``), ``psi`` the programmable sensor phase, ``T`` the
    exposure, and ``g0``/``g1`` the illumination DC/AC gains.
    """

    omega_g: float = TWO_PI * 30e6
    omega_d: float = 0.0
    psi: float = 0.0
    T: float = 1.5e-3
    g0: float = 0.0
    g1: float = 1.0
    sensor_waveform: Waveform = field(default_factory=Waveform)
    illum_waveform: Waveform = field(default_factory=Waveform)
    low_pass: bool = True

    _chi_table: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.T <= 0.0:
            raise ValueError("exposure T must be positive")
        if not 0.0 <= self.omega_d <= TWO_PI / self.T * (1.0 + 1e-12):
            raise ValueError("omega_d must lie in [0, 2*pi/T]")
        if self.omega_g < TWO_PI / self.T * 100.0:
            warnings.warn("omega_g is not much larger than 2*pi/T; "
                          "low-pass filtering will be inaccurate",
                          stacklevel=2)

    @property
    def omega_f(self):
        """Sensor modulation frequency (derived, never stored)."""
        return self.omega_g + self.omega_d

    @property
    def omega_tilde(self):
        """Normalized heterodyne frequency in [0, 1]."""
        return self.omega_d * self.T / TWO_PI

    @classmethod
    def from_omega_tilde(cls, omega_tilde, **kwargs):
        T = kwargs.get("T", 1.5e-3)
        return cls(omega_d=omega_tilde * TWO_PI / T, **kwargs)

    def _sinusoidal(self):
        return (self.sensor_waveform.kind == "sinusoidal"
                and self.illum_waveform.kind == "sinusoidal")

    def chi(self, phase):
        """Cross-correlation of sensor and illumination waveforms at ``phase``."""
        if self._sinusoidal():
            return 0.5 * np.cos(phase)
        if self._chi_table is None:
            object.__setattr__(
                self, "_chi_table",
                cross_correlation_table(self.sensor_waveform, self.illum_waveform))
        return eval_table(self._chi_table, phase)


def path_phase(config: ModulationConfig, tau):
    """Path phase offset, ``-omega_g * tau`` (always recomputed from tau)."""
    return -config.omega_g * np.asarray(tau, dtype=np.float64)


def eval_modulation_term(config: ModulationConfig, t, tau):
    """Low-pass-filtered sensor*illumination product at time t for flight time tau."""
    phi = path_phase(config, tau)
    return config.g1 * config.chi(config.omega_d * np.asarray(t) - phi + config.psi)


def eval_full_product(config: ModulationConfig, t, tau):
    """Unfiltered product of sensor and delayed illumination modulation.

    Includes the high-frequency (``omega_f + omega_g`` and ``omega_f``) terms
    that the low-pass term discards.
    """
    t = np.asarray(t, dtype=np.float64)
    phi = path_phase(config, tau)
    sensor = config.sensor_waveform(config.omega_f * t + config.psi)
    illum = config.g1 * config.illum_waveform(config.omega_g * t + phi) + config.g0
    return sensor * illum
