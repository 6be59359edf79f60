"""Radial-velocity reconstruction from D-ToF measurement buffers.

Single-bounce model used throughout: a collocated source/camera sees a
surface point at distance d(t) = l + u t, so the time of flight is
tau(t) = 2 d(t) / c and the illumination phase drifts at the Doppler rate
Delta_omega = -2 (u/c) omega_g.  With constant amplitude A the measurement
at heterodyne offset omega_d and sensor phase psi is

    m(psi) = (A T / 2) sinc(Omega T / 2) cos(Omega T / 2 + omega_g tau_0
                                              + psi),
    Omega = omega_d - Delta_omega,  sinc(x) = sin(x)/x.

Both estimators below invert ratios of such measurements for Delta_omega
and report u = -Delta_omega c / (2 omega_g).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .constants import SPEED_OF_LIGHT

TWO_PI = 2.0 * np.pi

# Heterodyne offset for the four-phase estimator, optimal for sinusoids.
FOUR_PHASE_OMEGA_TILDE = 0.6625
# The four sensor phase offsets used for amplitude recovery.
FOUR_PHASE_PSI_OFFSETS = (0.0, np.pi / 2.0, np.pi, 3.0 * np.pi / 2.0)

# Pixels whose normalizer magnitude falls below this fraction of the image
# median are flagged invalid.
NORMALIZER_THRESHOLD = 1e-3


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)  # numpy sinc is sin(pi x)/(pi x)


def doppler_shift_from_speed(u, omega_g):
    """Doppler angular-frequency shift for radial speed u (receding > 0)."""
    return -2.0 * (u / SPEED_OF_LIGHT) * omega_g


def speed_from_doppler_shift(delta_omega, omega_g):
    return -delta_omega * SPEED_OF_LIGHT / (2.0 * omega_g)


# ---------------------------------------------------------------------------
# homodyne/heterodyne ratio estimator


def heterodyne_ratio_model(delta_omega, T):
    """Exact single-bounce ratio m_het(omega_tilde=1) / m_hom.

    Both measurements share the bracket sin(phi0 - Delta_omega T) -
    sin(phi0), so the ratio collapses to -Delta_omega / (omega_ref -
    Delta_omega) with omega_ref = 2 pi / T, independent of phase and
    amplitude.
    """
    omega_ref = TWO_PI / T
    return -delta_omega / (omega_ref - delta_omega)


def invert_heterodyne_ratio(r, T):
    """Doppler shift from the het/hom ratio (closed-form inverse)."""
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return r * (TWO_PI / T) / (r - 1.0)


def estimate_velocity_ratio(het, hom, omega_g, T):
    """Velocity map from one heterodyne (omega_tilde=1) and one homodyne
    buffer taken at the same sensor phase.

    Returns (speed map m/s, validity mask).  Pixels with negligible
    homodyne magnitude cannot be normalized and are masked.
    """
    het = np.asarray(het, dtype=np.float64)
    hom = np.asarray(hom, dtype=np.float64)
    if het.shape != hom.shape:
        raise ValueError("heterodyne/homodyne resolution mismatch")
    scale = np.median(np.abs(hom))
    valid = np.abs(hom) > NORMALIZER_THRESHOLD * scale
    r = np.where(valid, het / np.where(valid, hom, 1.0), 0.0)
    delta_omega = invert_heterodyne_ratio(r, T)
    return speed_from_doppler_shift(delta_omega, omega_g), valid


# ---------------------------------------------------------------------------
# four-phase amplitude-ratio estimator


def four_phase_amplitude(m0, m90, m180, m270):
    """Modulation amplitude from four quarter-phase measurements.

    With m(psi) = K cos(gamma + psi) the differences m0 - m180 and
    m270 - m90 recover K cos(gamma) and K sin(gamma).
    """
    return 0.5 * np.hypot(m0 - m180, m270 - m90)


def four_phase_ratio_model(delta_omega, T, omega_tilde=FOUR_PHASE_OMEGA_TILDE):
    """Single-bounce amplitude ratio B_het / B_hom as a function of shift."""
    omega_d = omega_tilde * TWO_PI / T
    return np.abs(_sinc((omega_d - delta_omega) * T / 2.0)) \
        / np.maximum(np.abs(_sinc(delta_omega * T / 2.0)), 1e-300)


def invert_four_phase_ratio(r2, T, omega_tilde=FOUR_PHASE_OMEGA_TILDE):
    """Numerically invert the amplitude-ratio model for the Doppler shift.

    The model is monotone increasing in delta_omega around zero; the root
    is bracketed within one eighth of the unambiguous range.
    """
    omega_ref = TWO_PI / T
    lo, hi = -omega_ref / 8.0, omega_ref / 8.0

    def solve(val):
        f = lambda dw: four_phase_ratio_model(dw, T, omega_tilde) - val
        flo, fhi = f(lo), f(hi)
        if flo * fhi > 0.0:  # outside the invertible bracket
            return lo if abs(flo) < abs(fhi) else hi
        return brentq(f, lo, hi, xtol=1e-9)

    return np.vectorize(solve)(np.asarray(r2, dtype=np.float64))


def estimate_velocity_four_phase(het_buffers, hom_buffers, omega_g, T,
                                 omega_tilde=FOUR_PHASE_OMEGA_TILDE):
    """Velocity map from four-phase heterodyne measurements.

    ``het_buffers``: four buffers at omega_tilde with sensor phases
    {0, pi/2, pi, 3pi/2}.  ``hom_buffers``: two homodyne buffers at phases
    {0, pi/2} providing the amplitude reference (the heterodyne phases
    alone cannot separate the Doppler shift from the unknown static phase).
    Returns (speed map, validity mask).
    """
    if len(het_buffers) != 4:
        raise ValueError("expected four heterodyne phase buffers")
    if len(hom_buffers) != 2:
        raise ValueError("expected two homodyne phase buffers")
    m0, m90, m180, m270 = (np.asarray(b, dtype=np.float64)
                           for b in het_buffers)
    h0, h90 = (np.asarray(b, dtype=np.float64) for b in hom_buffers)
    if not (m0.shape == m90.shape == m180.shape == m270.shape
            == h0.shape == h90.shape):
        raise ValueError("buffer resolution mismatch")
    b_het = four_phase_amplitude(m0, m90, m180, m270)
    b_hom = np.hypot(h0, h90)
    scale = np.median(b_hom)
    valid = b_hom > NORMALIZER_THRESHOLD * scale
    r2 = np.where(valid, b_het / np.where(valid, b_hom, 1.0), 0.0)
    delta_omega = invert_four_phase_ratio(r2, T, omega_tilde)
    speed = np.where(valid,
                     speed_from_doppler_shift(delta_omega, omega_g), 0.0)
    return speed, valid


def mix_homodyne_phases(hom_a, hom_b):
    """Combine two quarter-phase homodyne buffers into one normalizer.

    Per pixel the larger-magnitude measurement wins, so the normalizer only
    vanishes where both do; such pixels are masked.  Returns (normalizer,
    validity mask).
    """
    hom_a = np.asarray(hom_a, dtype=np.float64)
    hom_b = np.asarray(hom_b, dtype=np.float64)
    out = np.where(np.abs(hom_a) >= np.abs(hom_b), hom_a, hom_b)
    scale = np.median(np.abs(out))
    valid = np.abs(out) > NORMALIZER_THRESHOLD * max(scale, 1e-300)
    return out, valid


# ---------------------------------------------------------------------------
# Taylor-order analysis of the single-bounce forward model


def _int_poly_cosine(coeffs, omega1, theta0, T):
    """Closed form of int_0^T (sum_k c_k t^k) cos(omega1 t + theta0) dt
    for polynomial order <= 2."""
    if abs(omega1) * T < 1e-9:
        return sum(c * T ** (k + 1) / (k + 1.0)
                   for k, c in enumerate(coeffs)) * np.cos(theta0)
    w = omega1
    s0, c0 = np.sin(theta0), np.cos(theta0)
    sT, cT = np.sin(w * T + theta0), np.cos(w * T + theta0)
    total = 0.0
    for k, c in enumerate(coeffs):
        if k == 0:
            term = (sT - s0) / w
        elif k == 1:
            term = (cT - c0) / w ** 2 + T * sT / w
        elif k == 2:
            term = 2.0 * T * cT / w ** 2 \
                + (T ** 2 / w - 2.0 / w ** 3) * sT + 2.0 * s0 / w ** 3
        else:
            raise ValueError("polynomial order above 2 not supported")
        total += c * term
    return total


def taylor_forward_model(order, l, u, mod_cfg, quadrature=False,
                         amplitude=1.0, panels=1 << 16):
    """Single-bounce measurement m(T) for a surface at d(t) = l + u t.

    The amplitude 1/(l + u t)^2 is Taylor-expanded around mid-exposure
    t = T/2 to the given order (0, 1, or 2) and integrated against the
    exact linear-phase modulation term in closed form; ``quadrature=True``
    instead integrates the unexpanded model numerically as the
    order-infinity reference.
    """
    if l <= 0.0:
        raise ValueError("distance l must be positive")
    T = mod_cfg.T
    omega_g = mod_cfg.omega_g
    tau0 = 2.0 * l / SPEED_OF_LIGHT
    tau_rate = 2.0 * u / SPEED_OF_LIGHT
    omega1 = mod_cfg.omega_d + omega_g * tau_rate
    theta0 = omega_g * tau0 + mod_cfg.psi
    if quadrature:
        t = np.linspace(0.0, T, panels + 1)
        y = amplitude / (l + u * t) ** 2 \
            * 0.5 * mod_cfg.g1 * np.cos(omega1 * t + theta0)
        h = T / panels
        return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum()
                          + 2.0 * y[2:-1:2].sum())
    if order > 2:
        raise ValueError("order must be 0, 1, or 2")
    h = T / 2.0
    lm = l + u * h
    c0 = amplitude / lm ** 2
    c1 = -2.0 * amplitude * u / lm ** 3 if order >= 1 else 0.0
    c2 = 3.0 * amplitude * u ** 2 / lm ** 4 if order >= 2 else 0.0
    # re-express the (t - T/2)-centered polynomial in the t basis
    coeffs = [c0 - c1 * h + c2 * h ** 2, c1 - 2.0 * c2 * h, c2][:order + 1]
    return 0.5 * mod_cfg.g1 * _int_poly_cosine(coeffs, omega1, theta0, T)
