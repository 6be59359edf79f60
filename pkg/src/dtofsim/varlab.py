"""1D variance analysis of time-sampling strategies for the modulation term.

Everything here works on a scalar periodic-in-phase signal ``x(t)`` over one
exposure ``[0, T]`` and computes estimator variances by composite Simpson
quadrature.  Variance integrals follow the un-normalized convention
``Var = integral over [0,T]`` (units value^2 * s, i.e. T times the true
estimator variance); only relative comparisons between strategies matter.
"""

from __future__ import annotations

import csv

import numpy as np

from .modulation import Waveform, cross_correlation_table, eval_table

TWO_PI = 2.0 * np.pi

SMOOTH_PANELS = 2 ** 14

STRATEGIES = ("uniform", "stratified", "shifted", "mirrored",
              "decorrelated-stratified")


def simpson_quad(fn, a, b, panels=SMOOTH_PANELS):
    """Composite Simpson quadrature of a vectorized callable on [a, b]."""
    if panels % 2:
        panels += 1
    t = np.linspace(a, b, panels + 1)
    y = fn(t)
    h = (b - a) / panels
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def modulation_signal(waveform: Waveform, omega_d, theta, T=1.0):
    """Low-pass modulation term as a 1D time signal for the variance lab.

    For sinusoids this is ``cos(omega_d*t + theta)``; for other waveforms the
    waveform auto-correlation at heterodyne phase, normalized to unit peak so
    magnitudes are comparable across waveforms.
    """
    if waveform.kind == "sinusoidal":
        return lambda t: np.cos(omega_d * np.asarray(t) + theta)
    table = cross_correlation_table(waveform, waveform)
    table = table / np.max(np.abs(table))
    return lambda t: eval_table(table, omega_d * np.asarray(t) + theta)


def _split_quad(fn, T, breakpoints, panels):
    """Quadrature over [0, T] split at interior breakpoints (mod wrap points)."""
    pts = sorted({0.0, T} | {b for b in breakpoints if 0.0 < b < T})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        # Nudge endpoint evaluations inward so the wrap discontinuity is
        # sampled from the correct side of each piece.
        eps = 1e-9 * (b - a)
        g = (lambda t, a=a, b=b, eps=eps: fn(np.clip(t, a + eps, b - eps)))
        total += simpson_quad(g, a, b, max(64, int(panels * (b - a) / T)))
    return total


def autocorrelation(x, T, t_s, panels=SMOOTH_PANELS):
    """R(t_s) = integral of x(t) * x(mod(t + t_s, T)) over [0, T]."""
    return _split_quad(lambda t: x(t) * x(np.mod(t + t_s, T)), T,
                       [T - np.mod(t_s, T)], panels)


def autoconvolution(x, T, t_s, panels=SMOOTH_PANELS):
    """C(t_s) = integral of x(t) * x(mod(-t + t_s, T)) over [0, T]."""
    return _split_quad(lambda t: x(t) * x(np.mod(-t + t_s, T)), T,
                       [np.mod(t_s, T)], panels)


def expected_autoconvolution_sinusoid(omega_d, T, t_s):
    """Expectation over uniform theta of the auto-convolution of cos(omega_d*t + theta).

    Equals ``(sin(omega_d*t_s) + sin(omega_d*(T - t_s))) / (2*omega_d)``;
    the omega_d -> 0 limit is T/2.
    """
    if omega_d * T < 1e-6:
        return T / 2.0
    return (np.sin(omega_d * t_s) + np.sin(omega_d * (T - t_s))) / (2.0 * omega_d)


def analytic_F_sinusoid(omega_d, theta, T, t_s):
    """Half of the symmetric auto-correlation decomposition for a sinusoid.

    ``R(t_s) = F(t_s) + F(T - t_s)`` for ``x(t) = cos(omega_d*t + theta)``.
    """
    return (np.cos(omega_d * T + 2.0 * theta) * np.sin(omega_d * t_s)
            / (2.0 * omega_d)
            + t_s / 2.0 * np.cos(omega_d * (T - t_s)))


def _partner(strategy, t, t_s, T):
    if strategy == "shifted":
        return np.mod(t + t_s, T)
    if strategy == "mirrored":
        return np.mod(-t + t_s, T)
    raise ValueError(f"no antithetic partner map for strategy {strategy!r}")


def antithetic_variance(x, T, strategy, t_s, panels=SMOOTH_PANELS):
    """Variance integral of the two-sample antithetic estimator.

    ``Var(t_s) = int_0^T ((x(t) + x(partner(t)))/2 - mu_x)^2 dt`` with the
    partner chosen by the shifted or mirrored map.
    """
    mu = simpson_quad(x, 0.0, T, panels) / T
    wrap = T - np.mod(t_s, T) if strategy == "shifted" else np.mod(t_s, T)
    def integrand(t):
        return ((x(t) + x(_partner(strategy, t, t_s, T))) / 2.0 - mu) ** 2
    return _split_quad(integrand, T, [wrap], panels)


def default_shift(strategy, T):
    return 0.5 * T if strategy == "shifted" else 0.0


def strategy_variance(x, T, strategy, t_s=None, panels=SMOOTH_PANELS):
    """Variance of the two-sample time estimator for any strategy (quadrature).

    Uses the same un-normalized convention as :func:`antithetic_variance`
    (T times the true variance of the two-sample mean).
    """
    if strategy in ("shifted", "mirrored"):
        if t_s is None:
            t_s = default_shift(strategy, T)
        return antithetic_variance(x, T, strategy, t_s, panels)
    mu = simpson_quad(x, 0.0, T, panels) / T
    if strategy == "uniform":
        return simpson_quad(lambda t: (x(t) - mu) ** 2, 0.0, T, panels) / 2.0
    if strategy in ("stratified", "decorrelated-stratified"):
        # Independent jitter in each half; variance of the pair mean is the
        # average of the per-stratum variances. The decorrelated variant only
        # differs for finer stratification, which the 1D lab does not model.
        half = T / 2.0
        out = 0.0
        for a in (0.0, half):
            mu_s = simpson_quad(x, a, a + half, panels) / half
            out += simpson_quad(lambda t: (x(t) - mu_s) ** 2, a, a + half, panels)
        return out / 2.0
    raise ValueError(f"unknown strategy {strategy!r}")


def strategy_variance_mc(x, T, strategy, t_s=None, n_pairs=100_000, rng=None):
    """Monte Carlo cross-check of :func:`strategy_variance`."""
    rng = rng or np.random.default_rng(0)
    t1 = rng.uniform(0.0, T, n_pairs)
    if strategy == "uniform":
        t2 = rng.uniform(0.0, T, n_pairs)
    elif strategy in ("stratified", "decorrelated-stratified"):
        t1 = t1 / 2.0
        t2 = T / 2.0 + rng.uniform(0.0, T / 2.0, n_pairs)
    else:
        if t_s is None:
            t_s = default_shift(strategy, T)
        t2 = _partner(strategy, t1, t_s, T)
    est = (x(t1) + x(t2)) / 2.0
    return T * est.var()


def sampler_variance_surface(waveform, strategy, omega_tilde_grid,
                             theta_prime_grid, T=1.0, t_s=None,
                             panels=SMOOTH_PANELS):
    """Grid of Var(omega_tilde, theta') for a two-sample strategy.

    ``theta' = theta + 0.5 * omega_d * T`` de-skews the phase axis; each cell
    holds the un-normalized two-sample estimator variance.
    """
    out = np.empty((len(omega_tilde_grid), len(theta_prime_grid)))
    for i, wt in enumerate(omega_tilde_grid):
        omega_d = wt * TWO_PI / T
        for j, tp in enumerate(theta_prime_grid):
            theta = tp - 0.5 * omega_d * T
            x = modulation_signal(waveform, omega_d, theta, T)
            out[i, j] = strategy_variance(x, T, strategy, t_s, panels)
    return out


def theta_averaged_variance(waveform, strategy, omega_tilde, T=1.0, t_s=None,
                            n_theta=16, panels=SMOOTH_PANELS):
    """Variance averaged over theta uniform on [0, 2*pi)."""
    omega_d = omega_tilde * TWO_PI / T
    total = 0.0
    for theta in TWO_PI * np.arange(n_theta) / n_theta:
        x = modulation_signal(waveform, omega_d, theta, T)
        total += strategy_variance(x, T, strategy, t_s, panels)
    return total / n_theta


def shift_sweep(waveform, strategy, omega_tilde, theta, ts_grid, T=1.0,
                panels=SMOOTH_PANELS):
    """Antithetic variance as a function of the shift t_s."""
    omega_d = omega_tilde * TWO_PI / T
    x = modulation_signal(waveform, omega_d, theta, T)
    return np.array([antithetic_variance(x, T, strategy, ts, panels)
                     for ts in ts_grid])


def write_variance_csv(path, rows):
    """Emit (omega_tilde, theta_prime, strategy, t_s, variance) rows as CSV."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["omega_tilde", "theta_prime", "strategy", "t_s", "variance"])
        for row in rows:
            w.writerow(row)
