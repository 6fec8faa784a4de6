"""Correlation spectra, shot-noise models and signal-to-noise ratios.

Spectra are one-sided sums ``sum_n G(n dt) e^{i w n dt}`` without
windowing.  For the two-point function lag 0 (the product of a shot with
itself, identically 1 for records) is left out by default; its flat
pedestal is accounted for by the shot-noise model instead.  The
three-dimensional transform of the four-point grid uses ``dt = 2 tau``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import SimParams, gamma_M
from .estimators import Corr4Grid, LagSeries
from .noise import NoiseModel, WhiteNoise, coherence_factor, spectral_density

__all__ = [
    "Spectrum",
    "default_omega_grid",
    "dft1",
    "dft3",
    "theta",
    "resonance_2nd",
    "resonance_2nd_finite",
    "resonance_4th",
    "shot_noise_2nd",
    "shot_noise_4th",
    "total_uncertainty_2nd",
    "snr_2nd",
    "snr_4th",
    "snr_2nd_rates",
    "snr_4th_rates",
    "optimal_n_f_2nd",
    "optimal_n_f_4th",
]


@dataclass(frozen=True)
class Spectrum:
    """One-dimensional spectrum on a frequency grid.

    Attributes:
        omega: Angular frequencies.
        values: Complex transform values.
        stderr: Standard errors propagated from the lag series.
        n_f: Number of lag points summed (counting lag 0 even when it is skipped).
        dt: Lag spacing.
    """

    omega: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_f: int
    dt: float

    def at(self, omega: float) -> complex:
        """Value at the grid point closest to ``omega``."""
        return complex(self.values[int(np.argmin(np.abs(self.omega - omega)))])


def default_omega_grid(n_f: int, dt: float, oversample: int = 4) -> np.ndarray:
    """``[0, pi/dt]`` sampled at ``oversample`` points per natural resolution ``2 pi / (n_f dt)``."""
    n_points = oversample * n_f // 2 + 1
    return np.linspace(0.0, np.pi / dt, n_points)


def dft1(
    series: LagSeries,
    n_f: int,
    omega=None,
    *,
    include_zero_lag: bool = False,
    oversample: int = 4,
) -> Spectrum:
    """One-sided transform ``sum_{n=first}^{n_f - 1} G(n dt) e^{i w n dt}``.

    Args:
        series: Lag series starting at lag 0.
        n_f: Number of lag points ``n = 0 .. n_f - 1``.
        omega: Frequencies; defaults to :func:`default_omega_grid`.
        include_zero_lag: Sum from lag 0 instead of lag 1.
        oversample: Grid density used when ``omega`` is not given.
    """
    if n_f < 1:
        raise ValueError("n_f must be at least 1")
    if len(series.values) < n_f:
        raise ValueError(f"series has {len(series.values)} lags, need {n_f}")
    omega = default_omega_grid(n_f, series.dt, oversample) if omega is None else np.atleast_1d(omega)
    first = 0 if include_zero_lag else 1
    lags = np.arange(first, n_f)
    phase = np.exp(1j * np.outer(omega, lags) * series.dt)
    values = phase @ series.values[first:n_f]
    err = np.full(len(omega), np.sqrt(np.sum(np.square(series.stderr[first:n_f]))))
    return Spectrum(omega=np.asarray(omega, dtype=float), values=values, stderr=err, n_f=n_f, dt=series.dt)


def dft3(grid: Corr4Grid | np.ndarray, omegas: tuple[float, float, float], dt: float | None = None) -> complex:
    """``sum_{u,v,w >= 1} G(u, v, w) e^{i (w1 u + w2 v + w3 w) dt}`` at one frequency triple."""
    if isinstance(grid, Corr4Grid):
        values, dt = grid.values, grid.dt if dt is None else dt
    else:
        values = np.asarray(grid)
        if dt is None:
            raise ValueError("dt is required for a bare array")
    n_u, n_v, n_w = values.shape
    w1, w2, w3 = omegas
    eu = np.exp(1j * w1 * dt * np.arange(1, n_u + 1))
    ev = np.exp(1j * w2 * dt * np.arange(1, n_v + 1))
    ew = np.exp(1j * w3 * dt * np.arange(1, n_w + 1))
    return complex(np.einsum("uvw,u,v,w->", values, eu, ev, ew))


def theta(omega: float, params: SimParams) -> complex:
    """Dimensionless detuning ``(w - w0) tau - i (gamma0 + gamma_M) tau``."""
    return (omega - params.omega0) * params.tau - 1j * (params.gamma0 + params.gamma_m) * params.tau


def _noise_terms(params: SimParams, noise) -> tuple[float, float]:
    """``(S_C(w0), L_C)`` for a noise model, a white-noise level, or ``None``."""
    if noise is None:
        return 0.0, 1.0
    model: NoiseModel = WhiteNoise(float(noise)) if isinstance(noise, (int, float)) else noise
    return float(spectral_density(model, params.omega0)), coherence_factor(model, params.tau)


def resonance_2nd(params: SimParams, noise=None) -> float:
    """Two-point spectrum at ``w0`` for long transforms: ``L^2 (2 gamma_M / G + tau S_C)``.

    ``G = gamma0 + gamma_M``; ``S_C`` is the noise density at ``w0``.
    """
    s_c, l_c = _noise_terms(params, noise)
    rate = params.gamma0 + params.gamma_m
    signal = 2 * params.gamma_m / rate if params.gamma_m > 0 else 0.0
    return l_c**2 * (signal + params.tau * s_c)


def resonance_2nd_finite(params: SimParams, n_f: int, noise=None) -> float:
    """Signal part summed over ``n_f`` lags: ``L^2 2 gamma_M tau (1 - e^{-n_f G tau}) / (1 - e^{-G tau})``."""
    _, l_c = _noise_terms(params, noise)
    x = (params.gamma0 + params.gamma_m) * params.tau
    return l_c**2 * 2 * params.gamma_m * params.tau * (-np.expm1(-n_f * x)) / (-np.expm1(-x))


def resonance_4th(params: SimParams, noise=None) -> float:
    """Magnitude of the four-point spectrum at ``(w0, 0, w0)``: ``L^2 (gamma_M / G)^2 / (4 gamma_M tau)``."""
    _, l_c = _noise_terms(params, noise)
    gm = params.gamma_m
    return l_c**2 * (gm / (gm + params.gamma0)) ** 2 / (4 * gm * params.tau)


def shot_noise_2nd(n_f: int, m: float) -> float:
    """Shot-noise standard deviation ``sqrt(n_f / M)`` of the two-point spectrum."""
    if n_f < 1 or m < 1:
        raise ValueError("counts must be at least 1")
    return float(np.sqrt(n_f / m))


def shot_noise_4th(n_f2: int, n_f1: int, t_total: float, tau: float) -> float:
    """Shot-noise standard deviation ``n_f2 sqrt(n_f1) sqrt(2 tau / T)`` of the four-point spectrum."""
    if n_f2 < 1 or n_f1 < 1:
        raise ValueError("counts must be at least 1")
    if t_total <= 0 or tau <= 0:
        raise ValueError("times must be positive")
    return float(n_f2 * np.sqrt(n_f1) * np.sqrt(2 * tau / t_total))


def total_uncertainty_2nd(
    sigma_m: float, l_c: float, tau: float, s_c: float, ds_c: float | None = None
) -> float:
    """``sqrt(sigma_M^2 + L^4 tau^2 dS_C^2)`` with ``dS_C = S_C`` by default."""
    ds_c = s_c if ds_c is None else ds_c
    return float(np.hypot(sigma_m, l_c**2 * tau * ds_c))


def snr_2nd_rates(gamma_m, gamma0, s_c, a, t_total):
    """Two-point SNR for an acquisition time ``T`` in terms of rates.

    ``[G/(4 gamma_M^2 T) e^{8 gamma_M S/a^2} + 4 G^2 S^2 / a^4]^{-1/2}`` with
    ``G = gamma0 + gamma_M``.
    """
    rate = gamma0 + gamma_m
    shot = rate / (4 * gamma_m**2 * t_total) * np.exp(8 * gamma_m * s_c / a**2)
    drift = 4 * rate**2 * s_c**2 / a**4
    return 1.0 / np.sqrt(shot + drift)


def snr_4th_rates(gamma_m, gamma0, s_c, a, t_total):
    """Four-point SNR ``gamma_M^{3/2} sqrt(T) / (sqrt2 (gamma_M + gamma0)) e^{-4 gamma_M S/a^2}``."""
    return gamma_m**1.5 * np.sqrt(t_total) / (np.sqrt(2) * (gamma_m + gamma0)) * np.exp(-4 * gamma_m * s_c / a**2)


def snr_2nd(params: SimParams, s_c: float, t_total: float) -> float:
    return float(snr_2nd_rates(params.gamma_m, params.gamma0, s_c, params.a, t_total))


def snr_4th(params: SimParams, s_c: float, t_total: float) -> float:
    return float(snr_4th_rates(params.gamma_m, params.gamma0, s_c, params.a, t_total))


def optimal_n_f_2nd(params: SimParams) -> int:
    """Lag count with ``n_f tau ~ 1 / (gamma0 + gamma_M)``."""
    return max(1, int(round(1 / ((params.gamma0 + params.gamma_m) * params.tau))))


def optimal_n_f_4th(params: SimParams) -> tuple[int, int]:
    """``(n_f2, n_f1)`` with ``n_f2 ~ 1 / [2 (gamma0 + gamma_M) tau]`` and ``n_f1 ~ 1 / (4 gamma_M tau)``."""
    gm = gamma_M(params.a, params.tau)
    n_f2 = max(1, int(round(1 / (2 * (params.gamma0 + gm) * params.tau))))
    n_f1 = max(1, int(round(1 / (4 * gm * params.tau))))
    return n_f2, n_f1
