"""Classical noise acting on the sensor.

A classical field ``B_C(t)`` commutes with everything on the target side,
so its only effect on a shot is the accumulated phase
``phi_m = integral of B_C over shot m``.  This module samples those phases
for a few stationary families (white, Ornstein-Uhlenbeck, random telegraph)
and a piecewise-scaled wrapper that emulates drift, and provides the
matching analytic statistics: power spectral density, per-shot phase
covariance, coherence factor and the Gaussian cos/sin pair averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "NoNoise",
    "WhiteNoise",
    "OrnsteinUhlenbeck",
    "Telegraph",
    "Scaled",
    "NoiseModel",
    "NoisePath",
    "NonGaussianNoiseError",
    "make_rng",
    "sample_phases",
    "sample_field",
    "spectral_density",
    "phase_variance",
    "phase_covariance",
    "coherence_factor",
    "phase_pair_factors",
    "is_gaussian",
    "noise_to_dict",
    "noise_from_dict",
]


class NonGaussianNoiseError(ValueError):
    """Raised when a closed form that assumes Gaussian statistics is requested for other noise."""


@dataclass(frozen=True)
class NoNoise:
    kind: str = field(default="none", init=False, repr=False)


@dataclass(frozen=True)
class WhiteNoise:
    """Delta-correlated field with flat spectral density ``S_C``."""

    S_C: float
    kind: str = field(default="white", init=False, repr=False)

    def __post_init__(self) -> None:
        if self.S_C < 0:
            raise ValueError("S_C must be non-negative")


@dataclass(frozen=True)
class OrnsteinUhlenbeck:
    """Gaussian field with covariance ``variance * exp(-|t| / tau_c)``."""

    variance: float
    tau_c: float
    kind: str = field(default="ou", init=False, repr=False)

    def __post_init__(self) -> None:
        if self.variance < 0:
            raise ValueError("variance must be non-negative")
        if self.tau_c <= 0:
            raise ValueError("tau_c must be positive")


@dataclass(frozen=True)
class Telegraph:
    """Random telegraph field ``+/- b`` flipping at rate ``gamma_f``.

    Its covariance is ``b^2 exp(-2 gamma_f |t|)``.
    """

    b: float
    gamma_f: float
    kind: str = field(default="telegraph", init=False, repr=False)

    def __post_init__(self) -> None:
        if self.b < 0:
            raise ValueError("amplitude b must be non-negative")
        if self.gamma_f <= 0:
            raise ValueError("flip rate must be positive")


@dataclass(frozen=True)
class Scaled:
    """A stationary base process multiplied by a piecewise-constant amplitude.

    Segment ``k`` lasts ``durations[k]`` and scales the field by
    ``amplitudes[k]``.  The schedule must cover the whole sampled run.
    Stationary quantities (spectral density, coherence factor, closed
    forms) use the duration-weighted mean-square amplitude.
    """

    inner: NoiseModel
    durations: tuple[float, ...]
    amplitudes: tuple[float, ...]
    kind: str = field(default="scaled", init=False, repr=False)

    def __post_init__(self) -> None:
        durations = tuple(float(d) for d in self.durations)
        amplitudes = tuple(float(x) for x in self.amplitudes)
        if isinstance(self.inner, Scaled):
            raise ValueError("nested scaling is not supported")
        if not durations or len(durations) != len(amplitudes):
            raise ValueError("durations and amplitudes must be non-empty and of equal length")
        if any(d <= 0 for d in durations):
            raise ValueError("segment durations must be positive")
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def total_duration(self) -> float:
        return float(sum(self.durations))

    @property
    def mean_square_amplitude(self) -> float:
        d = np.array(self.durations)
        return float(d @ np.square(self.amplitudes) / d.sum())

    def amplitude_at(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.total_duration):
            raise ValueError(
                f"amplitude schedule covers [0, {self.total_duration}], requested up to {float(np.max(t))}"
            )
        edges = np.cumsum(self.durations)
        idx = np.minimum(np.searchsorted(edges, t, side="right"), len(edges) - 1)
        return np.asarray(self.amplitudes)[idx]


NoiseModel = Union[NoNoise, WhiteNoise, OrnsteinUhlenbeck, Telegraph, Scaled]


@dataclass(frozen=True)
class NoisePath:
    """Per-shot noise phases of one realization.

    Attributes:
        phases: ``phi_m`` for each shot, in radians.
        tau: Shot duration used for the integration.
        seed: Seed the path was generated from (``None`` if unknown).
        model: The generating model.
    """

    phases: np.ndarray
    tau: float
    seed: int | None
    model: NoiseModel

    def __len__(self) -> int:
        return len(self.phases)


def make_rng(seed) -> np.random.Generator:
    """Generator from an int, a :class:`numpy.random.SeedSequence` or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _ou_phases(model: OrnsteinUhlenbeck, n_shots: int, tau: float, rng, substeps: int) -> np.ndarray:
    dt = tau / substeps
    rho = np.exp(-dt / model.tau_c)
    n_points = n_shots * substeps + 1
    kicks = rng.standard_normal(n_points) * np.sqrt(model.variance * (1 - rho**2))
    kicks[0] = rng.standard_normal() * np.sqrt(model.variance)
    # AR(1) recursion x[k] = rho x[k-1] + kick[k], exact on the sub-grid
    x = lfilter([1.0], [1.0, -rho], kicks)
    seg = 0.5 * dt * (x[:-1] + x[1:])
    return seg.reshape(n_shots, substeps).sum(axis=1)


def _telegraph_knots(model: Telegraph, span: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Flip times (with 0 and ``span`` as end knots) and the field sign on each segment.

    Waiting times are drawn exactly from the exponential distribution.
    """
    expected = model.gamma_f * span
    chunk = max(16, int(expected + 6 * np.sqrt(expected) + 16))
    flips = []
    total = 0.0
    while total < span:
        times = total + np.cumsum(rng.exponential(1.0 / model.gamma_f, size=chunk))
        flips.append(times)
        total = times[-1]
    flip_times = np.concatenate(flips)
    flip_times = flip_times[flip_times < span]
    sign0 = 1.0 if rng.random() < 0.5 else -1.0
    knots = np.concatenate([[0.0], flip_times, [span]])
    signs = sign0 * (-1.0) ** np.arange(len(knots) - 1)
    return knots, signs


def _telegraph_cumulative(model: Telegraph, grid: np.ndarray, rng) -> np.ndarray:
    """Exact integral of a telegraph path from ``grid[0]`` to each grid point."""
    knots, signs = _telegraph_knots(model, grid[-1] - grid[0], rng)
    cum = np.concatenate([[0.0], np.cumsum(model.b * signs * np.diff(knots))])
    # piecewise-linear between knots is exact for a piecewise-constant field
    return np.interp(grid - grid[0], knots, cum)


def _stationary_phases(model: NoiseModel, n_shots: int, tau: float, rng, substeps: int) -> np.ndarray:
    if isinstance(model, NoNoise):
        return np.zeros(n_shots)
    if isinstance(model, WhiteNoise):
        return rng.standard_normal(n_shots) * np.sqrt(model.S_C * tau)
    if isinstance(model, OrnsteinUhlenbeck):
        return _ou_phases(model, n_shots, tau, rng, substeps)
    if isinstance(model, Telegraph):
        grid = tau * np.arange(n_shots + 1)
        return np.diff(_telegraph_cumulative(model, grid, rng))
    raise TypeError(f"unsupported noise model {model!r}")


def sample_phases(
    model: NoiseModel, n_shots: int, tau: float, seed=0, t0: float = 0.0, substeps: int = 16
) -> NoisePath:
    """Per-shot phases ``phi_m`` of one noise realization.

    Args:
        model: Noise family and parameters.
        n_shots: Number of consecutive shots.
        tau: Shot duration.
        seed: Integer seed, seed sequence or generator.
        t0: Start time of the first shot (used by :class:`Scaled` schedules).
        substeps: Integration sub-steps per shot for Ornstein-Uhlenbeck noise.

    Returns:
        A reproducible :class:`NoisePath`.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    if substeps < 1:
        raise ValueError("substeps must be at least 1")
    if tau <= 0:
        raise ValueError("tau must be positive")
    rng = make_rng(seed)
    if isinstance(model, Scaled):
        base = _stationary_phases(model.inner, n_shots, tau, rng, substeps)
        mid = t0 + tau * (np.arange(n_shots) + 0.5)
        phases = base * model.amplitude_at(mid)
    else:
        phases = _stationary_phases(model, n_shots, tau, rng, substeps)
    return NoisePath(phases=phases, tau=tau, seed=seed if isinstance(seed, int) else None, model=model)


def sample_field(model: NoiseModel, times: np.ndarray, seed=0) -> np.ndarray:
    """Field values ``B_C(t)`` on an increasing time grid (coloured models only)."""
    times = np.asarray(times, dtype=float)
    rng = make_rng(seed)
    if isinstance(model, NoNoise):
        return np.zeros_like(times)
    if isinstance(model, Telegraph):
        knots, signs = _telegraph_knots(model, times[-1] - times[0], rng)
        idx = np.searchsorted(knots, times - times[0], side="right") - 1
        return model.b * signs[np.minimum(idx, len(signs) - 1)]
    if isinstance(model, OrnsteinUhlenbeck):
        dts = np.diff(times)
        rho = np.exp(-dts / model.tau_c)
        out = np.empty_like(times)
        out[0] = rng.standard_normal() * np.sqrt(model.variance)
        noise = rng.standard_normal(len(dts)) * np.sqrt(model.variance * (1 - rho**2))
        for k in range(len(dts)):
            out[k + 1] = rho[k] * out[k] + noise[k]
        return out
    raise TypeError(f"field samples are not defined for {type(model).__name__}")


def spectral_density(model: NoiseModel, omega: float | np.ndarray) -> float | np.ndarray:
    """Power spectral density ``S_C(omega) = integral <B(t)B(0)> e^{i omega t} dt``."""
    omega = np.asarray(omega, dtype=float)
    if isinstance(model, NoNoise):
        out = np.zeros_like(omega)
    elif isinstance(model, WhiteNoise):
        out = np.full_like(omega, model.S_C)
    elif isinstance(model, OrnsteinUhlenbeck):
        out = 2 * model.variance * model.tau_c / (1 + (omega * model.tau_c) ** 2)
    elif isinstance(model, Telegraph):
        out = 4 * model.b**2 * model.gamma_f / (omega**2 + 4 * model.gamma_f**2)
    elif isinstance(model, Scaled):
        out = model.mean_square_amplitude * np.asarray(spectral_density(model.inner, omega))
    else:
        raise TypeError(f"unsupported noise model {model!r}")
    return float(out) if out.ndim == 0 else out


def _exp_cov_params(model: NoiseModel) -> tuple[float, float] | None:
    if isinstance(model, OrnsteinUhlenbeck):
        return model.variance, model.tau_c
    if isinstance(model, Telegraph):
        return model.b**2, 1.0 / (2 * model.gamma_f)
    return None


def phase_covariance(model: NoiseModel, tau: float, lag: int | np.ndarray) -> float | np.ndarray:
    """``<phi_{m+n} phi_m>`` for shots ``n = lag`` apart.

    Exponential covariances ``s2 exp(-|t|/tc)`` integrate to
    ``2 s2 tc^2 (x - 1 + e^{-x})`` at lag 0 and
    ``s2 tc^2 (1 - e^{-x})^2 e^{-(n-1)x}`` at lag ``n >= 1`` with ``x = tau/tc``.
    """
    lag = np.abs(np.asarray(lag))
    if isinstance(model, NoNoise):
        out = np.zeros(lag.shape)
    elif isinstance(model, WhiteNoise):
        out = np.where(lag == 0, model.S_C * tau, 0.0)
    elif isinstance(model, Scaled):
        out = model.mean_square_amplitude * np.asarray(phase_covariance(model.inner, tau, lag))
    else:
        params = _exp_cov_params(model)
        if params is None:
            raise TypeError(f"unsupported noise model {model!r}")
        s2, tc = params
        x = tau / tc
        zero = 2 * s2 * tc**2 * (x - 1 + np.exp(-x))
        # expm1 keeps precision when tau << tc
        rest = s2 * tc**2 * np.expm1(-x) ** 2 * np.exp(-(np.maximum(lag, 1) - 1) * x)
        out = np.where(lag == 0, zero, rest)
    return float(out) if out.ndim == 0 else out


def phase_variance(model: NoiseModel, tau: float) -> float:
    """``<phi_m^2>`` for a single shot."""
    return float(phase_covariance(model, tau, 0))


def coherence_factor(model: NoiseModel, tau: float) -> float:
    """``L_C = exp(-<phi^2>/2)``: average sensor coherence left after one shot."""
    return float(np.exp(-0.5 * phase_variance(model, tau)))


def is_gaussian(model: NoiseModel) -> bool:
    if isinstance(model, Scaled):
        return is_gaussian(model.inner)
    return isinstance(model, (NoNoise, WhiteNoise, OrnsteinUhlenbeck))


def phase_pair_factors(
    model: NoiseModel, tau: float, m: int, n: int, paths: np.ndarray | None = None
) -> tuple[float, float, float, float]:
    """Averages ``(<cos cos>, <sin sin>, <sin cos>, <cos sin>)`` of ``phi_m`` and ``phi_n``.

    Gaussian zero-mean models use ``e^{-(v_m+v_n)/2} cosh(c)`` and
    ``e^{-(v_m+v_n)/2} sinh(c)`` with ``c = <phi_m phi_n>``; the mixed averages
    vanish.  Other models need ``paths``, an array of shape
    ``(n_realizations, n_shots)``, from which the averages are estimated.
    """
    if paths is not None:
        pm, pn = paths[:, m], paths[:, n]
        return (
            float(np.mean(np.cos(pm) * np.cos(pn))),
            float(np.mean(np.sin(pm) * np.sin(pn))),
            float(np.mean(np.sin(pm) * np.cos(pn))),
            float(np.mean(np.cos(pm) * np.sin(pn))),
        )
    if not is_gaussian(model):
        raise NonGaussianNoiseError(
            f"{type(model).__name__} noise has no closed-form pair factors; pass sampled paths"
        )
    v = phase_variance(model, tau)
    c = float(phase_covariance(model, tau, m - n))
    damp = np.exp(-v)
    return float(damp * np.cosh(c)), float(damp * np.sinh(c)), 0.0, 0.0


def noise_to_dict(model: NoiseModel) -> dict:
    if isinstance(model, NoNoise):
        return {"kind": "none"}
    if isinstance(model, WhiteNoise):
        return {"kind": "white", "S_C": model.S_C}
    if isinstance(model, OrnsteinUhlenbeck):
        return {"kind": "ou", "variance": model.variance, "tau_c": model.tau_c}
    if isinstance(model, Telegraph):
        return {"kind": "telegraph", "b": model.b, "gamma_f": model.gamma_f}
    if isinstance(model, Scaled):
        return {
            "kind": "scaled",
            "inner": noise_to_dict(model.inner),
            "durations": list(model.durations),
            "amplitudes": list(model.amplitudes),
        }
    raise TypeError(f"unsupported noise model {model!r}")


def noise_from_dict(data: dict) -> NoiseModel:
    data = dict(data)
    kind = data.pop("kind")
    if kind == "none":
        return NoNoise()
    if kind == "white":
        return WhiteNoise(**data)
    if kind == "ou":
        return OrnsteinUhlenbeck(**data)
    if kind == "telegraph":
        return Telegraph(**data)
    if kind == "scaled":
        return Scaled(
            inner=noise_from_dict(data["inner"]),
            durations=tuple(data["durations"]),
            amplitudes=tuple(data["amplitudes"]),
        )
    raise ValueError(f"unknown noise kind {kind!r}")
