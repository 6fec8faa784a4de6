"""Exact output correlations by superoperator propagation, and their closed forms.

The exact engine composes one transfer matrix per physical shot in
temporal order.  Every shot carries intrinsic dephasing, so a discarded
shot is ``M0 @ Lz`` and a recorded shot with readout ``b`` contributes the
outcome-difference map ``M_b,m @ Lz``.  Classical noise enters a y readout
through ``sin(phi_m) Mx + cos(phi_m) My``; averaging a correlation over
noise therefore needs only the pair averages of cos/sin of the two y
phases, which come either from closed Gaussian forms or from sampled paths.

Two sequences are covered:

* pattern ``[xy]``: every shot read along y, lags in units of ``tau``;
* pattern ``[xy, xz]``: cycles of a y shot followed by a z shot, lags in
  units of ``2 tau``.  The fourth-order correlation of cycles
  ``j > k > m > n`` uses the y shot of cycles ``j`` and ``n`` and the z
  shot of cycles ``k`` and ``m``.
"""

from __future__ import annotations

import numpy as np

from .dynamics import Mode, SimParams, SuperOpSet, build_superops
from .noise import (
    NoiseModel,
    NoNoise,
    WhiteNoise,
    coherence_factor,
    phase_covariance,
    phase_pair_factors,
)

__all__ = [
    "exact_G2",
    "exact_G2_series",
    "exact_G4",
    "exact_G4_grid",
    "closedform_G2",
    "closedform_G2_series",
    "closedform_G4",
    "closedform_G4_grid",
    "g4_shot_separations",
]

_RHO = np.array([0.5, 0.0, 0.0, 0.0])
_TRACE = np.array([2.0, 0.0, 0.0, 0.0])


def _as_model(noise) -> NoiseModel:
    if noise is None:
        return NoNoise()
    if isinstance(noise, (int, float)):
        return WhiteNoise(float(noise)) if noise > 0 else NoNoise()
    return noise


def _pair_weights(noise, tau: float, late, early, paths: np.ndarray | None) -> dict[tuple[str, str], np.ndarray]:
    """Noise weights of the four (late, early) endpoint combinations.

    Keys name the superoperator at each y readout: ``("y", "y")`` pairs with
    ``<cos cos>``, ``("x", "x")`` with ``<sin sin>``, ``("x", "y")`` with
    ``<sin_late cos_early>`` and ``("y", "x")`` with ``<cos_late sin_early>``.
    """
    late = np.atleast_1d(late)
    early = np.atleast_1d(early)
    table = np.array(
        [phase_pair_factors(_as_model(noise), tau, int(l), int(e), paths) for l, e in zip(late, early)]
    )
    cc, ss, sc, cs = table.T
    return {("y", "y"): cc, ("x", "x"): ss, ("x", "y"): sc, ("y", "x"): cs}


def _ops(params: SimParams, mode: Mode, ops: SuperOpSet | None) -> SuperOpSet:
    return build_superops(params, mode) if ops is None else ops


def exact_G2_series(
    max_lag: int,
    params: SimParams,
    noise=None,
    *,
    mode: Mode = "exact",
    ops: SuperOpSet | None = None,
    paths: np.ndarray | None = None,
    start: int = 0,
) -> np.ndarray:
    """``G2(n)`` for ``n = 1 .. max_lag`` on the ``[xy]`` sequence.

    Args:
        max_lag: Largest lag in shots.
        params: Physical constants.
        noise: Noise model (or a white-noise ``S_C`` as a number).  Ignored
            when ``paths`` is given.
        mode: Superoperator construction mode.
        ops: Precomputed superoperators, e.g. with a deliberately perturbed map.
        paths: Optional sampled phases, shape ``(n_realizations, n_shots)``;
            the correlation is averaged over rows.
        start: Shot index of the earlier readout when ``paths`` is given.

    Returns:
        Array of length ``max_lag``.
    """
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    ops = _ops(params, mode, ops)
    maps = {"x": ops.Mx.matrix @ ops.Lz.matrix, "y": ops.My.matrix @ ops.Lz.matrix}
    idle = ops.idle.matrix
    lags = np.arange(1, max_lag + 1)
    weights = _pair_weights(noise, params.tau, start + lags, np.full_like(lags, start), paths)
    out = np.zeros(max_lag)
    for (late, early), w in weights.items():
        if not np.any(w):
            continue
        left = _TRACE @ maps[late]
        vec = maps[early] @ _RHO
        vals = np.empty(max_lag)
        for k in range(max_lag):
            vals[k] = left @ vec
            vec = idle @ vec
        out += w * vals
    return out


def exact_G2(n: int, params: SimParams, noise=None, **kwargs) -> float:
    """Noise-averaged ``<s_{m+n} s_m>`` for y readouts ``n`` shots apart."""
    if n < 1:
        raise ValueError("lag must be at least 1")
    return float(exact_G2_series(n, params, noise, **kwargs)[-1])


def g4_shot_separations(u, v, w):
    """Shot counts between the four readouts of lag triple ``(u, v, w)``.

    Returns the separations (late y - late z, z - z, early z - early y):
    ``2u - 1``, ``2v`` and ``2w + 1``.
    """
    u, v, w = (np.asarray(x) for x in (u, v, w))
    return 2 * u - 1, 2 * v, 2 * w + 1


def _matrix_powers(mat: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((n + 1, 4, 4))
    out[0] = np.eye(4)
    for k in range(n):
        out[k + 1] = mat @ out[k]
    return out


def exact_G4_grid(
    n_u: int,
    n_v: int,
    n_w: int,
    params: SimParams,
    noise=None,
    *,
    mode: Mode = "exact",
    ops: SuperOpSet | None = None,
    paths: np.ndarray | None = None,
    start: int = 0,
) -> np.ndarray:
    """``G4(u, v, w)`` on the grid ``1..n_u x 1..n_v x 1..n_w`` of cycle lags.

    Temporal order: y readout, ``2w`` idle shots, z readout, ``2v - 1`` idle
    shots, z readout, ``2u - 2`` idle shots, y readout.  ``start`` is the
    shot index of the earliest y readout when ``paths`` is given.
    """
    if min(n_u, n_v, n_w) < 1:
        raise ValueError("grid sizes must be at least 1")
    ops = _ops(params, mode, ops)
    lz = ops.Lz.matrix
    maps = {"x": ops.Mx.matrix @ lz, "y": ops.My.matrix @ lz}
    z = ops.Mz.matrix @ lz
    powers = _matrix_powers(ops.idle.matrix, 2 * max(n_u, n_v, n_w))
    u = np.arange(1, n_u + 1)
    v = np.arange(1, n_v + 1)
    w = np.arange(1, n_w + 1)
    mid = z @ powers[2 * v - 1]
    total = 2 * (u[:, None, None] + v[None, :, None] + w[None, None, :])
    flat = total.ravel()
    weights = _pair_weights(noise, params.tau, start + flat, np.full_like(flat, start), paths)
    out = np.zeros(total.shape)
    for (late, early), wt in weights.items():
        if not np.any(wt):
            continue
        left = (_TRACE @ maps[late]) @ powers[2 * u - 2]
        right = np.einsum("wij,j->wi", z @ powers[2 * w], maps[early] @ _RHO)
        grid = np.einsum("ui,vij,wj->uvw", left, mid, right)
        out += wt.reshape(total.shape) * grid
    return out


def exact_G4(u: int, v: int, w: int, params: SimParams, noise=None, **kwargs) -> float:
    """Noise-averaged four-point output correlation at cycle lags ``(u, v, w)``.

    A grid entry is computed on its own by evaluating the single-point grid
    with the lags shifted into the first cell.
    """
    if min(u, v, w) < 1:
        raise ValueError("lags must be at least 1")
    return float(exact_G4_grid(u, v, w, params, noise, **kwargs)[u - 1, v - 1, w - 1])


def closedform_G2_series(
    lags, params: SimParams, noise=None, *, dt: float | None = None
) -> np.ndarray:
    """Leading-order ``G2``: damped cosine signal plus the noise phase covariance.

    ``L^2 sin^2(alpha) cos(w0 t) e^{-(gamma0 + gamma_M) t} + L^2 <phi_{m+n} phi_m>``
    with ``t = n dt``.  Lag 0 is allowed and gives ``L^2 (sin^2 alpha + <phi^2>)``.
    """
    model = _as_model(noise)
    lags = np.asarray(lags)
    if np.any(lags < 0):
        raise ValueError("lags must be non-negative")
    dt = params.tau if dt is None else dt
    t = lags * dt
    l2 = coherence_factor(model, params.tau) ** 2
    signal = np.sin(params.alpha) ** 2 * np.cos(params.omega0 * t) * np.exp(-(params.gamma0 + params.gamma_m) * t)
    classical = np.asarray(phase_covariance(model, params.tau, np.rint(t / params.tau).astype(int)))
    return l2 * (signal + classical)


def closedform_G2(n: int, params: SimParams, noise=None, **kwargs) -> float:
    return float(closedform_G2_series(np.array([n]), params, noise, **kwargs)[0])


def closedform_G4_grid(u, v, w, params: SimParams, noise=None) -> np.ndarray:
    """Leading-order ``G4`` at cycle lags ``(u, v, w)`` (broadcast).

    ``L^2 sin^4(alpha) sin(w0 t1) sin(w0 t3) e^{-G t1 - 2 gamma_M t2 - G t3}``
    with ``G = gamma0 + gamma_M`` and physical separations
    ``t1 = (2u - 1) tau``, ``t2 = 2v tau``, ``t3 = (2w + 1) tau``.
    """
    model = _as_model(noise)
    s1, s2, s3 = (params.tau * np.asarray(x, dtype=float) for x in g4_shot_separations(u, v, w))
    rate = params.gamma0 + params.gamma_m
    l2 = coherence_factor(model, params.tau) ** 2
    return (
        l2
        * np.sin(params.alpha) ** 4
        * np.sin(params.omega0 * s1)
        * np.sin(params.omega0 * s3)
        * np.exp(-rate * (s1 + s3) - 2 * params.gamma_m * s2)
    )


def closedform_G4(u: int, v: int, w: int, params: SimParams, noise=None) -> float:
    if min(u, v, w) < 1:
        raise ValueError("lags must be at least 1")
    return float(closedform_G4_grid(u, v, w, params, noise))
