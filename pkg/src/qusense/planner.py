"""Data-acquisition-time planning.

For each correlation order the time needed to reach SNR = 1 is a closed
form in the measurement strength ``gamma_M``.  The planner minimizes it
over ``0 < gamma_M <= gamma_M_max`` (bounded scalar search on
``log gamma_M`` plus an explicit comparison with the boundary), reports
the second-order infeasible zone ``gamma0 S_C >= a^2 / 2`` together with the
SNR ceiling ``a^2 / (2 gamma0 S_C)``, and provides the approximate scaling
laws for cross-checking.

Dimensionless rates are ``bar g = 2 g S_C / a^2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import gamma_M_max

__all__ = [
    "PlanPoint",
    "required_T_2nd",
    "required_T_4th",
    "optimize_T",
    "scaling_T_2nd",
    "scaling_T_4th",
    "plan_map",
    "opt_fraction",
    "reduced_rate_2nd",
    "reduced_objective_2nd",
    "optimize_reduced_2nd",
    "snr_bound_2nd",
    "PLAN_COLUMNS",
]

PLAN_COLUMNS = ("S_C", "gamma0", "order", "gammaM_opt", "T_opt", "feasible", "snr_bound")
_XTOL = 1e-10


@dataclass(frozen=True)
class PlanPoint:
    """Optimal acquisition plan for one ``(S_C, gamma0)`` cell.

    ``gammaM_opt`` and ``T_opt`` are ``nan`` and ``inf`` when the cell is
    infeasible; ``snr_bound`` is the largest second-order SNR reachable at
    any acquisition time (``inf`` for fourth order).
    """

    S_C: float
    gamma0: float
    a: float
    order: str
    gammaM_opt: float
    T_opt: float
    feasible: bool
    snr_bound: float

    @property
    def gamma0_bar(self) -> float:
        return 2 * self.gamma0 * self.S_C / self.a**2

    @property
    def gammaM_bar(self) -> float:
        return 2 * self.gammaM_opt * self.S_C / self.a**2

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in PLAN_COLUMNS}


def _check_order(order: str) -> str:
    if order not in ("2nd", "4th"):
        raise ValueError(f"order must be '2nd' or '4th', got {order!r}")
    return order


def required_T_2nd(gamma_m, gamma0, s_c, a):
    """Acquisition time for two-point SNR = 1.

    ``G / (4 gamma_M^2) e^{8 gamma_M S/a^2} / (1 - 4 G^2 S^2 / a^4)`` with
    ``G = gamma0 + gamma_M``; ``inf`` when ``G S >= a^2 / 2``.
    """
    rate = np.asarray(gamma0 + gamma_m, dtype=float)
    denom = 1 - 4 * rate**2 * s_c**2 / a**4
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = rate / (4 * gamma_m**2) * np.exp(8 * gamma_m * s_c / a**2) / denom
    out = np.where(denom > 0, t, np.inf)
    return float(out) if out.ndim == 0 else out


def required_T_4th(gamma_m, gamma0, s_c, a):
    """Acquisition time for four-point SNR = 1: ``2 (gamma_M + gamma0)^2 / gamma_M^3 e^{8 gamma_M S/a^2}``."""
    with np.errstate(over="ignore"):
        out = 2 * (gamma_m + gamma0) ** 2 / gamma_m**3 * np.exp(8 * gamma_m * s_c / a**2)
    return float(out) if np.ndim(out) == 0 else out


def snr_bound_2nd(gamma0: float, s_c: float, a: float) -> float:
    """Ceiling ``a^2 / (2 gamma0 S_C)`` of the two-point SNR over all ``gamma_M`` and ``T``."""
    if gamma0 * s_c == 0:
        return math.inf
    return a**2 / (2 * gamma0 * s_c)


def _minimize_log(fn, lo: float, hi: float) -> tuple[float, float]:
    """Minimize ``fn`` over ``[lo, hi]`` by bounded search on ``log x``, keeping the better endpoint."""
    res = minimize_scalar(
        lambda y: fn(math.exp(y)), bounds=(math.log(lo), math.log(hi)), method="bounded", options={"xatol": _XTOL}
    )
    best_x, best_t = math.exp(res.x), float(res.fun)
    t_hi = fn(hi)
    if t_hi <= best_t:
        best_x, best_t = hi, t_hi
    return best_x, best_t


def optimize_T(order: str, gamma0: float, s_c: float, a: float, gm_max: float | None = None) -> PlanPoint:
    """Minimal acquisition time over ``0 < gamma_M <= gm_max``.

    Args:
        order: ``"2nd"`` or ``"4th"``.
        gamma0: Intrinsic dephasing rate.
        s_c: Classical noise spectral density.
        a: Coupling.
        gm_max: Largest accessible ``gamma_M``; defaults to the physical maximum (about ``0.18 a``).
    """
    _check_order(order)
    gm_max = gamma_M_max(a) if gm_max is None else gm_max
    if gm_max <= 0:
        raise ValueError("gm_max must be positive")
    bound = snr_bound_2nd(gamma0, s_c, a) if order == "2nd" else math.inf
    if order == "2nd":
        if gamma0 * s_c >= a**2 / 2:
            return PlanPoint(s_c, gamma0, a, order, math.nan, math.inf, False, bound)
        # feasible gamma_M satisfy (gamma0 + gamma_M) S_C < a^2 / 2
        hi = gm_max if s_c == 0 else min(gm_max, a**2 / (2 * s_c) - gamma0)
        hi_open = hi < gm_max
        if hi_open:
            hi *= 1 - 1e-9
        fn = lambda g: required_T_2nd(g, gamma0, s_c, a)  # noqa: E731
    else:
        hi = gm_max
        fn = lambda g: required_T_4th(g, gamma0, s_c, a)  # noqa: E731
    lo = hi * 1e-9
    g_opt, t_opt = _minimize_log(fn, lo, hi)
    return PlanPoint(s_c, gamma0, a, order, g_opt, t_opt, bool(np.isfinite(t_opt)), bound)


def scaling_T_4th(gamma0: float, s_c: float, a: float, gm_max: float | None = None) -> float:
    """Approximate optimal four-point time.

    ``(8 S/a^2)(1 + 8 gamma0 S/a^2)^2`` when ``gamma_M_max S >= a^2/8`` (the
    interior optimum is reachable), else ``(1/gamma_M_max)(1 + gamma0/gamma_M_max)^2``.
    """
    gm_max = gamma_M_max(a) if gm_max is None else gm_max
    if gm_max * s_c >= a**2 / 8:
        return 8 * s_c / a**2 * (1 + 8 * gamma0 * s_c / a**2) ** 2
    return (1 / gm_max) * (1 + gamma0 / gm_max) ** 2


def scaling_T_2nd(gamma0: float, s_c: float, a: float, gm_max: float | None = None) -> float:
    """Approximate optimal two-point time, ``inf`` in the infeasible zone.

    ``(S/a^2)(1 - 2 gamma0 S/a^2)^{-3}`` when ``(gamma0 + gamma_M_max) S >= a^2/2``,
    else ``(1/gamma_M_max)(1 + gamma0/gamma_M_max) / (1 - 2 gamma0 S/a^2)``.
    """
    gm_max = gamma_M_max(a) if gm_max is None else gm_max
    g0_bar = 2 * gamma0 * s_c / a**2
    if g0_bar >= 1:
        return math.inf
    if (gamma0 + gm_max) * s_c >= a**2 / 2:
        return s_c / a**2 * (1 - g0_bar) ** -3
    return (1 / gm_max) * (1 + gamma0 / gm_max) / (1 - g0_bar)


def opt_fraction(g0_bar: float) -> float:
    """Fraction ``bar g_M / (1 - bar g_0)`` at the interior optimum of the reduced objective.

    ``1 - (2/3) / (1 + sqrt(1 - 8 (1 - bar g_0) / 9))``; it increases from 1/2
    at ``bar g_0 = 0`` towards 2/3 as ``bar g_0 -> 1``.
    """
    if not 0 <= g0_bar < 1:
        raise ValueError("bar gamma0 must lie in [0, 1)")
    return 1 - (2 / 3) / (1 + math.sqrt(1 - 8 * (1 - g0_bar) / 9))


def reduced_objective_2nd(gm_bar, g0_bar):
    """Inverse-time proxy ``bar g_M^2 (1 - bar g_0 - bar g_M) / (bar g_0 + bar g_M)`` to be maximized."""
    return gm_bar**2 * (1 - g0_bar - gm_bar) / (g0_bar + gm_bar)


def reduced_rate_2nd(g0_bar: float) -> float:
    """Interior optimum ``bar g_M = (1 - bar g_0) opt_fraction(bar g_0)``."""
    return (1 - g0_bar) * opt_fraction(g0_bar)


def optimize_reduced_2nd(g0_bar: float) -> float:
    """Numerical maximizer of :func:`reduced_objective_2nd` over ``0 < bar g_M < 1 - bar g_0``."""
    if not 0 <= g0_bar < 1:
        raise ValueError("bar gamma0 must lie in [0, 1)")
    hi = 1 - g0_bar
    res = minimize_scalar(
        lambda g: -reduced_objective_2nd(g, g0_bar), bounds=(0, hi), method="bounded", options={"xatol": 1e-12}
    )
    return float(res.x)


def plan_map(
    order: str,
    s_c_grid,
    gamma0_grid,
    a: float,
    gm_max: float | None = None,
    threads: int = 1,
) -> list[PlanPoint]:
    """:func:`optimize_T` over every ``(S_C, gamma0)`` cell, ordered by ``S_C`` then ``gamma0``."""
    _check_order(order)
    s_c_grid = np.atleast_1d(np.asarray(s_c_grid, dtype=float))
    gamma0_grid = np.atleast_1d(np.asarray(gamma0_grid, dtype=float))
    if s_c_grid.size == 0 or gamma0_grid.size == 0:
        raise ValueError("grids must be non-empty")
    cells = [(float(s), float(g)) for s in s_c_grid for g in gamma0_grid]
    job = lambda cell: optimize_T(order, cell[1], cell[0], a, gm_max)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, cells))
    return [job(c) for c in cells]
