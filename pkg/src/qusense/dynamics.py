"""Single-shot measurement dynamics of the target spin.

Each shot couples the target to a sensor prepared along x for a time
``tau``.  Conditioned on the sensor's z state the target evolves under
``U_pm = exp[-i(w0 Iz +/- a Ix) tau]``; reading the sensor along axis
``beta`` then applies one of two Kraus operators to the target.  The
resulting maps are represented as :class:`~qusense.pauli.SuperOperator`
transfer matrices:

* ``M0``: the unconditional (discarded-outcome) channel,
* ``Mx``, ``My``, ``Mz``: outcome-difference maps for each readout axis.

Two construction modes are offered.  ``"exact"`` builds everything from the
full conditional unitaries.  ``"short_time"`` factorizes the unitary into a
free precession followed by the coupling kick and yields closed forms in
terms of the half-bracket superoperators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from .pauli import PAULI_MATRICES, SuperOperator, anti_half, comm_half, spin

__all__ = [
    "Mode",
    "SimParams",
    "ShotLabel",
    "SuperOpSet",
    "conditional_unitary",
    "kraus_pair",
    "unitary_superop",
    "kraus_superop",
    "superop_M",
    "noisy_readout",
    "outcome_superops",
    "gamma_M",
    "gamma_M_max",
    "GAMMA_M_ARGMAX",
    "dephasing_Lz",
    "x_dephasing_Lx",
    "idle_step",
    "build_superops",
]

Mode = Literal["exact", "short_time"]
_MODES = ("exact", "short_time")


def _check_mode(mode: str) -> None:
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")


@dataclass(frozen=True)
class SimParams:
    """Physical constants of one run.

    Attributes:
        a: Sensor-target coupling (rad per unit time).
        omega0: Target Larmor frequency (rad per unit time).
        gamma0: Intrinsic transverse dephasing rate of the target.
        tau: Interaction time of a single shot.
    """

    a: float
    omega0: float
    gamma0: float
    tau: float

    def __post_init__(self) -> None:
        if self.a < 0:
            raise ValueError("coupling a must be non-negative")
        if self.tau <= 0:
            raise ValueError("shot duration tau must be positive")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be non-negative")

    @property
    def alpha(self) -> float:
        """Coupling angle per shot, ``a * tau``."""
        return self.a * self.tau

    @property
    def phi(self) -> float:
        """Free precession angle per shot, ``omega0 * tau``."""
        return self.omega0 * self.tau

    @property
    def gamma_m(self) -> float:
        """Measurement-induced dephasing rate."""
        return gamma_M(self.a, self.tau)

    @classmethod
    def from_angles(cls, alpha: float, phi: float, gamma0_tau: float = 0.0, tau: float = 1.0) -> SimParams:
        """Build parameters from dimensionless per-shot angles."""
        return cls(a=alpha / tau, omega0=phi / tau, gamma0=gamma0_tau / tau, tau=tau)


@dataclass(frozen=True)
class ShotLabel:
    """Preparation and readout axes of one shot; ``readout=None`` marks an idle shot."""

    readout: str | None = "y"
    prep: str = "x"

    def __post_init__(self) -> None:
        if self.prep != "x":
            raise ValueError("only x preparation of the sensor is supported")
        if self.readout is not None and self.readout not in ("x", "y", "z"):
            raise ValueError(f"readout axis must be x, y, z or None, got {self.readout!r}")

    @property
    def is_idle(self) -> bool:
        return self.readout is None

    @property
    def name(self) -> str:
        return "idle" if self.readout is None else f"{self.prep}{self.readout}"

    @classmethod
    def parse(cls, name: str) -> ShotLabel:
        if name == "idle":
            return cls(None)
        if len(name) != 2:
            raise ValueError(f"cannot parse shot label {name!r}")
        return cls(readout=name[1], prep=name[0])


def _su2(theta_vec: np.ndarray) -> np.ndarray:
    """``exp(-i theta.sigma / 2)`` in closed form."""
    theta = float(np.linalg.norm(theta_vec))
    if theta == 0.0:
        return np.eye(2, dtype=complex)
    n = theta_vec / theta
    gen = sum(c * p for c, p in zip(n, PAULI_MATRICES[1:]))
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * gen


def conditional_unitary(sign: int, params: SimParams, mode: Mode = "exact") -> np.ndarray:
    """Target evolution during one shot given sensor state ``sign = +1/-1`` along z.

    Exact mode returns ``exp[-i(w0 Iz + sign a Ix) tau]``; short-time mode
    returns ``exp(-i phi Iz) exp(-i sign alpha Ix)``.
    """
    _check_mode(mode)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    alpha, phi = params.alpha, params.phi
    if mode == "exact":
        return _su2(np.array([sign * alpha, 0.0, phi]))
    return _su2(np.array([0.0, 0.0, phi])) @ _su2(np.array([sign * alpha, 0.0, 0.0]))


def kraus_pair(
    label: ShotLabel, params: SimParams, mode: Mode = "exact", noise_phase: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Kraus operators ``<+beta|U|x>`` and ``<-beta|U|x>`` acting on the target.

    The sensor branches pick up opposite phases ``-/+ noise_phase / 2`` from
    the classical field.
    """
    if label.is_idle:
        raise ValueError("idle shots have no readout axis")
    u_p = np.exp(-0.5j * noise_phase) * conditional_unitary(1, params, mode)
    u_m = np.exp(0.5j * noise_phase) * conditional_unitary(-1, params, mode)
    # sensor |x> = (|+z> + |-z>)/sqrt2; bra coefficients of <+-beta| on (|+z>, |-z>)
    bras = {
        "x": ((1, 1), (1, -1)),
        "y": ((1, -1j), (1, 1j)),
        "z": ((np.sqrt(2), 0), (0, np.sqrt(2))),
    }[label.readout]
    return tuple((b[0] * u_p + b[1] * u_m) / 2 for b in bras)


def unitary_superop(u: np.ndarray) -> SuperOperator:
    """Transfer matrix of ``rho -> U rho U^dagger``."""
    return kraus_superop([u])


def kraus_superop(ops, coeffs=None) -> SuperOperator:
    """Transfer matrix of ``rho -> sum_k c_k K_k rho K_k^dagger``."""
    coeffs = np.ones(len(ops)) if coeffs is None else coeffs
    mat = np.empty((4, 4))
    for j, pj in enumerate(PAULI_MATRICES):
        out = sum(c * k @ pj @ k.conj().T for c, k in zip(coeffs, ops))
        for i, pi in enumerate(PAULI_MATRICES):
            mat[i, j] = np.real(np.trace(pi @ out)) / 2
    return SuperOperator(mat)


def _cross_superop(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Transfer matrix of ``rho -> left rho right^dagger`` (complex in general)."""
    mat = np.empty((4, 4), dtype=complex)
    for j, pj in enumerate(PAULI_MATRICES):
        out = left @ pj @ right.conj().T
        for i, pi in enumerate(PAULI_MATRICES):
            mat[i, j] = np.trace(pi @ out) / 2
    return mat


def _short_time_superops(alpha: float, phi: float) -> dict[str, SuperOperator]:
    ix2 = 2 * spin("x")
    plus = anti_half(ix2)
    minus = comm_half(ix2)
    plus_sq = plus @ plus
    one = SuperOperator.identity()
    rot = unitary_superop(_su2(np.array([0.0, 0.0, phi])))
    s2 = 2 * np.sin(alpha / 2) ** 2
    return {
        "0": rot @ (np.cos(alpha) * one + s2 * plus_sq),
        "x": rot @ (one - s2 * plus_sq),
        "y": rot @ (np.sin(alpha) * plus),
        "z": rot @ (np.sin(alpha) * minus),
    }


def _exact_superops(params: SimParams) -> dict[str, SuperOperator]:
    u_p = conditional_unitary(1, params, "exact")
    u_m = conditional_unitary(-1, params, "exact")
    pp = _cross_superop(u_p, u_p)
    mm = _cross_superop(u_m, u_m)
    mp = _cross_superop(u_m, u_p)
    pm = _cross_superop(u_p, u_m)
    return {
        "0": SuperOperator(np.real((pp + mm) / 2)),
        "x": SuperOperator(np.real((mp + pm) / 2)),
        "y": SuperOperator(np.real((mp - pm) / 2j)),
        "z": SuperOperator(np.real((pp - mm) / 2)),
    }


def superop_M(axis: str, params: SimParams, mode: Mode = "exact") -> SuperOperator:
    """One of the four basic measurement superoperators ``M_0, M_x, M_y, M_z``.

    Args:
        axis: ``"0"`` for the unconditional channel, else the readout axis.
        params: Physical constants.
        mode: ``"exact"`` or ``"short_time"``.
    """
    _check_mode(mode)
    if axis not in ("0", "x", "y", "z"):
        raise ValueError(f"axis must be one of 0, x, y, z; got {axis!r}")
    if mode == "exact":
        return _exact_superops(params)[axis]
    return _short_time_superops(params.alpha, params.phi)[axis]


def noisy_readout(axis: str, ops: SuperOpSet, noise_phase: float) -> SuperOperator:
    """Outcome-difference map ``M+ - M-`` for readout ``axis`` given a noise phase.

    The classical field only rotates the sensor in its xy plane, so a y
    readout becomes ``sin(phi) Mx + cos(phi) My``, an x readout becomes
    ``cos(phi) Mx - sin(phi) My`` and a z readout is unaffected.
    """
    c, s = np.cos(noise_phase), np.sin(noise_phase)
    if axis == "y":
        return s * ops.Mx + c * ops.My
    if axis == "x":
        return c * ops.Mx - s * ops.My
    if axis == "z":
        return ops.Mz
    raise ValueError(f"readout axis must be x, y or z, got {axis!r}")


def outcome_superops(axis: str, ops: SuperOpSet, noise_phase: float = 0.0) -> tuple[SuperOperator, SuperOperator]:
    """Superoperators ``(M+, M-)`` whose traces give the outcome probabilities."""
    diff = noisy_readout(axis, ops, noise_phase)
    return 0.5 * (ops.M0 + diff), 0.5 * (ops.M0 - diff)


def gamma_M(a: float, tau: float) -> float:
    """Measurement-induced dephasing rate ``sin^2(a tau) / (4 tau)``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return float(np.sin(a * tau) ** 2 / (4 * tau))


# Stationary point of sin^2(x)/x solves tan(x) = 2x.
GAMMA_M_ARGMAX = float(brentq(lambda x: np.tan(x) - 2 * x, 1.0, 1.5))


def gamma_M_max(a: float) -> float:
    """Largest measurement-induced dephasing rate reachable at coupling ``a``."""
    x = GAMMA_M_ARGMAX
    return float(a * np.sin(x) ** 2 / (4 * x))


def dephasing_Lz(gamma0: float, tau: float) -> SuperOperator:
    """Intrinsic pure dephasing over one shot.

    Transverse Bloch components shrink by ``exp(-gamma0 tau)``; the z
    component and trace are untouched.  Written as
    ``e + (1 - e)(2Iz+)^2`` with ``e = exp(-gamma0 tau)``.
    """
    if gamma0 < 0:
        raise ValueError("gamma0 must be non-negative")
    e = np.exp(-gamma0 * tau)
    plus = anti_half(2 * spin("z"))
    return e * SuperOperator.identity() + (1 - e) * (plus @ plus)


def x_dephasing_Lx(alpha: float) -> SuperOperator:
    """Back-action channel ``cos(alpha) + 2 sin^2(alpha/2) (2Ix+)^2`` of one discarded shot."""
    plus = anti_half(2 * spin("x"))
    return np.cos(alpha) * SuperOperator.identity() + 2 * np.sin(alpha / 2) ** 2 * (plus @ plus)


@dataclass(frozen=True)
class SuperOpSet:
    """The per-shot superoperators of one parameter set.

    ``Lz`` is kept separate so that every shot map is ``X @ Lz``.
    """

    M0: SuperOperator
    Mx: SuperOperator
    My: SuperOperator
    Mz: SuperOperator
    Lz: SuperOperator

    @property
    def idle(self) -> SuperOperator:
        return self.M0 @ self.Lz

    def readout(self, axis: str, noise_phase: float = 0.0) -> SuperOperator:
        """Outcome-difference map of one recorded shot including intrinsic dephasing."""
        return noisy_readout(axis, self, noise_phase) @ self.Lz

    def replace(self, **kwargs: SuperOperator) -> SuperOpSet:
        fields = {k: getattr(self, k) for k in ("M0", "Mx", "My", "Mz", "Lz")}
        fields.update(kwargs)
        return SuperOpSet(**fields)


def build_superops(params: SimParams, mode: Mode = "exact") -> SuperOpSet:
    """All per-shot superoperators for ``params`` in one pass."""
    _check_mode(mode)
    table = _exact_superops(params) if mode == "exact" else _short_time_superops(params.alpha, params.phi)
    return SuperOpSet(
        M0=table["0"], Mx=table["x"], My=table["y"], Mz=table["z"], Lz=dephasing_Lz(params.gamma0, params.tau)
    )


def idle_step(params: SimParams, mode: Mode = "exact") -> SuperOperator:
    """One discarded shot: ``M0 @ Lz``."""
    return superop_M("0", params, mode) @ dephasing_Lz(params.gamma0, params.tau)

