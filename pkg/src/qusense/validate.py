"""Self-check suite run by ``qusense validate``.

Each check returns a name, a pass flag, the worst observed deviation and
its tolerance.  ``inject_fault="perturb-mz"`` replaces the z-readout map by
a slightly corrupted copy so that the classical-noise-free check can be
seen to fail.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .correlators import exact_G4_grid
from .dynamics import (
    ShotLabel,
    SimParams,
    SuperOpSet,
    build_superops,
    kraus_pair,
    kraus_superop,
    outcome_superops,
)
from .noise import NoNoise, OrnsteinUhlenbeck, Scaled, Telegraph, WhiteNoise, coherence_factor, sample_phases
from .pauli import (
    CorrSignString,
    PauliOperator,
    SuperOperator,
    anti_half,
    comm_half,
    eval_correlation,
)
from .planner import optimize_T, snr_bound_2nd
from .spectra import snr_2nd_rates

__all__ = ["CheckResult", "FAULTS", "run_checks"]

FAULTS = ("perturb-mz",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _result(name: str, deviation: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(deviation <= tolerance), float(deviation), float(tolerance), detail)


def _random_hermitian(rng) -> PauliOperator:
    return PauliOperator(*rng.normal(size=4))


def check_half_brackets_hermitian(rng) -> CheckResult:
    worst = 0.0
    for _ in range(50):
        a, b = _random_hermitian(rng), _random_hermitian(rng)
        for sup in (anti_half(a), comm_half(a)):
            out = sup @ b
            worst = max(worst, float(np.max(np.abs(np.imag(out._raw())))))
    return _result("pauli.half_brackets_hermitian", worst, 1e-12)


def check_classical_strings(rng) -> CheckResult:
    worst = 0.0
    for signs in ("+-", "+-+", "++-", "+--+", "-"):
        times = tuple(np.sort(rng.uniform(0, 5, len(signs)))[::-1] + np.arange(len(signs))[::-1])
        string = CorrSignString.parse(signs, times)
        val = eval_correlation(string, field=lambda t: PauliOperator(np.cos(t) + 2.0))
        worst = max(worst, abs(val))
    return _result("pauli.classical_signal_has_no_quantum_correlation", worst, 1e-12)


def check_known_correlations(rng) -> CheckResult:
    params = SimParams(a=0.7, omega0=1.3, gamma0=0.0, tau=1.0)
    a, w = params.a, params.omega0
    worst = 0.0
    for _ in range(20):
        t = np.sort(rng.uniform(0, 10, 4))[::-1]
        cpp = eval_correlation(CorrSignString.parse("++", (t[0], t[3])), params)
        worst = max(worst, abs(cpp - a**2 * np.cos(w * (t[0] - t[3]))))
        cq = eval_correlation(CorrSignString.parse("+--+", tuple(t)), params)
        expect = a**4 * np.sin(w * (t[0] - t[1])) * np.sin(w * (t[2] - t[3]))
        worst = max(worst, abs(cq - expect))
        c3 = eval_correlation(CorrSignString.parse("+-+", tuple(t[:3])), params)
        worst = max(worst, abs(c3))
    return _result("pauli.target_correlations", worst, 1e-12)


def _param_samples(rng, n: int = 10) -> list[SimParams]:
    return [
        SimParams(a=rng.uniform(0, 3), omega0=rng.uniform(-3, 3), gamma0=rng.uniform(0, 0.5), tau=rng.uniform(0.05, 1))
        for _ in range(n)
    ]


def check_channel_identity(rng) -> CheckResult:
    worst = 0.0
    for p in _param_samples(rng):
        ops = build_superops(p, "exact")
        for axis in "xyz":
            plus, minus = kraus_pair(ShotLabel(axis), p, "exact")
            total = kraus_superop([plus]) + kraus_superop([minus])
            worst = max(worst, float(np.max(np.abs(total.matrix - ops.M0.matrix))))
            comp = plus.conj().T @ plus + minus.conj().T @ minus
            worst = max(worst, float(np.max(np.abs(comp - np.eye(2)))))
    return _result("dynamics.channel_identity", worst, 1e-12)


def check_noise_mixing(rng) -> CheckResult:
    worst = 0.0
    for p in _param_samples(rng):
        phase = rng.uniform(-np.pi, np.pi)
        for mode in ("exact", "short_time"):
            ops = build_superops(p, mode)
            for axis in "xyz":
                kp, km = kraus_pair(ShotLabel(axis), p, mode, phase)
                sp, sm = outcome_superops(axis, ops, phase)
                worst = max(worst, float(np.max(np.abs(kraus_superop([kp]).matrix - sp.matrix))))
                worst = max(worst, float(np.max(np.abs(kraus_superop([km]).matrix - sm.matrix))))
    return _result("dynamics.noise_phase_mixing", worst, 1e-12)


def check_exact_vs_short(rng) -> CheckResult:
    ratio = 0.0
    for alpha in np.linspace(0.01, 0.3, 6):
        for phi in np.linspace(0.01, 0.3, 6):
            p = SimParams.from_angles(alpha, phi)
            ex, st = build_superops(p, "exact"), build_superops(p, "short_time")
            diff = max(
                float(np.max(np.abs(getattr(ex, k).matrix - getattr(st, k).matrix))) for k in ("M0", "Mx", "My", "Mz")
            )
            ratio = max(ratio, diff / (10 * (alpha * phi + alpha**3)))
    return _result("dynamics.exact_vs_short_time", ratio, 1.0, "max diff / 10(alpha phi + alpha^3)")


def _classical_models():
    return [
        WhiteNoise(5.0),
        OrnsteinUhlenbeck(variance=4.0, tau_c=3.0),
        Scaled(OrnsteinUhlenbeck(variance=4.0, tau_c=3.0), durations=(1e9,), amplitudes=(0.7,)),
    ]


def check_classical_noise_free(rng, ops_hook: Callable[[SuperOpSet], SuperOpSet] | None) -> CheckResult:
    worst = 0.0
    for mode in ("exact", "short_time"):
        p = SimParams(a=0.0, omega0=1.1, gamma0=0.01, tau=0.5)
        ops = build_superops(p, mode)
        if ops_hook is not None:
            ops = ops_hook(ops)
        for model in _classical_models():
            grid = exact_G4_grid(5, 5, 5, p, model, ops=ops)
            worst = max(worst, float(np.max(np.abs(grid))))
        paths = np.array(
            [sample_phases(Telegraph(b=2.0, gamma_f=0.3), 40, p.tau, seed=s).phases for s in range(200)]
        )
        grid = exact_G4_grid(5, 5, 5, p, None, ops=ops, paths=paths)
        worst = max(worst, float(np.max(np.abs(grid))))
    return _result("correlators.classical_noise_free", worst, 1e-12)


def check_noise_factorization(rng) -> CheckResult:
    worst = 0.0
    for p in _param_samples(rng, 4):
        model = WhiteNoise(rng.uniform(0, 2))
        with_noise = exact_G4_grid(4, 3, 4, p, model)
        clean = exact_G4_grid(4, 3, 4, p, NoNoise())
        worst = max(worst, float(np.max(np.abs(with_noise - coherence_factor(model, p.tau) ** 2 * clean))))
    return _result("correlators.white_noise_factorization", worst, 1e-12)


def check_noise_determinism(rng) -> CheckResult:
    worst = 0.0
    for model in (WhiteNoise(1.0), OrnsteinUhlenbeck(1.0, 2.0), Telegraph(1.0, 0.5)):
        a = sample_phases(model, 500, 0.1, seed=42).phases
        b = sample_phases(model, 500, 0.1, seed=42).phases
        worst = max(worst, float(np.max(np.abs(a - b))))
    return _result("noise.determinism", worst, 0.0)


def check_white_zone(rng) -> CheckResult:
    bad = 0
    for s_c in np.geomspace(0.1, 10, 9):
        for g0 in np.geomspace(1e-3, 0.3, 9):
            pt = optimize_T("2nd", g0, s_c, 1.0)
            bad += int(pt.feasible == (g0 * s_c >= 0.5))
    return _result("planner.white_zone", bad, 0, "misclassified cells")


def check_snr_bound(rng) -> CheckResult:
    worst = 0.0
    a = 1.0
    for _ in range(10):
        g0, s_c = rng.uniform(1e-3, 0.3), rng.uniform(0.1, 10)
        gm = np.linspace(1e-4, 0.18, 500)[:, None]
        t = np.geomspace(1e-2, 1e12, 50)[None, :]
        best = float(np.max(snr_2nd_rates(gm, g0, s_c, a, t)))
        worst = max(worst, best / snr_bound_2nd(g0, s_c, a) - 1)
    return _result("planner.snr_bound", worst, 1e-6, "relative excess over the bound")


def _perturb_mz(ops: SuperOpSet, size: float = 1e-2) -> SuperOpSet:
    mat = ops.Mz.matrix.copy()
    mat[3, 0] += size
    mat[0, 3] += size
    return ops.replace(Mz=SuperOperator(mat))


def run_checks(inject_fault: str | None = None, seed: int = 0) -> list[CheckResult]:
    """Run every invariant check; ``inject_fault`` corrupts the engine for demonstration."""
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}; choose from {FAULTS}")
    hook = _perturb_mz if inject_fault == "perturb-mz" else None
    rng = np.random.default_rng(seed)
    return [
        check_half_brackets_hermitian(rng),
        check_classical_strings(rng),
        check_known_correlations(rng),
        check_channel_identity(rng),
        check_noise_mixing(rng),
        check_exact_vs_short(rng),
        check_classical_noise_free(rng, hook),
        check_noise_factorization(rng),
        check_noise_determinism(rng),
        check_white_zone(rng),
        check_snr_bound(rng),
    ]
