import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

import oracle
from qusense.dynamics import (
    GAMMA_M_ARGMAX,
    ShotLabel,
    SimParams,
    build_superops,
    conditional_unitary,
    dephasing_Lz,
    gamma_M,
    gamma_M_max,
    idle_step,
    kraus_pair,
    kraus_superop,
    outcome_superops,
    superop_M,
    x_dephasing_Lx,
)
from qusense.pauli import MAXIMALLY_MIXED, PauliOperator, SuperOperator

params_st = st.builds(
    SimParams,
    a=st.floats(0, 3),
    omega0=st.floats(-3, 3),
    gamma0=st.floats(0, 0.5),
    tau=st.floats(0.05, 1.0),
)
bloch_st = st.lists(st.floats(-0.57, 0.57), min_size=3, max_size=3)
MODES = ("exact", "short_time")


def test_simparams_validation():
    with pytest.raises(ValueError):
        SimParams(a=-1, omega0=1, gamma0=0, tau=1)
    with pytest.raises(ValueError):
        SimParams(a=1, omega0=1, gamma0=0, tau=0)
    with pytest.raises(ValueError):
        SimParams(a=1, omega0=1, gamma0=-0.1, tau=1)
    p = SimParams.from_angles(0.2, 0.3, 1e-3, tau=0.5)
    assert np.isclose(p.alpha, 0.2) and np.isclose(p.phi, 0.3) and np.isclose(p.gamma0 * p.tau, 1e-3)


def test_shot_labels():
    assert ShotLabel.parse("xz").readout == "z"
    assert ShotLabel.parse("idle").is_idle
    assert ShotLabel(None).name == "idle"
    with pytest.raises(ValueError):
        ShotLabel("y", prep="z")
    with pytest.raises(ValueError):
        kraus_pair(ShotLabel(None), SimParams(1, 1, 0, 1))


@given(params_st, st.sampled_from([1, -1]))
def test_conditional_unitary_matches_expm(p, sign):
    h = p.omega0 * oracle.spin_matrix("z") + sign * p.a * oracle.spin_matrix("x")
    np.testing.assert_allclose(conditional_unitary(sign, p, "exact"), expm(-1j * h * p.tau), atol=1e-12)
    short = expm(-1j * p.phi * oracle.spin_matrix("z")) @ expm(-1j * sign * p.alpha * oracle.spin_matrix("x"))
    np.testing.assert_allclose(conditional_unitary(sign, p, "short_time"), short, atol=1e-12)


@pytest.mark.parametrize("mode", MODES)
def test_commuting_limits(mode):
    p = SimParams(a=0.0, omega0=1.3, gamma0=0, tau=0.7)
    free = expm(-1j * p.phi * oracle.spin_matrix("z"))
    for sign in (1, -1):
        np.testing.assert_allclose(conditional_unitary(sign, p, mode), free, atol=1e-12)
    q = SimParams(a=1.3, omega0=0.0, gamma0=0, tau=0.7)
    np.testing.assert_allclose(
        conditional_unitary(-1, q, "exact"), expm(1j * q.alpha * oracle.spin_matrix("x")), atol=1e-12
    )


def test_short_time_error_is_small():
    p = SimParams.from_angles(0.1, 0.05)
    diff = np.linalg.norm(conditional_unitary(1, p, "exact") - conditional_unitary(1, p, "short_time"), 2)
    assert diff <= 0.01


@given(params_st, st.sampled_from("xyz"), st.floats(-np.pi, np.pi))
def test_kraus_pairs_match_joint_evolution(p, axis, phase):
    kp, km = kraus_pair(ShotLabel(axis), p, "exact", phase)
    ok_p, ok_m = oracle.kraus(axis, p.a, p.omega0, p.tau, phase)
    np.testing.assert_allclose(kp, ok_p, atol=1e-12)
    np.testing.assert_allclose(km, ok_m, atol=1e-12)
    np.testing.assert_allclose(kp.conj().T @ kp + km.conj().T @ km, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("mode", MODES)
def test_decoupled_kraus_are_scalar(mode):
    p = SimParams(a=0.0, omega0=0.4, gamma0=0, tau=1)
    u = conditional_unitary(1, p, mode)
    for k in kraus_pair(ShotLabel("y"), p, mode):
        ratio = k @ np.linalg.inv(u)
        np.testing.assert_allclose(ratio, ratio[0, 0] * np.eye(2), atol=1e-12)


def test_short_time_y_readout_is_unbiased():
    p = SimParams.from_angles(0.3, 0.7)
    plus, minus = outcome_superops("y", build_superops(p, "short_time"))
    assert abs(plus.trace_of(MAXIMALLY_MIXED) - minus.trace_of(MAXIMALLY_MIXED)) < 1e-12


@given(st.floats(0, 1.0))
def test_superop_examples(alpha):
    p = SimParams.from_angles(alpha, 0.0)
    mx = superop_M("x", p, "short_time") @ MAXIMALLY_MIXED
    assert mx.allclose(np.cos(alpha) * MAXIMALLY_MIXED)
    my = superop_M("y", p, "short_time") @ MAXIMALLY_MIXED
    assert abs(my.c0) < 1e-12
    assert np.isclose(2 * my.cx, np.sin(alpha))
    for mode in MODES:
        assert (superop_M("z", p, mode) @ MAXIMALLY_MIXED).allclose(PauliOperator())


@given(params_st, bloch_st)
def test_m0_preserves_trace(p, bloch):
    rho = PauliOperator.density(bloch)
    for mode in MODES:
        assert np.isclose(superop_M("0", p, mode).trace_of(rho), 1.0, atol=1e-12)
        assert np.isclose(idle_step(p, mode).trace_of(rho), 1.0, atol=1e-12)


def test_superop_rejects_bad_arguments():
    p = SimParams(1, 1, 0, 1)
    with pytest.raises(ValueError):
        superop_M("w", p)
    with pytest.raises(ValueError):
        superop_M("x", p, "slow")


@settings(max_examples=50)
@given(params_st)
def test_channel_identity(p):
    ops = build_superops(p, "exact")
    for axis in "xyz":
        kp, km = kraus_pair(ShotLabel(axis), p, "exact")
        total = kraus_superop([kp]) + kraus_superop([km])
        np.testing.assert_allclose(total.matrix, ops.M0.matrix, atol=1e-12)


@settings(max_examples=50)
@given(params_st, st.floats(-np.pi, np.pi), st.sampled_from(MODES))
def test_noise_phase_mixing(p, phase, mode):
    ops = build_superops(p, mode)
    kp, km = kraus_pair(ShotLabel("y"), p, mode, phase)
    diff = kraus_superop([kp]).matrix - kraus_superop([km]).matrix
    expected = np.sin(phase) * ops.Mx.matrix + np.cos(phase) * ops.My.matrix
    np.testing.assert_allclose(diff, expected, atol=1e-12)
    for axis in "xz":
        kp, km = kraus_pair(ShotLabel(axis), p, mode, phase)
        sp, sm = outcome_superops(axis, ops, phase)
        np.testing.assert_allclose(kraus_superop([kp]).matrix, sp.matrix, atol=1e-12)
        np.testing.assert_allclose(kraus_superop([km]).matrix, sm.matrix, atol=1e-12)


def test_exact_vs_short_time_superops():
    for alpha in np.linspace(0, 0.3, 7):
        for phi in np.linspace(0, 0.3, 7):
            p = SimParams.from_angles(alpha, phi)
            ex, st_ = build_superops(p, "exact"), build_superops(p, "short_time")
            diff = max(np.max(np.abs(getattr(ex, k).matrix - getattr(st_, k).matrix)) for k in ("M0", "Mx", "My", "Mz"))
            assert diff <= 10 * (alpha * phi + alpha**3) + 1e-14


@given(st.floats(0, 1.5))
def test_x_dephasing_axis(alpha):
    lx = x_dephasing_Lx(alpha)
    out = lx @ PauliOperator(0.5, 0.1, 0.2, 0.3)
    np.testing.assert_allclose(np.real(out._raw()), [0.5, 0.1, 0.2 * np.cos(alpha), 0.3 * np.cos(alpha)], atol=1e-12)
    # the unconditional channel without precession is exactly this dephasing
    np.testing.assert_allclose(superop_M("0", SimParams.from_angles(alpha, 0.0), "short_time").matrix, lx.matrix)


def test_gamma_m_values():
    assert gamma_M(1.0, 0.1) == pytest.approx(0.024916777698447962, rel=1e-12)
    assert gamma_M(1.0, 1e-4) == pytest.approx(1e-4 / 4, rel=1e-6)
    assert GAMMA_M_ARGMAX == pytest.approx(1.16556118520721, rel=1e-10)
    assert gamma_M_max(1.0) == pytest.approx(0.18, abs=0.005)
    xs = np.linspace(0.01, 3, 200001)
    assert gamma_M_max(2.0) == pytest.approx(2.0 * np.max(np.sin(xs) ** 2 / (4 * xs)), rel=1e-9)
    with pytest.raises(ValueError):
        gamma_M(1.0, 0.0)


@given(params_st)
def test_gamma_m_bounded(p):
    assert 0 <= p.gamma_m <= gamma_M_max(p.a) + 1e-15


def test_dephasing_lz():
    assert dephasing_Lz(0.0, 1.0) == SuperOperator.identity()
    lz = dephasing_Lz(0.3, 0.5)
    e = np.exp(-0.15)
    np.testing.assert_allclose(np.real((lz @ PauliOperator(0, 1, 0, 0))._raw()), [0, e, 0, 0], atol=1e-15)
    assert (lz @ PauliOperator(0, 0, 0, 1)).allclose(PauliOperator(0, 0, 0, 1))
    rho = 0.5 * np.array([[1.2, 0.3 - 0.2j], [0.3 + 0.2j, 0.8]])
    np.testing.assert_allclose((lz @ PauliOperator.from_matrix(rho)).matrix, oracle.dephase(rho, 0.3, 0.5), atol=1e-15)
    with pytest.raises(ValueError):
        dephasing_Lz(-1.0, 1.0)


@pytest.mark.parametrize("mode", MODES)
def test_idle_step_pure_rotation(mode):
    p = SimParams.from_angles(0.0, 0.4)
    out = idle_step(p, mode) @ PauliOperator(0.5, 0.5, 0, 0)
    np.testing.assert_allclose(np.real(out._raw()), [0.5, 0.5 * np.cos(0.4), 0.5 * np.sin(0.4), 0], atol=1e-12)


@given(st.floats(0.0, 1.2), st.floats(0.05, 3.0), st.floats(0.0, 0.1))
def test_idle_step_transverse_eigenvalues(alpha, phi, g0):
    # rotation times diag(1, cos alpha) has determinant cos alpha; complex pair when precession dominates
    assume(np.cos(phi) ** 2 * (1 + np.cos(alpha)) ** 2 < 4 * np.cos(alpha) * (1 - 1e-6))
    block = idle_step(SimParams.from_angles(alpha, phi, g0), "short_time").matrix[1:3, 1:3]
    radius = np.max(np.abs(np.linalg.eigvals(block)))
    assert radius == pytest.approx(np.sqrt(np.cos(alpha)) * np.exp(-g0), rel=1e-9)


@pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3])
def test_idle_step_transverse_decay(alpha):
    p = SimParams.from_angles(alpha, 1.0, 1e-3)
    step = idle_step(p, "short_time")
    rate = np.sin(alpha) ** 2 / 4 + 1e-3
    vx, vy = np.array([0.5, 0.5, 0.0, 0.0]), np.array([0.5, 0.0, 0.5, 0.0])
    # within a quarter of the decay length; the O(alpha^4) rate difference accumulates beyond
    for n in range(1, int(0.25 / rate) + 1):
        vx, vy = step @ vx, step @ vy
        radius = 2 * np.sqrt(np.hypot(vx[1], vx[2]) * np.hypot(vy[1], vy[2]))
        assert radius == pytest.approx(np.exp(-n * rate), rel=0.02)
