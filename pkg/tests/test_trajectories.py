import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qusense.correlators import exact_G2_series, exact_G4_grid
from qusense.dynamics import SimParams
from qusense.estimators import estimate_G2, estimate_G4, estimate_resonance_2nd, estimate_resonance_4th
from qusense.noise import NoNoise, OrnsteinUhlenbeck, Scaled, Telegraph, WhiteNoise
from qusense.spectra import dft1, dft3
from qusense.trajectories import SequenceSpec, ShotRecord, mc_run, run_noise_phases

P = SimParams.from_angles(0.2, 0.3, 1e-3)


def _record(outputs, pattern=("xy",), block_lengths=None):
    outputs = np.asarray(outputs, dtype=np.int8).reshape(-1, len(pattern))
    lengths = np.array([len(outputs)] if block_lengths is None else block_lengths)
    return ShotRecord(outputs=outputs, pattern=pattern, block_lengths=lengths, seed=0)


def _brute_g2(blocks, max_lag):
    num, den = np.zeros(max_lag + 1), 0
    for x in blocks:
        n_win = len(x) - max_lag
        if n_win <= 0:
            continue
        den += n_win
        for i in range(n_win):
            for n in range(max_lag + 1):
                num[n] += x[i] * x[i + n]
    return num / den


def _brute_g4(blocks, n_u, n_v, n_w):
    num, den = np.zeros((n_u, n_v, n_w)), 0
    for b in blocks:
        y, z = b[:, 0].astype(float), b[:, 1].astype(float)
        for m in range(n_w, len(y) - n_u - n_v):
            den += 1
            for u in range(1, n_u + 1):
                for v in range(1, n_v + 1):
                    for w in range(1, n_w + 1):
                        num[u - 1, v - 1, w - 1] += y[m + v + u] * z[m + v] * z[m] * y[m - w]
    return num / den


def test_sequence_spec_validation():
    with pytest.raises(ValueError):
        SequenceSpec(pattern=("xy", "xz", "xy"))
    with pytest.raises(ValueError):
        SequenceSpec(pattern=("idle",))
    with pytest.raises(ValueError):
        SequenceSpec(n_cycles=0)
    spec = SequenceSpec(pattern=("xy", "xz"), n_cycles=10, block_cycles=4)
    np.testing.assert_array_equal(spec.block_lengths(), [4, 4, 2])
    assert spec.cycle_time(0.5) == 1.0


def test_constant_record():
    rec = _record(np.ones(200))
    g = estimate_G2(rec, 5)
    np.testing.assert_allclose(g.values, 1.0)
    rec4 = _record(np.ones((200, 2)), pattern=("xy", "xz"))
    np.testing.assert_allclose(estimate_G4(rec4, 2, 3).values, 1.0)


def test_alternating_record():
    rec = _record(np.tile([1, -1], 100))
    g = estimate_G2(rec, 4)
    np.testing.assert_allclose(g.values, [1, -1, 1, -1, 1])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(8, 40), min_size=1, max_size=4), st.integers(0, 6), st.integers(0, 2**31))
def test_g2_estimator_matches_brute_force(lengths, max_lag, seed):
    rng = np.random.default_rng(seed)
    out = rng.choice([-1, 1], size=sum(lengths))
    rec = _record(out, block_lengths=lengths)
    edges = np.concatenate([[0], np.cumsum(lengths)])
    blocks = [out[a:b].astype(float) for a, b in zip(edges[:-1], edges[1:])]
    np.testing.assert_allclose(estimate_G2(rec, max_lag).values, _brute_g2(blocks, max_lag), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(10, 30), min_size=1, max_size=3), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**31))
def test_g4_estimator_matches_brute_force(lengths, n_u, n_v, seed):
    rng = np.random.default_rng(seed)
    out = rng.choice([-1, 1], size=(sum(lengths), 2))
    rec = _record(out, pattern=("xy", "xz"), block_lengths=lengths)
    edges = np.concatenate([[0], np.cumsum(lengths)])
    blocks = [out[a:b] for a, b in zip(edges[:-1], edges[1:])]
    got = estimate_G4(rec, n_u, n_v, 2).values
    np.testing.assert_allclose(got, _brute_g4(blocks, n_u, n_v, 2), atol=1e-12)


def test_windows_do_not_cross_blocks():
    # two constant blocks of opposite sign: any straddling window would give -1
    out = np.concatenate([np.ones(50), -np.ones(50)])
    g = estimate_G2(_record(out, block_lengths=[50, 50]), 10)
    np.testing.assert_allclose(g.values, 1.0)


@pytest.mark.parametrize("mu", [0.0, 0.3, -0.5])
def test_planted_moments_are_unbiased(mu):
    rng = np.random.default_rng(42)
    n, block = 400_000, 1000
    out = np.where(rng.random(n) < (1 + mu) / 2, 1, -1)
    g = estimate_G2(_record(out, block_lengths=[block] * (n // block)), 3)
    assert np.all(np.abs(g.values[1:] - mu**2) < 4 * g.stderr[1:])
    out4 = np.where(rng.random((n, 2)) < (1 + mu) / 2, 1, -1)
    g4 = estimate_G4(_record(out4, ("xy", "xz"), [block] * (n // block)), 2, 2)
    assert np.all(np.abs(g4.values - mu**4) < 4 * g4.stderr)


def test_estimator_errors():
    rec = _record(np.ones(20))
    with pytest.raises(ValueError):
        estimate_G4(rec, 1, 1)
    with pytest.raises(ValueError):
        estimate_G2(rec, -1)
    with pytest.raises(ValueError):
        estimate_G2(rec, 30)
    rec4 = _record(np.ones((20, 2)), pattern=("xy", "xz"))
    with pytest.raises(ValueError):
        estimate_G2(rec4, 2)
    with pytest.raises(ValueError):
        estimate_G4(rec4, 8, 8)
    with pytest.raises(ValueError):
        estimate_G4(rec4, 0, 1)
    with pytest.raises(ValueError):
        estimate_resonance_2nd(rec4, 3, 0.1)
    with pytest.raises(ValueError):
        estimate_resonance_4th(rec, 2, 2, (0.1, 0, 0.1))


def test_fast_resonance_estimators_match_transforms():
    rec = mc_run(SequenceSpec(("xy", "xz"), 20_000, 2000), P, seed=3)
    omegas = (P.omega0, 0.0, P.omega0)
    fast = estimate_resonance_4th(rec, 6, 5, omegas, tau=P.tau)
    slow = dft3(estimate_G4(rec, 6, 5, 6, tau=P.tau), omegas)
    assert fast.value == pytest.approx(slow, abs=1e-10)
    rec2 = mc_run(SequenceSpec(("xy",), 20_000, 2000), P, seed=3)
    fast2 = estimate_resonance_2nd(rec2, 12, P.omega0, tau=P.tau)
    slow2 = dft1(estimate_G2(rec2, 12, tau=P.tau), 12, P.omega0).values[0]
    assert fast2.value == pytest.approx(slow2, abs=1e-10)


def test_mc_is_deterministic_and_shard_invariant():
    seq = SequenceSpec(("xy", "xz"), 5000, 512)
    noise = OrnsteinUhlenbeck(1.0, 2.0)
    base = mc_run(seq, P, noise, seed=9)
    again = mc_run(seq, P, noise, seed=9, batch_blocks=3)
    sharded = mc_run(seq, P, noise, seed=9, shards=8, threads=2)
    other = mc_run(seq, P, noise, seed=10)
    np.testing.assert_array_equal(base.outputs, again.outputs)
    np.testing.assert_array_equal(base.outputs, sharded.outputs)
    assert not np.array_equal(base.outputs, other.outputs)
    assert base.outputs.dtype == np.int8 and set(np.unique(base.outputs)) <= {-1, 1}
    assert sharded.shards == 8


def test_full_blocks_do_not_depend_on_run_length():
    short = mc_run(SequenceSpec(("xy",), 2500, 1000), P, WhiteNoise(0.5), seed=4)
    long = mc_run(SequenceSpec(("xy",), 4000, 1000), P, WhiteNoise(0.5), seed=4)
    np.testing.assert_array_equal(short.outputs[:2000], long.outputs[:2000])


def test_mc_rejects_bad_arguments():
    with pytest.raises(ValueError):
        mc_run(SequenceSpec(("xy",), 100, 10), P, shards=0)
    short = Scaled(WhiteNoise(1.0), durations=(1.0,), amplitudes=(1.0,))
    with pytest.raises(ValueError):
        mc_run(SequenceSpec(("xy",), 100, 10), P, short)


def test_first_readout_bias_follows_noise_phase():
    # from the mixed state p+ - p- = sin(phi_m) cos(alpha) in the short-time mode
    p = SimParams.from_angles(0.4, 0.3)
    seq = SequenceSpec(("xy",), 40_000, 1)
    noise = WhiteNoise(2.0)
    rec = mc_run(seq, p, noise, seed=5, mode="short_time")
    phases = run_noise_phases(seq, p, noise, seed=5)
    resid = rec.outputs[:, 0] - np.sin(phases) * np.cos(p.alpha)
    assert abs(resid.mean()) < 4 * resid.std() / np.sqrt(len(resid))
    # a coarse check that the outputs track the phases at all
    assert np.corrcoef(rec.outputs[:, 0], np.sin(phases))[0, 1] > 0.2


def test_decoupled_outputs_are_fair_coins():
    p = SimParams.from_angles(0.0, 0.3)
    rec = mc_run(SequenceSpec(("xy",), 200_000, 2000), p, NoNoise(), seed=6)
    g = estimate_G2(rec, 3)
    assert abs(rec.outputs.mean()) < 4 / np.sqrt(rec.outputs.size)
    assert np.all(np.abs(g.values[1:]) < 4 * g.stderr[1:])


def test_mc_two_point_matches_exact_engine():
    rec = mc_run(SequenceSpec(("xy",), 1_000_000, 2048), P, seed=1)
    g = estimate_G2(rec, 10, tau=P.tau)
    exact = exact_G2_series(10, P)
    assert abs(g.values[1] - exact[0]) < 3 * g.stderr[1]
    assert np.all(np.abs(g.values[1:] - exact) < 4 * g.stderr[1:])


def test_mc_two_point_with_noise_matches_exact_engine():
    noise = OrnsteinUhlenbeck(variance=0.5, tau_c=3.0)
    rec = mc_run(SequenceSpec(("xy",), 500_000, 2048), P, noise, seed=2)
    g = estimate_G2(rec, 6, tau=P.tau)
    exact = exact_G2_series(6, P, noise)
    assert np.all(np.abs(g.values[1:] - exact) < 4 * g.stderr[1:])


def test_mc_four_point_matches_exact_engine():
    rec = mc_run(SequenceSpec(("xy", "xz"), 1_000_000, 2048), P, seed=1)
    g4 = estimate_G4(rec, 2, 2, tau=P.tau)
    exact = exact_G4_grid(2, 2, 2, P)
    assert abs(g4.values[0, 0, 0] - exact[0, 0, 0]) < 3 * g4.stderr[0, 0, 0]
    assert np.all(np.abs(g4.values - exact) < 4 * g4.stderr)


def test_decoupled_telegraph_four_point_vanishes():
    p = SimParams.from_angles(0.0, 0.3)
    rec = mc_run(SequenceSpec(("xy", "xz"), 200_000, 2048), p, Telegraph(b=0.5 / p.tau, gamma_f=0.25 / p.tau), seed=8)
    g4 = estimate_G4(rec, 2, 2, tau=p.tau)
    assert np.all(np.abs(g4.values) < 4 * g4.stderr)
