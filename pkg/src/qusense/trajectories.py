"""Monte Carlo unravelling of the measurement sequence into +/-1 shot records.

A run of ``n_cycles`` cycles is cut into fixed blocks of ``block_cycles``
cycles.  Each block is an independent trajectory that starts from the
maximally mixed target state (the ensemble steady state of the unital
shot channel) and draws its own noise path and outcome uniforms from a
seed derived from ``(master_seed, block_index)``.  Shards are contiguous
groups of blocks, so the merged record does not depend on the shard
count.  Blocks are propagated side by side as rows of a ``(rows, 4)``
array; the 4x4 maps are applied with explicit elementwise sums so a row's
arithmetic never depends on how many other rows share the batch.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Mode, ShotLabel, SimParams, SuperOpSet, build_superops
from .noise import NoiseModel, NoNoise, Scaled, make_rng, sample_phases

__all__ = [
    "SequenceSpec",
    "ShotRecord",
    "PhysicalityError",
    "mc_run",
    "block_seed",
    "default_threads",
    "run_noise_phases",
]

_PROB_GUARD = 1e-12
_BLOCH_TOL = 1e-9


class PhysicalityError(RuntimeError):
    """A propagated conditional state left the Bloch ball."""


@dataclass(frozen=True)
class SequenceSpec:
    """Repeated measurement cycles.

    Attributes:
        pattern: Shot labels of one cycle, ``("xy",)`` or ``("xy", "xz")``.
        n_cycles: Number of cycles in the run.
        block_cycles: Cycles per independently seeded block.
    """

    pattern: tuple[str, ...] = ("xy",)
    n_cycles: int = 100_000
    block_cycles: int = 2048

    def __post_init__(self) -> None:
        pattern = tuple(self.pattern)
        if len(pattern) not in (1, 2):
            raise ValueError("pattern must contain one or two shot labels")
        for name in pattern:
            if ShotLabel.parse(name).is_idle:
                raise ValueError("patterns contain recorded shots only")
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be at least 1")
        if self.block_cycles < 1:
            raise ValueError("block_cycles must be at least 1")
        object.__setattr__(self, "pattern", pattern)

    @property
    def shots_per_cycle(self) -> int:
        return len(self.pattern)

    @property
    def n_blocks(self) -> int:
        return -(-self.n_cycles // self.block_cycles)

    def block_lengths(self) -> np.ndarray:
        lengths = np.full(self.n_blocks, self.block_cycles)
        lengths[-1] = self.n_cycles - self.block_cycles * (self.n_blocks - 1)
        return lengths

    def cycle_time(self, tau: float) -> float:
        return self.shots_per_cycle * tau


@dataclass
class ShotRecord:
    """Outputs of one run.

    Attributes:
        outputs: ``int8`` array of shape ``(n_cycles, shots_per_cycle)`` holding +/-1.
        pattern: Shot labels of one cycle.
        block_lengths: Cycles in each independently seeded block, in order.
        seed: Master seed.
        shards: Number of shards the run was split into.
    """

    outputs: np.ndarray
    pattern: tuple[str, ...]
    block_lengths: np.ndarray
    seed: int
    shards: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def n_cycles(self) -> int:
        return int(self.outputs.shape[0])

    def blocks(self) -> list[np.ndarray]:
        """Per-block output arrays of shape ``(length, shots_per_cycle)``."""
        edges = np.concatenate([[0], np.cumsum(self.block_lengths)])
        return [self.outputs[a:b] for a, b in zip(edges[:-1], edges[1:])]

    def slot(self, label: str) -> int:
        return self.pattern.index(label)

    def rows(self):
        """Iterate ``(cycle, slot, label, s)`` tuples."""
        for cycle, row in enumerate(self.outputs):
            for slot, (label, s) in enumerate(zip(self.pattern, row)):
                yield cycle, slot, label, int(s)


def block_seed(master_seed: int, block: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(block,))


def default_threads() -> int:
    env = os.environ.get("QUSENSE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _apply_stack(stack: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``out[:, k] = sum_j stack[k, j] r[:, j]`` evaluated term by term."""
    out = r[:, 0:1] * stack[:, 0]
    for j in range(1, 4):
        out = out + r[:, j : j + 1] * stack[:, j]
    return out


def _simulate_blocks(
    block_ids: np.ndarray,
    lengths: np.ndarray,
    seq: SequenceSpec,
    params: SimParams,
    noise: NoiseModel,
    master_seed: int,
    ops: SuperOpSet,
) -> np.ndarray:
    """Outputs of a batch of blocks, shape ``(n_rows, block_cycles, shots_per_cycle)``."""
    n_rows = len(block_ids)
    per_cycle = seq.shots_per_cycle
    n_steps = seq.block_cycles * per_cycle
    block_time = seq.block_cycles * seq.cycle_time(params.tau)
    uniforms = np.empty((n_rows, n_steps))
    cos_ph = np.ones((n_rows, n_steps))
    sin_ph = np.zeros((n_rows, n_steps))
    needs_phase = any(name[1] != "z" for name in seq.pattern) and not isinstance(noise, NoNoise)
    for row, block in enumerate(block_ids):
        noise_seq, outcome_seq = block_seed(master_seed, int(block)).spawn(2)
        uniforms[row] = make_rng(outcome_seq).random(n_steps)
        if needs_phase:
            n_real = int(lengths[row]) * per_cycle
            path = sample_phases(noise, n_real, params.tau, make_rng(noise_seq), t0=int(block) * block_time)
            # per-row trig keeps each block independent of its batch neighbours
            cos_ph[row, :n_real] = np.cos(path.phases)
            sin_ph[row, :n_real] = np.sin(path.phases)

    lz = ops.Lz.matrix
    # rows 0-3: M0, 4-7: Mx, 8-11: My, 12-15: Mz, all after intrinsic dephasing
    stack = np.vstack([ops.M0.matrix @ lz, ops.Mx.matrix @ lz, ops.My.matrix @ lz, ops.Mz.matrix @ lz])
    axes = [name[1] for name in seq.pattern]
    state = np.zeros((n_rows, 4))
    state[:, 0] = 0.5
    out = np.empty((n_rows, n_steps), dtype=np.int8)
    for step in range(n_steps):
        full = _apply_stack(stack, state)
        v0 = full[:, 0:4]
        axis = axes[step % per_cycle]
        if axis == "z":
            vb = full[:, 12:16]
        else:
            c = cos_ph[:, step : step + 1]
            s = sin_ph[:, step : step + 1]
            vx, vy = full[:, 4:8], full[:, 8:12]
            vb = s * vx + c * vy if axis == "y" else c * vx - s * vy
        p_plus = np.clip(v0[:, 0] + vb[:, 0], _PROB_GUARD, 1 - _PROB_GUARD)
        plus = uniforms[:, step] < p_plus
        sign = np.where(plus, 1.0, -1.0)[:, None]
        prob = np.where(plus, p_plus, 1 - p_plus)[:, None]
        state = (v0 + sign * vb) / (2 * prob)
        state[:, 0] = 0.5
        out[:, step] = np.where(plus, 1, -1)
        if step % 256 == 0 and np.any(np.sum(state[:, 1:] ** 2, axis=1) > 0.25 * (1 + _BLOCH_TOL) ** 2):
            raise PhysicalityError(f"conditional state left the Bloch ball at step {step}")
    return out.reshape(n_rows, seq.block_cycles, per_cycle)


def _run_shard(args) -> np.ndarray:
    block_ids, lengths, seq, params, noise, master_seed, ops, batch = args
    parts = []
    for start in range(0, len(block_ids), batch):
        sl = slice(start, start + batch)
        sim = _simulate_blocks(block_ids[sl], lengths[sl], seq, params, noise, master_seed, ops)
        for row, length in enumerate(lengths[sl]):
            parts.append(sim[row, : int(length)])
    if not parts:
        return np.empty((0, seq.shots_per_cycle), dtype=np.int8)
    return np.concatenate(parts)


def mc_run(
    seq: SequenceSpec,
    params: SimParams,
    noise: NoiseModel | None = None,
    seed: int = 0,
    shards: int = 1,
    *,
    threads: int | None = None,
    mode: Mode = "exact",
    ops: SuperOpSet | None = None,
    batch_blocks: int = 512,
) -> ShotRecord:
    """Sample a shot record by quantum-trajectory Monte Carlo.

    Each shot applies intrinsic dephasing, computes the outcome
    probabilities from the conditional state and the shot's noise phase,
    draws the outcome and collapses the state onto the chosen branch.

    Args:
        seq: Sequence layout.
        params: Physical constants.
        noise: Classical noise model; ``None`` for no noise.
        seed: Master seed.
        shards: Number of contiguous block groups; the result does not depend on it.
        threads: Worker processes for shards (default from ``QUSENSE_THREADS`` or CPU count).
        mode: Superoperator construction mode.
        ops: Precomputed superoperators.
        batch_blocks: Blocks propagated together as array rows.

    Returns:
        The merged :class:`ShotRecord`.
    """
    noise = NoNoise() if noise is None else noise
    if shards < 1:
        raise ValueError("shards must be at least 1")
    if isinstance(noise, Scaled):
        run_time = seq.n_blocks * seq.block_cycles * seq.cycle_time(params.tau)
        if noise.total_duration < run_time:
            raise ValueError(f"noise schedule covers {noise.total_duration}, run lasts {run_time}")
    ops = build_superops(params, mode) if ops is None else ops
    lengths = seq.block_lengths()
    ids = np.arange(seq.n_blocks)
    groups = [g for g in np.array_split(ids, shards)]
    jobs = [(g, lengths[g], seq, params, noise, seed, ops, batch_blocks) for g in groups]
    threads = default_threads() if threads is None else threads
    if shards > 1 and threads > 1:
        with ProcessPoolExecutor(max_workers=min(threads, shards)) as pool:
            results = list(pool.map(_run_shard, jobs))
    else:
        results = [_run_shard(job) for job in jobs]
    outputs = np.concatenate(results)
    return ShotRecord(outputs=outputs, pattern=seq.pattern, block_lengths=lengths, seed=seed, shards=shards)


def run_noise_phases(seq: SequenceSpec, params: SimParams, noise: NoiseModel | None, seed: int) -> np.ndarray:
    """The per-shot noise phases an :func:`mc_run` with the same arguments uses, concatenated over blocks."""
    noise = NoNoise() if noise is None else noise
    per_cycle = seq.shots_per_cycle
    block_time = seq.block_cycles * seq.cycle_time(params.tau)
    parts = []
    for block, length in enumerate(seq.block_lengths()):
        noise_seq, _ = block_seed(seed, block).spawn(2)
        n_real = int(length) * per_cycle
        if isinstance(noise, NoNoise):
            parts.append(np.zeros(n_real))
            continue
        parts.append(sample_phases(noise, n_real, params.tau, make_rng(noise_seq), t0=block * block_time).phases)
    return np.concatenate(parts)
