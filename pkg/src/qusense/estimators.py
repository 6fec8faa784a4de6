"""Sliding-window correlation estimators on shot records.

Windows never straddle block boundaries: every block is an independent
trajectory.  A block with ``L`` cycles contributes ``L - span`` windows,
where ``span`` is the largest cycle offset the estimator needs.  Estimates
pool all windows; standard errors come from the scatter of per-block
means (the i.i.d. formula is used when there is only one block).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trajectories import ShotRecord

__all__ = [
    "LagSeries",
    "Corr4Grid",
    "ResonanceEstimate",
    "estimate_G2",
    "estimate_G4",
    "estimate_resonance_4th",
    "estimate_resonance_2nd",
]


@dataclass(frozen=True)
class LagSeries:
    """Correlation versus lag.

    Attributes:
        lags: Lag indices ``0 .. max_lag``.
        values: Estimates ``G(n)``; ``G(0) = 1`` for records.
        stderr: Standard errors.
        dt: Time per lag step.
        windows: Number of windows pooled.
    """

    lags: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    dt: float
    windows: int

    @property
    def times(self) -> np.ndarray:
        return self.lags * self.dt

    @classmethod
    def from_values(cls, values, dt: float, stderr=None, start: int = 0) -> LagSeries:
        """Wrap a computed series (e.g. from the exact engine) whose first entry is lag ``start``."""
        values = np.asarray(values, dtype=float)
        if start:
            values = np.concatenate([np.full(start, np.nan), values])
        lags = np.arange(len(values))
        err = np.zeros_like(values) if stderr is None else np.asarray(stderr, dtype=float)
        return cls(lags=lags, values=values, stderr=err, dt=dt, windows=0)


@dataclass(frozen=True)
class Corr4Grid:
    """Four-point correlation on the lag grid ``u, v, w >= 1``.

    ``values[u-1, v-1, w-1]`` holds the entry for cycle lags ``(u, v, w)``.
    """

    values: np.ndarray
    stderr: np.ndarray
    dt: float
    windows: int

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


@dataclass(frozen=True)
class ResonanceEstimate:
    value: complex
    stderr: float
    windows: int


def _block_stats(sums: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pooled mean and block-scatter standard error.

    ``sums`` has shape ``(n_blocks, ...)``; ``counts`` the windows per block.
    Complex sums give the standard error of the complex mean,
    ``sqrt(E|X - mean|^2 / n)``.
    """
    total = counts.sum()
    mean = sums.sum(axis=0) / total
    n_blocks = len(counts)
    if n_blocks < 2:
        return mean, None
    w = counts.reshape((-1,) + (1,) * (sums.ndim - 1))
    block_means = sums / w
    dev = np.abs(block_means - mean) ** 2
    var = (w**2 * dev).sum(axis=0) / total**2 * n_blocks / (n_blocks - 1)
    return mean, np.sqrt(var)


def _y_blocks(record: ShotRecord, label: str) -> list[np.ndarray]:
    slot = record.slot(label)
    return [b[:, slot].astype(np.float64) for b in record.blocks()]


def _usable(blocks: list[np.ndarray], span: int) -> list[np.ndarray]:
    keep = [b for b in blocks if len(b) > span]
    if not keep:
        raise ValueError(f"no block is longer than the required span of {span} cycles")
    return keep


def estimate_G2(record: ShotRecord, max_lag: int, tau: float = 1.0) -> LagSeries:
    """``G(n) = <s_{i+n} s_i>`` for ``n = 0 .. max_lag`` on a ``[xy]`` record.

    Windows are anchored at the earlier shot: a block of length ``L``
    contributes starts ``i < L - max_lag`` to every lag.
    """
    if record.pattern != ("xy",):
        raise ValueError(f"second-order estimates need pattern ('xy',), got {record.pattern}")
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    blocks = _usable(_y_blocks(record, "xy"), max_lag)
    sums = np.empty((len(blocks), max_lag + 1))
    counts = np.empty(len(blocks))
    for b, x in enumerate(blocks):
        n_win = len(x) - max_lag
        counts[b] = n_win
        head = x[:n_win]
        for n in range(max_lag + 1):
            sums[b, n] = head @ x[n : n + n_win]
    mean, err = _block_stats(sums, counts)
    if err is None:
        err = np.sqrt(np.maximum(1 - mean**2, 0) / counts.sum())
    return LagSeries(
        lags=np.arange(max_lag + 1), values=mean, stderr=err, dt=tau, windows=int(counts.sum())
    )


def _g4_windows(y: np.ndarray, z: np.ndarray, n_u: int, n_v: int, n_w: int):
    """Anchor range for four-point windows: first z cycle ``m`` in ``[n_w, L - n_u - n_v)``."""
    start, stop = n_w, len(y) - n_u - n_v
    return start, stop


def estimate_G4(record: ShotRecord, n_u: int, n_v: int, n_w: int | None = None, tau: float = 1.0) -> Corr4Grid:
    """Four-point correlation ``<y_j z_k z_m y_n>`` on a ``[xy, xz]`` record.

    Cycle lags are ``u = j - k``, ``v = k - m``, ``w = m - n``, each from 1 to
    ``n_u``, ``n_v``, ``n_w``.  Windows are anchored at the earlier z cycle
    ``m``.
    """
    n_w = n_u if n_w is None else n_w
    if record.pattern != ("xy", "xz"):
        raise ValueError(f"fourth-order estimates need pattern ('xy', 'xz'), got {record.pattern}")
    if min(n_u, n_v, n_w) < 1:
        raise ValueError("grid sizes must be at least 1")
    span = n_u + n_v + n_w
    ys = _usable(_y_blocks(record, "xy"), span)
    zs = _usable(_y_blocks(record, "xz"), span)
    sums = np.empty((len(ys), n_u, n_v, n_w))
    counts = np.empty(len(ys))
    for b, (y, z) in enumerate(zip(ys, zs)):
        start, stop = _g4_windows(y, z, n_u, n_v, n_w)
        m = np.arange(start, stop)
        counts[b] = len(m)
        late = np.stack([y[m + u] for u in range(1, n_u + n_v + 1)])
        early = np.stack([y[m - w] for w in range(1, n_w + 1)])
        for v in range(1, n_v + 1):
            zz = z[m + v] * z[m]
            # late y at m + v + u
            sums[b, :, v - 1, :] = (late[v : v + n_u] * zz) @ early.T
    mean, err = _block_stats(sums, counts)
    if err is None:
        err = np.sqrt(np.maximum(1 - mean**2, 0) / counts.sum())
    return Corr4Grid(values=mean, stderr=err, dt=2 * tau, windows=int(counts.sum()))


def _causal_filter(x: np.ndarray, n_taps: int, phase_step: float) -> np.ndarray:
    """``F[k] = sum_{t=1}^{n_taps} x[k + t] e^{i t phase_step}`` (zero past the end)."""
    taps = np.exp(1j * phase_step * np.arange(1, n_taps + 1))
    padded = np.concatenate([x, np.zeros(n_taps)])
    out = np.zeros(len(x), dtype=complex)
    for t in range(1, n_taps + 1):
        out += taps[t - 1] * padded[t : t + len(x)]
    return out


def estimate_resonance_4th(
    record: ShotRecord,
    n_f2: int,
    n_f1: int,
    omegas: tuple[float, float, float],
    tau: float = 1.0,
) -> ResonanceEstimate:
    """Three-dimensional transform of the four-point estimator at one frequency triple.

    Equals ``dft3(estimate_G4(record, n_f2, n_f1, n_f2), omegas)`` but runs in
    time linear in the record length by summing the outer lags as causal
    filters.
    """
    if record.pattern != ("xy", "xz"):
        raise ValueError(f"fourth-order estimates need pattern ('xy', 'xz'), got {record.pattern}")
    dt = 2 * tau
    w1, w2, w3 = omegas
    span = n_f2 + n_f1 + n_f2
    ys = _usable(_y_blocks(record, "xy"), span)
    zs = _usable(_y_blocks(record, "xz"), span)
    sums = np.empty(len(ys), dtype=complex)
    counts = np.empty(len(ys))
    for b, (y, z) in enumerate(zip(ys, zs)):
        start, stop = _g4_windows(y, z, n_f2, n_f1, n_f2)
        m = np.arange(start, stop)
        counts[b] = len(m)
        # A[k] = sum_u y[k+u] e^{i w1 u dt}; B[k] = sum_w y[k-w] e^{i w3 w dt}
        a_late = _causal_filter(y, n_f2, w1 * dt)
        b_early = _causal_filter(y[::-1], n_f2, w3 * dt)[::-1]
        inner = a_late * z
        mid = np.zeros(len(m), dtype=complex)
        for v in range(1, n_f1 + 1):
            mid += np.exp(1j * w2 * v * dt) * inner[m + v]
        sums[b] = np.sum(mid * z[m] * b_early[m])
    mean, err = _block_stats(sums, counts)
    err = float(err) if err is not None else float(n_f2 * np.sqrt(n_f1 / counts.sum()))
    return ResonanceEstimate(value=complex(mean), stderr=err, windows=int(counts.sum()))


def estimate_resonance_2nd(
    record: ShotRecord, n_f: int, omega: float, tau: float = 1.0, include_zero_lag: bool = False
) -> ResonanceEstimate:
    """One-sided transform of the two-point estimator at ``omega`` with block-scatter error."""
    if record.pattern != ("xy",):
        raise ValueError(f"second-order estimates need pattern ('xy',), got {record.pattern}")
    first = 0 if include_zero_lag else 1
    blocks = _usable(_y_blocks(record, "xy"), n_f)
    phases = np.exp(1j * omega * tau * np.arange(first, n_f))
    sums = np.empty(len(blocks), dtype=complex)
    counts = np.empty(len(blocks))
    for b, x in enumerate(blocks):
        n_win = len(x) - n_f
        counts[b] = n_win
        head = x[:n_win]
        lagged = np.array([head @ x[n : n + n_win] for n in range(first, n_f)])
        sums[b] = phases @ lagged
    mean, err = _block_stats(sums, counts)
    err = float(err) if err is not None else float(np.sqrt(n_f / counts.sum()))
    return ResonanceEstimate(value=complex(mean), stderr=err, windows=int(counts.sum()))
