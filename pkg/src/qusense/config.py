"""Run configuration files (JSON) with strict validation."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .dynamics import SimParams
from .noise import NoiseModel, noise_from_dict
from .trajectories import SequenceSpec

__all__ = [
    "ParamsConfig",
    "NoiseConfig",
    "SequenceConfig",
    "GridSpec",
    "SpectrumConfig",
    "PlanConfig",
    "RunConfig",
    "load_config",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ParamsConfig(_Strict):
    a: float = Field(ge=0)
    omega0: float
    gamma0: float = Field(default=0.0, ge=0)
    tau: float = Field(gt=0)

    def build(self) -> SimParams:
        return SimParams(a=self.a, omega0=self.omega0, gamma0=self.gamma0, tau=self.tau)


class NoNoiseConfig(_Strict):
    kind: Literal["none"] = "none"


class WhiteConfig(_Strict):
    kind: Literal["white"]
    S_C: float = Field(ge=0)


class OUConfig(_Strict):
    kind: Literal["ou"]
    variance: float = Field(ge=0)
    tau_c: float = Field(gt=0)


class TelegraphConfig(_Strict):
    kind: Literal["telegraph"]
    b: float = Field(ge=0)
    gamma_f: float = Field(gt=0)


_Stationary = Annotated[Union[NoNoiseConfig, WhiteConfig, OUConfig, TelegraphConfig], Field(discriminator="kind")]


class ScaledConfig(_Strict):
    kind: Literal["scaled"]
    inner: _Stationary
    durations: list[float] = Field(min_length=1)
    amplitudes: list[float] = Field(min_length=1)

    @model_validator(mode="after")
    def _same_length(self) -> ScaledConfig:
        if len(self.durations) != len(self.amplitudes):
            raise ValueError("durations and amplitudes must have equal length")
        if any(d <= 0 for d in self.durations):
            raise ValueError("segment durations must be positive")
        return self


NoiseConfig = Annotated[
    Union[NoNoiseConfig, WhiteConfig, OUConfig, TelegraphConfig, ScaledConfig], Field(discriminator="kind")
]


def build_noise(cfg) -> NoiseModel:
    return noise_from_dict(cfg.model_dump())


class SequenceConfig(_Strict):
    pattern: list[Literal["xy", "xz", "xx"]] = Field(default_factory=lambda: ["xy"], min_length=1, max_length=2)
    n_cycles: int = Field(default=100_000, ge=1)
    block_cycles: int = Field(default=2048, ge=1)

    def build(self) -> SequenceSpec:
        return SequenceSpec(tuple(self.pattern), self.n_cycles, self.block_cycles)


class GridSpec(_Strict):
    """Either explicit ``values`` or ``start``/``stop``/``num`` (optionally log-spaced)."""

    values: list[float] | None = None
    start: float | None = None
    stop: float | None = None
    num: int | None = Field(default=None, ge=1)
    log: bool = False

    @model_validator(mode="after")
    def _one_form(self) -> GridSpec:
        ranged = (self.start, self.stop, self.num)
        if self.values is None and any(v is None for v in ranged):
            raise ValueError("give either values or start, stop and num")
        if self.values is not None and any(v is not None for v in ranged):
            raise ValueError("give either values or a range, not both")
        if self.log and self.values is None and (self.start <= 0 or self.stop <= 0):
            raise ValueError("log grids need positive bounds")
        return self

    def build(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.log:
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)


class SpectrumConfig(_Strict):
    """Spectrum job.

    ``source`` selects the correlation input: the closed forms, the exact
    engine, or a Monte Carlo run of ``sequence``.  Transform sizes default to
    the lag counts that scale with the total decay time.
    """

    order: Literal["2nd", "4th"] = "2nd"
    source: Literal["closedform", "exact", "simulate"] = "closedform"
    n_f: int | None = Field(default=None, ge=1)
    n_f2: int | None = Field(default=None, ge=1)
    n_f1: int | None = Field(default=None, ge=1)
    include_zero_lag: bool = False
    omega: GridSpec | None = None


class PlanConfig(_Strict):
    orders: list[Literal["2nd", "4th"]] = Field(default_factory=lambda: ["2nd", "4th"], min_length=1)
    a: float = Field(default=1.0, gt=0)
    gm_max: float | None = Field(default=None, gt=0)
    s_c: GridSpec
    gamma0: GridSpec


class RunConfig(_Strict):
    params: ParamsConfig | None = None
    noise: NoiseConfig = Field(default_factory=NoNoiseConfig)
    sequence: SequenceConfig = Field(default_factory=SequenceConfig)
    mode: Literal["exact", "short_time"] = "exact"
    max_lag: int = Field(default=50, ge=1)
    grid: tuple[int, int, int] = (5, 5, 5)
    spectrum: SpectrumConfig | None = None
    plan: PlanConfig | None = None
    export_noise: bool = False
    exact_paths: int = Field(default=2000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    shards: int = Field(default=1, ge=1)

    @field_validator("grid")
    @classmethod
    def _positive_grid(cls, v: tuple[int, int, int]) -> tuple[int, int, int]:
        if min(v) < 1:
            raise ValueError("grid sizes must be at least 1")
        return v

    def require(self, *sections: str) -> None:
        missing = [s for s in sections if getattr(self, s) is None]
        if missing:
            raise ValueError(f"config is missing required section(s): {', '.join(missing)}")


def load_config(path: str | Path) -> RunConfig:
    with open(path) as fh:
        data = json.load(fh)
    return RunConfig.model_validate(data)
