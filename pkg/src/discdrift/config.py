"""Experiment configuration files (JSON) and their validation."""
from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError, ParameterError
from .model import CATALOG, PiecewiseDrift, SdeSpec

EXPERIMENTS = ("converge", "evolution", "histogram", "stationary", "atlas", "paths")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class DriftConfig(_Strict):
    breakpoints: list[float] = Field(default_factory=list)
    values: list[float]


class EvolutionOptions(_Strict):
    coarse_exponent: int = 8
    samples: int = Field(10_000, ge=1)


class HistogramOptions(_Strict):
    bin_width: float = Field(1.0, gt=0)


class PathOptions(_Strict):
    count: int = Field(100, ge=1)


class StationaryOptions(_Strict):
    step: float = Field(2.0**-8, gt=0)
    burn_in: int = Field(10_000, ge=0)
    chain_length: int = Field(10_000_000, ge=1)
    probes: Optional[list[float]] = None
    initial_values: list[float] = Field(default_factory=lambda: [0.0])


class AtlasOptions(_Strict):
    d: int = Field(3, ge=1)
    g: float = Field(0.1, gt=0)
    sigma: float = Field(0.09, gt=0)
    initial_log_caps: list[float] = Field(default_factory=lambda: [3.4, 4.1, 5.7])
    horizons: list[float] = Field(default_factory=lambda: [100.0])
    step: float = Field(2.0**-10, gt=0)
    replications: int = Field(1000, ge=1)


class ExperimentConfig(_Strict):
    experiment: Literal["converge", "evolution", "histogram", "stationary", "atlas", "paths"]
    catalog: Optional[str] = None
    drift: Optional[DriftConfig] = None
    scheme: Literal["euler", "heun", "platen"] = "euler"
    xi: float = 0.0
    sigma: float = Field(1.0, gt=0)
    horizon: float = Field(1.0, gt=0, alias="T")
    fine_exponent: int = Field(14, ge=1, le=30)
    coarse_exponents: list[int] = Field(default_factory=lambda: list(range(4, 11)))
    replications: int = Field(100_000, ge=2)
    master_seed: int = Field(0, ge=0, lt=2**64)
    output_dir: str = "out"
    regression_window: Optional[tuple[int, int]] = None
    batch_size: int = Field(1000, ge=1)
    evolution: EvolutionOptions = Field(default_factory=EvolutionOptions)
    histogram: HistogramOptions = Field(default_factory=HistogramOptions)
    paths: PathOptions = Field(default_factory=PathOptions)
    stationary: StationaryOptions = Field(default_factory=StationaryOptions)
    atlas: AtlasOptions = Field(default_factory=AtlasOptions)

    @model_validator(mode="after")
    def _check(self):
        needs_drift = self.experiment != "atlas"
        if needs_drift and (self.catalog is None) == (self.drift is None):
            raise ValueError("give exactly one of 'catalog' or 'drift'")
        if self.catalog is not None and self.catalog not in CATALOG:
            raise ValueError(f"unknown catalog drift {self.catalog!r}; known: {', '.join(CATALOG)}")
        if self.drift is not None:
            try:
                PiecewiseDrift(tuple(self.drift.breakpoints), tuple(self.drift.values))
            except ParameterError as exc:
                raise ValueError(f"drift: {exc}") from None
        if self.experiment in ("converge", "histogram"):
            if not self.coarse_exponents:
                raise ValueError("coarse_exponents must not be empty")
            if min(self.coarse_exponents) < 0 or max(self.coarse_exponents) >= self.fine_exponent:
                raise ValueError(f"coarse_exponents must lie in [0, fine_exponent={self.fine_exponent})")
        if self.experiment == "evolution" and not 0 <= self.evolution.coarse_exponent < self.fine_exponent:
            raise ValueError("evolution.coarse_exponent must lie in [0, fine_exponent)")
        if self.regression_window is not None:
            lo, hi = self.regression_window
            if len([e for e in self.coarse_exponents if lo <= e <= hi]) < 2:
                raise ValueError("regression_window must select at least two coarse exponents")
        if self.experiment == "atlas" and len(self.atlas.initial_log_caps) != self.atlas.d:
            raise ValueError("atlas.initial_log_caps needs exactly d entries")
        if self.experiment == "stationary":
            if self.sigma != 1.0:
                raise ValueError("the stationary check assumes sigma = 1")
            drift = self.drift_object()
            vals = drift.values
            if drift.breakpoints != (0.0,) or not vals[0] > 0 > vals[1]:
                raise ValueError("the stationary check needs a drift pointing inward to 0")
        return self

    def drift_object(self) -> PiecewiseDrift:
        if self.catalog is not None:
            return CATALOG[self.catalog]
        return PiecewiseDrift(tuple(self.drift.breakpoints), tuple(self.drift.values))

    def sde(self) -> SdeSpec:
        return SdeSpec(self.drift_object(), self.sigma, self.xi, self.horizon)


def _describe(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<config>"
        lines.append(f"field '{where}': {err['msg']}")
    return "; ".join(lines)


def parse_config(data: bytes | str) -> ExperimentConfig:
    """Parse and validate a UTF-8 JSON experiment configuration."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not valid UTF-8: {exc}") from None
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None
