"""
Experiment Configuration
========================

Configs are TOML files with three flat sections:

    [system]
    ar = [0.999]
    ma = [1.0, 1.0]
    edge_of_stability = false

    [noise]
    innovation = "rademacher"
    prehistory = "zero"
    seed = 42

    [study]
    t_grid = [16, 32, 64, 128, 256, 512]
    replicates = 200000
    alpha_mode = "literal"
    case = "auto"

Every key has a default; unknown keys are rejected. Errors carry the line
of the offending key.
"""

from __future__ import annotations

import hashlib
import json
import re
import sys
from datetime import datetime
from pathlib import Path
from typing import Literal

import tomli_w
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from gausslimit.errors import ConfigError
from gausslimit.lti_core import DEFAULT_EPS, ArmaSpec
from gausslimit.noise import InnovationDistribution, InnovationKind, NoiseModel
from gausslimit.stein_bound import CASE_ALIASES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SystemSection(_Section):
    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = (1.0,)
    edge_of_stability: bool = False

    @model_validator(mode="after")
    def _valid_system(self):
        try:
            ArmaSpec(self.ar, self.ma)
        except ConfigError as exc:
            raise ValueError(exc.message) from exc
        return self


class NoiseSection(_Section):
    innovation: InnovationKind = InnovationKind.RADEMACHER
    half_width: PositiveFloat = 1.0
    rate: PositiveFloat = 1.0
    values: tuple[float, ...] = ()
    probabilities: tuple[float, ...] = ()
    variance_schedule: tuple[PositiveFloat, ...] = (1.0,)
    prehistory: Literal["zero", "random"] = "zero"
    seed: NonNegativeInt = 0

    def distribution(self) -> InnovationDistribution:
        return InnovationDistribution(
            self.innovation,
            half_width=self.half_width,
            rate=self.rate,
            values=self.values,
            probabilities=self.probabilities,
        )

    @model_validator(mode="after")
    def _valid_distribution(self):
        try:
            self.distribution()
        except ConfigError as exc:
            raise ValueError(exc.message) from exc
        return self


class StudySection(_Section):
    t_grid: tuple[PositiveInt, ...] = (16, 32, 64, 128, 256, 512)
    replicates: int = Field(default=100_000, ge=100)
    alpha_mode: Literal["literal", "edge", "taylor"] = "literal"
    case: Literal["auto", "independent", "positively_correlated", "poscorr", "decay"] = "auto"
    eps: PositiveFloat = DEFAULT_EPS
    bootstrap: NonNegativeInt = 200
    block_size: PositiveInt = 4096

    @field_validator("t_grid")
    @classmethod
    def _strictly_increasing(cls, grid):
        if not grid:
            raise ValueError("t_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_grid must be strictly increasing")
        return grid

    @field_validator("case")
    @classmethod
    def _canonical_case(cls, case):
        return CASE_ALIASES.get(case, case)


class ExperimentConfig(_Section):
    system: SystemSection = SystemSection()
    noise: NoiseSection = NoiseSection()
    study: StudySection = StudySection()

    @property
    def seed(self) -> int:
        return self.noise.seed

    def arma_spec(self) -> ArmaSpec:
        return ArmaSpec(self.system.ar, self.system.ma)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(
            self.system.ma,
            self.noise.distribution(),
            self.noise.variance_schedule,
            self.noise.prehistory,
        )

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON form of every field."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# =============================================================================
# PARSING
# =============================================================================

_SECTION = re.compile(r"^\s*\[\s*([A-Za-z0-9_]+)\s*\]")
_TOML_LINE = re.compile(r"line (\d+)")


def _locate(text: str, loc: tuple) -> int | None:
    """Line of the key named by a pydantic error location, else of its section."""
    if not loc:
        return None
    section, key = str(loc[0]), (str(loc[1]) if len(loc) > 1 else None)
    current, header = None, None
    for number, line in enumerate(text.splitlines(), start=1):
        match = _SECTION.match(line)
        if match:
            current = match.group(1)
            if current == section:
                header = number
            continue
        if current == section and key and re.match(rf"^\s*{re.escape(key)}\s*=", line):
            return number
    return header


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            match = _TOML_LINE.search(str(exc))
            line = int(match.group(1)) if match else None
        raise ConfigError(f"{source}: invalid TOML: {exc}", line) from exc

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        error = exc.errors()[0]
        loc = tuple(error["loc"])
        where = ".".join(str(part) for part in loc) or "config"
        raise ConfigError(f"{source}: {where}: {error['msg']}", _locate(text, loc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, source=str(path))


def serialize_config(config: ExperimentConfig) -> str:
    return tomli_w.dumps(config.model_dump(mode="json"))


def save_config(config: ExperimentConfig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_config(config), encoding="utf-8")


# =============================================================================
# RUN MANIFEST
# =============================================================================

class RunManifest(BaseModel):
    """Provenance written next to every study output."""

    config_hash: str
    tool_version: str
    seed: int
    command: str
    started_at: datetime
    finished_at: datetime
    outputs: list[str] = []

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")
