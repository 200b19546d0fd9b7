"""Run configuration: one JSON file drives simulation and tomography."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

from .errors import ValidationError
from .polarization import ARMS
from .simulate import EmitterConfig

SEED_ENV_VAR = "CASCADE_TOMO_SEED"


@dataclass(frozen=True)
class CorrectionConfig:
    theta: float = 0.0
    phi: float = 0.0
    arms: str = "both"

    def __post_init__(self):
        if self.arms not in ARMS:
            raise ValidationError(f"correction arms must be one of {ARMS}")


@dataclass(frozen=True)
class TomographyConfig:
    """Reconstruction settings.

    max_delay_ps should stay well inside the excitation repetition
    period: delays approaching it mix photons from neighboring pulses,
    which are uncorrelated in polarization.
    """

    basis_count: int = 36
    bin_width_ps: float = 100.0
    min_counts_per_bin: int = 100
    bootstrap_samples: int = 0
    max_delay_ps: float = 6000.0
    correction: CorrectionConfig = field(default_factory=CorrectionConfig)

    def __post_init__(self):
        if self.basis_count not in (16, 36):
            raise ValidationError("basis_count must be 16 or 36")
        if self.bin_width_ps <= 0 or self.max_delay_ps <= 0:
            raise ValidationError("bin_width_ps and max_delay_ps must be positive")
        if self.min_counts_per_bin < 0 or self.bootstrap_samples < 0:
            raise ValidationError("count thresholds must be nonnegative")


@dataclass(frozen=True)
class SimulationConfig:
    n_pulses: int = 0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n_pulses < 0:
            raise ValidationError("n_pulses must be nonnegative")
        if self.n_pulses > 0 and self.seed is None:
            raise ValidationError("a seed is required whenever simulation is requested")


@dataclass(frozen=True)
class IOConfig:
    output_dir: str = "out"
    formats: tuple = ("binary",)

    def __post_init__(self):
        object.__setattr__(self, "formats", tuple(self.formats))
        for f in self.formats:
            if f not in ("binary", "csv"):
                raise ValidationError(f"unknown stream format {f!r}")


@dataclass(frozen=True)
class RunConfig:
    emitter: EmitterConfig = field(default_factory=EmitterConfig)
    tomography: TomographyConfig = field(default_factory=TomographyConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    io: IOConfig = field(default_factory=IOConfig)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        known = {"emitter", "tomography", "simulation", "io"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config sections: {sorted(unknown)}")
        try:
            tomo = dict(data.get("tomography", {}))
            correction = CorrectionConfig(**tomo.pop("correction", {}))
            return cls(
                emitter=EmitterConfig(**data.get("emitter", {})),
                tomography=TomographyConfig(correction=correction, **tomo),
                simulation=SimulationConfig(**data.get("simulation", {})),
                io=IOConfig(**data.get("io", {})),
            )
        except TypeError as exc:
            raise ValidationError(f"bad config: {exc}") from exc

def apply_overrides(data, overrides):
    """Apply dotted `key=value` strings to a nested config dict."""
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationError(f"cannot override through non-mapping key {part!r}")
        node[parts[-1]] = value
    return data


def load_config(path, overrides=None) -> RunConfig:
    """Read a RunConfig JSON file, apply overrides and the seed env var."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    data = apply_overrides(data, overrides)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        data.setdefault("simulation", {})["seed"] = int(env_seed)
    return RunConfig.from_dict(data)
