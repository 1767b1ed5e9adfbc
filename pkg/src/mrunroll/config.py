"""Experiment configuration: dataclass sections with strict JSON round-trip."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .sampling import ACS_POLICIES


@dataclass(frozen=True)
class DataConfig:
    height: int = 64
    width: int = 64
    n_coils: int = 4
    n_train: int = 100
    n_test: int = 20
    noise_sigma: float = 0.01
    seed: int = 2024


@dataclass(frozen=True)
class SamplingConfig:
    pattern: str = "uniform"          # uniform | random
    accel: int = 4
    n_acs: int = 8
    n_masks: int = 3                  # K subsets per slice for multi-mask training
    rho: float = 0.6                  # subset ratio |subset| / |acquisition mask|
    acs_policy: str = "keep-acs"
    mask_seed: int = 77


@dataclass(frozen=True)
class ModelConfig:
    n_unrolls: int = 10
    n_cg: int = 10
    n_blocks: int = 4
    n_features: int = 16
    kernel: int = 3
    share_weights: bool = True


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5e-4
    epochs: int = 30
    init_seed: int = 11
    shuffle_seed: int = 13
    w_l2: float = 1.0
    w_l1: float = 1.0
    resample_masks: bool = False      # redraw mask subsets each epoch


@dataclass(frozen=True)
class EvalConfig:
    output_dir: str = "out"


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)


_SECTIONS = {"data": DataConfig, "sampling": SamplingConfig, "model": ModelConfig,
             "train": TrainConfig, "eval": EvalConfig}


def _parse_section(cls, obj: dict, section: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(obj) - set(fields)
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")
    kwargs = {}
    for name, value in obj.items():
        want = fields[name].type
        if want == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{section}.{name}: expected integer, got {value!r}")
        elif want == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{section}.{name}: expected number, got {value!r}")
            value = float(value)
        elif want == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{section}.{name}: expected boolean, got {value!r}")
        elif want == "str":
            if not isinstance(value, str):
                raise ConfigError(f"{section}.{name}: expected string, got {value!r}")
        kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(obj: dict) -> ExperimentConfig:
    """Build a validated config; unknown keys anywhere are rejected."""
    if not isinstance(obj, dict):
        raise ConfigError(f"config root must be an object, got {type(obj).__name__}")
    unknown = set(obj) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    sections = {name: _parse_section(cls, obj.get(name, {}), name)
                for name, cls in _SECTIONS.items()}
    cfg = ExperimentConfig(**sections)
    validate_config(cfg)
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    return config_from_dict(obj)


def validate_config(cfg: ExperimentConfig) -> None:
    d, s, m, t = cfg.data, cfg.sampling, cfg.model, cfg.train
    if d.height < 16 or d.width < 16:
        raise ConfigError(f"data: image size must be at least 16x16, got {d.height}x{d.width}")
    if d.n_coils < 1:
        raise ConfigError("data: n_coils must be >= 1")
    if d.n_train < 1:
        raise ConfigError("data: n_train must be >= 1 (empty dataset)")
    if d.n_test < 0:
        raise ConfigError("data: n_test must be >= 0")
    if d.noise_sigma < 0:
        raise ConfigError("data: noise_sigma must be >= 0")
    if s.pattern not in ("uniform", "random"):
        raise ConfigError(f"sampling: unknown pattern {s.pattern!r}")
    if s.accel < 1 or s.accel > d.width:
        raise ConfigError(f"sampling: accel {s.accel} invalid for width {d.width}")
    if s.n_acs < 0 or s.n_acs > d.width:
        raise ConfigError(f"sampling: n_acs {s.n_acs} invalid for width {d.width}")
    if s.n_masks < 1:
        raise ConfigError("sampling: n_masks must be >= 1")
    if not 0.0 < s.rho <= 1.0:
        raise ConfigError(f"sampling: rho must be in (0, 1], got {s.rho}")
    if s.acs_policy not in ACS_POLICIES:
        raise ConfigError(f"sampling: unknown acs_policy {s.acs_policy!r}")
    if m.n_unrolls < 0:
        raise ConfigError("model: n_unrolls must be >= 0")
    if m.n_cg < 1:
        raise ConfigError("model: n_cg must be >= 1")
    if m.n_blocks < 0 or m.n_features < 1:
        raise ConfigError("model: invalid regularizer size")
    if m.kernel % 2 != 1 or m.kernel < 1:
        raise ConfigError(f"model: kernel must be odd, got {m.kernel}")
    if t.lr <= 0:
        raise ConfigError("train: lr must be > 0")
    if t.epochs < 1:
        raise ConfigError("train: epochs must be >= 1")
    if t.w_l2 < 0 or t.w_l1 < 0:
        raise ConfigError("train: loss weights must be >= 0")


def trend_config() -> ExperimentConfig:
    """Desk-scale end-to-end comparison run (small model, 30 epochs)."""
    return ExperimentConfig(
        data=DataConfig(height=64, width=64, n_coils=4, n_train=100, n_test=20,
                        noise_sigma=0.01, seed=2024),
        sampling=SamplingConfig(pattern="uniform", accel=4, n_acs=8, n_masks=3,
                                rho=0.6, acs_policy="keep-acs", mask_seed=77),
        model=ModelConfig(n_unrolls=5, n_cg=5, n_blocks=2, n_features=8),
        train=TrainConfig(lr=5e-4, epochs=30),
    )
