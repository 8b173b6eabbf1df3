"""Experiment configuration and its flat ``section.key = value`` file format."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .channel import GeometryConfig
from .energy import EnergyTable
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n_list: tuple[int, ...] = (8, 16, 32, 64)
    M: int = 2
    snr_db: tuple[float, ...] = (-20.0, -15.0, -10.0, -5.0, 0.0)
    test_samples: int = 10_000
    seed: int = 0
    out_dir: str = "out"
    desk_scale: bool = False
    train_missing: bool = True
    include_decay: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    energy: EnergyTable = field(default_factory=EnergyTable)

    def __post_init__(self):
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ConfigError("experiment.n_list must hold positive integers")
        if self.M < 1:
            raise ConfigError("experiment.m must be positive")
        if any(s != s or abs(s) == float("inf") for s in self.snr_db):
            raise ConfigError("experiment.snr_db must be finite")
        if self.test_samples < 1:
            raise ConfigError("experiment.test_samples must be positive")

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


# Applied by --desk-scale / experiment.desk_scale = true (explicit keys in the file still win).
DESK_SCALE = {
    "experiment.n_list": (4, 8, 16),
    "experiment.test_samples": 1_000,
    "train.train_samples": 10_000,
    "train.epochs": 10,
    "train.learning_rate": 2e-3,
}

_SECTIONS = {"train": TrainConfig, "geometry": GeometryConfig, "energy": EnergyTable}
_EXPERIMENT_KEYS = {"n_list": "n_list", "m": "M", "snr_db": "snr_db", "test_samples": "test_samples",
                    "seed": "seed", "out_dir": "out_dir", "desk_scale": "desk_scale",
                    "train_missing": "train_missing", "include_decay": "include_decay"}


def _coerce(raw: str, like, key: str):
    try:
        if isinstance(like, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(like, tuple):
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            kind = type(like[0]) if like else float
            return tuple(kind(p) for p in parts)
        if isinstance(like, int):
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if isinstance(like, float):
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} lacks a section")
        entries[key.lower()] = value
    return entries


def build_config(entries: dict[str, object], desk_scale: bool = False, seed: int | None = None) -> ExperimentConfig:
    """Assemble an :class:`ExperimentConfig` from flat keys.

    Values may be raw strings (from a file) or already-typed Python objects.
    """
    entries = {k.lower(): v for k, v in entries.items()}
    flag = entries.get("experiment.desk_scale", False)
    flag = _coerce(flag, False, "experiment.desk_scale") if isinstance(flag, str) else bool(flag)
    if desk_scale or flag:
        entries = {**DESK_SCALE, **entries, "experiment.desk_scale": True}
    if seed is not None:
        entries["experiment.seed"] = seed

    base = ExperimentConfig()
    top, subs = {}, {name: {} for name in _SECTIONS}
    for key, value in entries.items():
        section, name = key.split(".", 1)
        if section == "experiment":
            if name not in _EXPERIMENT_KEYS:
                raise ConfigError(f"unknown key {key}")
            attr = _EXPERIMENT_KEYS[name]
            like = getattr(base, attr)
            top[attr] = _coerce(value, like, key) if isinstance(value, str) else value
        elif section in _SECTIONS:
            cls = _SECTIONS[section]
            known = {f.name: f for f in fields(cls)}
            if section == "geometry" and name in ("d0_min", "d0_max", "d1_min", "d1_max"):
                subs[section][name] = float(value)
                continue
            if name not in known:
                raise ConfigError(f"unknown key {key}")
            like = getattr(cls(), name)
            subs[section][name] = _coerce(value, like, key) if isinstance(value, str) else value
        else:
            raise ConfigError(f"unknown section in key {key}")

    geo = subs["geometry"]
    for axis in ("d0", "d1"):
        lo, hi = geo.pop(f"{axis}_min", None), geo.pop(f"{axis}_max", None)
        if lo is not None or hi is not None:
            default = getattr(GeometryConfig(), f"{axis}_range")
            geo[f"{axis}_range"] = (default[0] if lo is None else lo, default[1] if hi is None else hi)
    if "seed" in top:
        subs["train"].setdefault("seed", top["seed"])
    try:
        return replace(
            base,
            **top,
            train=TrainConfig(**subs["train"]),
            geometry=GeometryConfig(**geo),
            energy=EnergyTable(**subs["energy"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None, desk_scale: bool = False, seed: int | None = None) -> ExperimentConfig:
    entries = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    return build_config(entries, desk_scale=desk_scale, seed=seed)
