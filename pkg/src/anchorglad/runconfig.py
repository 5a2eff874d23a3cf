"""Flat key=value run configuration with flag overrides and a stable hash.

A config file holds ``key = value`` lines ('#' comments allowed); unknown
keys are rejected so typos fail loudly. CLI flags override file values.
Every report embeds the sha256-derived hash of the fully resolved config,
so runs are identifiable by (hash, seed, code version).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .training import TrainConfig


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")


@dataclass
class RunConfig:
    data_dir: str = ""
    dataset: str = ""
    anomaly_label: int = 1
    out_dir: str = "runs"
    feature_mode: str = "auto"
    hidden_dims: tuple[int, ...] = (128, 64, 32)
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    folds: int = 5
    anchor_k: int = 4
    fe_kind: str = "max"
    normalize: bool = True
    ablate_constant_weights: bool = False
    ablate_drop_dist3: bool = False
    refresh_anchors_per_epoch: bool = False

    _PARSERS = {
        "data_dir": str, "dataset": str, "out_dir": str, "feature_mode": str,
        "optimizer": str, "fe_kind": str,
        "anomaly_label": int, "epochs": int, "batch_size": int, "seed": int,
        "folds": int, "anchor_k": int,
        "learning_rate": float,
        "hidden_dims": _parse_dims,
        "normalize": _parse_bool, "ablate_constant_weights": _parse_bool,
        "ablate_drop_dist3": _parse_bool, "refresh_anchors_per_epoch": _parse_bool,
    }

    @classmethod
    def known_keys(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        cfg = cls()
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg.set(key, value, where=f"{path}:{lineno}")
        return cfg

    def set(self, key: str, value, where: str = "override") -> None:
        parser = self._PARSERS.get(key)
        if parser is None:
            raise ConfigError(f"{where}: unknown config key {key!r} "
                              f"(known: {', '.join(self.known_keys())})")
        try:
            parsed = parser(value) if isinstance(value, str) else value
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{where}: bad value for {key}: {err}")
        setattr(self, key, parsed)

    def apply_overrides(self, overrides: dict) -> None:
        """Flag values win over file values; None means 'not given'."""
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            seed=self.seed,
            ablate_constant_weights=self.ablate_constant_weights,
            ablate_drop_dist3=self.ablate_drop_dist3,
            refresh_anchors_per_epoch=self.refresh_anchors_per_epoch,
            fe_kind=self.fe_kind,
            hidden_dims=tuple(self.hidden_dims),
            anchor_k=self.anchor_k,
            normalize_reps=self.normalize)

    def canonical(self) -> str:
        """Canonical text form of the experiment-defining keys.

        Filesystem locations (data_dir, out_dir) are excluded: the same
        experiment run against the same data in a different directory
        hashes identically.
        """
        lines = []
        for key in sorted(self.known_keys()):
            if key in ("data_dir", "out_dir"):
                continue
            value = getattr(self, key)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]
