"""Model configuration: every hyperparameter and ablation switch."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass
class ModelConfig:
    # encoder
    hidden_dim: int = 128
    encoder_layers: int = 2
    encoder_heads: int = 8
    ff_dim: int = 256
    max_len: int = 128
    vocab_min_count: int = 1
    use_segment_embeddings: bool = True
    use_position_embeddings: bool = True
    mode: str = "joint"  # joint | siamese
    freeze_encoder: bool = False
    # matching
    perspectives: int = 16
    enable_matching: bool = True
    # fusion
    fusion_heads: int = 16
    enable_fusion: bool = True
    fusion_include_first_row: bool = False
    # aggregation / prediction
    conv_ops: int = 2
    conv_filters: int = 64
    classifier_hidden: int = 128
    # training
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 50
    dropout: float = 0.2
    clip_threshold: float = 2.0
    l2: float = 0.0005
    seed: int = 0
    multi_gold_target: str = "uniform"  # uniform | first
    schema: str = "pdtb4"
    eval_batch_size: int = 64

    def __post_init__(self) -> None:
        self.validate()

    @property
    def match_dim(self) -> int:
        return 5 * self.perspectives if self.enable_matching else 0

    @property
    def fusion_dim(self) -> int:
        """Row width entering fusion and aggregation: d, plus 5l with matching."""
        return self.hidden_dim + self.match_dim

    @property
    def summary_dim(self) -> int:
        return self.conv_ops * self.conv_filters

    def validate(self) -> None:
        positive = ["hidden_dim", "encoder_heads", "ff_dim", "perspectives", "fusion_heads",
                    "conv_ops", "conv_filters", "classifier_hidden", "batch_size", "eval_batch_size"]
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.encoder_layers < 0 or self.epochs < 0:
            raise ConfigError("encoder_layers and epochs must be non-negative")
        if self.hidden_dim % self.encoder_heads:
            raise ConfigError(f"hidden_dim {self.hidden_dim} not divisible by encoder_heads {self.encoder_heads}")
        if self.enable_fusion and self.fusion_dim % self.fusion_heads:
            raise ConfigError(f"fusion input width {self.fusion_dim} not divisible by fusion_heads {self.fusion_heads}")
        if self.mode not in ("joint", "siamese"):
            raise ConfigError(f"mode must be 'joint' or 'siamese', got {self.mode!r}")
        if self.multi_gold_target not in ("uniform", "first"):
            raise ConfigError(f"multi_gold_target must be 'uniform' or 'first', got {self.multi_gold_target!r}")
        if self.conv_ops > 2:
            # fused sequences can be as short as two rows
            raise ConfigError("conv_ops > 2 would exceed the shortest fused sequence")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.clip_threshold <= 0:
            raise ConfigError("clip_threshold must be > 0")
        if self.max_len < 6:
            raise ConfigError("max_len must leave room for four special tokens and one token per argument")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "ModelConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        coerced = {}
        for key, value in values.items():
            default = known[key].default
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ConfigError(f"config field {key} must be a boolean, got {value!r}")
            elif isinstance(default, int):
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ConfigError(f"config field {key} must be an integer, got {value!r}")
            elif isinstance(default, float):
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ConfigError(f"config field {key} must be a number, got {value!r}")
                value = float(value)
            elif isinstance(default, str) and not isinstance(value, str):
                raise ConfigError(f"config field {key} must be a string, got {value!r}")
            coerced[key] = value
        return cls(**coerced)

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)


def load_config(path: str | Path) -> ModelConfig:
    path = Path(path)
    try:
        values = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: config must be a flat key-value object")
    try:
        return ModelConfig.from_dict(values)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def save_config(config: ModelConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def small_config(**overrides) -> ModelConfig:
    """Tiny dimensions used for gradient checking."""
    values = dict(
        hidden_dim=8, encoder_layers=1, encoder_heads=2, ff_dim=12, max_len=16,
        perspectives=2, fusion_heads=2, conv_ops=2, conv_filters=3,
        classifier_hidden=6, dropout=0.0, batch_size=2,
    )
    values.update(overrides)
    return ModelConfig(**values)
