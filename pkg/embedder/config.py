"""
Run configuration - defaults, SCEMBED_* environment overrides and CLI flags
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields
from typing import Dict, Mapping, Optional

from .autoencoder import METHODS, AutoencoderModel, RandomWalkConfig
from .errors import ConfigError
from .message_passing import SCHEMES
from .metrics import SamplingConfig
from .pooling import MODES

ENV_PREFIX = "SCEMBED_"


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot read '{raw}' as a boolean")


@dataclass
class RunConfig:
    """Every hyperparameter of a pipeline run"""

    # simplex-level autoencoder
    encoder: str = "cxn"
    scheme: str = "amps"
    hcmps_split: bool = False
    layers: int = 2
    feature_scheme: str = "structural"
    method: str = "inner_product"
    embed_dim: int = 16
    epochs: int = 300
    learning_rate: float = 0.01
    optimizer: str = "adam"
    batch_size: int = 0
    negative_ratio: int = 5
    walks_per_simplex: int = 10
    walk_length: int = 10
    window: int = 2

    # complex-level pooling
    pool_mode: str = "stress"
    pool_epochs: int = 300
    pool_learning_rate: float = 0.01
    margin: float = 1.0

    # distance matrix
    points_per_top_simplex: int = 0

    seed: int = 0

    @classmethod
    def from_env(
        cls,
        environ: Optional[Mapping[str, str]] = None,
        overrides: Optional[Dict] = None,
    ) -> "RunConfig":
        """
        Resolve the config: flags > environment > defaults

        Args:
            environ: Variables to read (defaults to os.environ, which main.py
                has already populated from .env)
            overrides: Values given explicitly, e.g. CLI flags; None entries
                are ignored
        """
        environ = os.environ if environ is None else environ
        values = {}
        for f in fields(cls):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is None:
                continue
            try:
                if f.type in (bool, "bool"):
                    values[f.name] = _parse_bool(raw)
                elif f.type in (int, "int"):
                    values[f.name] = int(raw)
                elif f.type in (float, "float"):
                    values[f.name] = float(raw)
                else:
                    values[f.name] = raw
            except ValueError as e:
                raise ConfigError(f"{ENV_PREFIX}{f.name.upper()}: {e}")
        for name, value in (overrides or {}).items():
            if value is not None:
                values[name] = value
        config = cls(**values)
        config.validate()
        return config

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {sorted(METHODS)}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {list(SCHEMES)}")
        if self.feature_scheme not in ("structural", "ones"):
            raise ConfigError("feature_scheme must be 'structural' or 'ones'")
        if self.pool_mode not in MODES:
            raise ConfigError(f"pool_mode must be one of {list(MODES)}")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError("optimizer must be 'sgd' or 'adam'")
        for name in ("layers", "embed_dim", "epochs", "pool_epochs", "walks_per_simplex", "walk_length", "window"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("batch_size", "negative_ratio", "points_per_top_simplex", "margin"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.learning_rate <= 0 or self.pool_learning_rate <= 0:
            raise ConfigError("learning rates must be positive")
        # method triple and encoder rules
        self.autoencoder_model()

    def autoencoder_model(self) -> AutoencoderModel:
        return AutoencoderModel(
            method=self.method,
            encoder=self.encoder,
            scheme=self.scheme,
            layers=self.layers,
            embed_dim=self.embed_dim,
            feature_scheme=self.feature_scheme,
            hcmps_split=self.hcmps_split,
            negative_ratio=self.negative_ratio,
            walk=RandomWalkConfig(self.walks_per_simplex, self.walk_length, self.window, self.seed),
        )

    def sampling(self) -> SamplingConfig:
        return SamplingConfig(self.points_per_top_simplex, self.seed)

    def to_dict(self) -> Dict:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def describe(self) -> str:
        lines = [f"   {name:<24}{value}" for name, value in self.to_dict().items()]
        return "\n".join(["⚙️  Resolved configuration:"] + lines + [f"   {'config_hash':<24}{self.config_hash()}"])
