"""Training configuration, parsed strictly from JSON.

Unknown keys anywhere in the document are rejected so a typo cannot
silently fall back to a default. Epoch counts follow the documented
defaults (5 UV pretraining epochs, 30 joint epochs); desk-scale runs
are expected to override them downward.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from ..errors import ConfigError
from ..losses import LossWeights

_WEIGHT_DEFAULTS = {"lambda_temp": 100.0, "lambda_feat": 10.0,
                    "lambda_l2": 200.0, "learning_rate": 0.002}
_UVGEN_DEFAULTS = {"base": 16, "downsamples": 2, "norm": "instance"}
_D2G_DEFAULTS = {"base": 24, "res_blocks": 4, "condition": True}
_DISC_DEFAULTS = {"base": 24, "layers": 3}


def _require_keys(d, allowed, where):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError("%s: unknown keys %s" % (where, sorted(unknown)))


def _merge(given, defaults, where):
    if not isinstance(given, dict):
        raise ConfigError("%s must be an object" % where)
    _require_keys(given, defaults, where)
    merged = dict(defaults)
    merged.update(given)
    return merged


def _strict_fields(cls, d, required):
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    _require_keys(d, {f.name for f in dataclasses.fields(cls)}, "config")
    for key in required:
        if key not in d:
            raise ConfigError("config is missing required key %r" % key)


@dataclass
class TrainConfig:
    dataset: str
    n_parts: int
    image_size: tuple = (64, 64)
    texture_resolution: int = 64
    epochs: int = 30
    pretrain_epochs: int = 5
    seed: int = 0
    val_fraction: float = 0.1
    checkpoint_every: int = 1
    weights: LossWeights = field(default_factory=LossWeights)
    betas: tuple = (0.5, 0.999)
    uvgen: dict = field(default_factory=dict)
    d2g: dict = field(default_factory=dict)
    disc: dict = field(default_factory=dict)
    use_d2g: bool = True
    use_gan: bool = True
    regular_loss: bool = True
    bg_mask_dilation: int = 2
    disc_steps: int = 1
    challenging_m: int = 10
    pretrained_uvgen: str = None

    def __post_init__(self):
        self.image_size = tuple(int(v) for v in self.image_size)
        self.betas = tuple(float(v) for v in self.betas)
        if isinstance(self.weights, dict):
            merged = _merge(self.weights, _WEIGHT_DEFAULTS, "config.weights")
            self.weights = LossWeights(**{k: float(v) for k, v in merged.items()})
        self.uvgen = _merge(self.uvgen, _UVGEN_DEFAULTS, "config.uvgen")
        self.d2g = _merge(self.d2g, _D2G_DEFAULTS, "config.d2g")
        self.disc = _merge(self.disc, _DISC_DEFAULTS, "config.disc")
        if not self.dataset:
            raise ConfigError("dataset path must be set")
        if self.n_parts < 1:
            raise ConfigError("n_parts must be at least 1")
        if len(self.image_size) != 2 or min(self.image_size) < 16:
            raise ConfigError("image_size must be (h, w) with both at least 16")
        if self.texture_resolution < 2:
            raise ConfigError("texture_resolution must be at least 2")
        if self.epochs < 0 or self.pretrain_epochs < 0:
            raise ConfigError("epoch counts must be nonnegative")
        if not (0.0 < self.val_fraction < 1.0):
            raise ConfigError("val_fraction must be in (0, 1)")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be nonnegative")
        if len(self.betas) != 2 or not all(0.0 <= b < 1.0 for b in self.betas):
            raise ConfigError("betas must be two values in [0, 1)")
        if self.disc_steps < 1:
            raise ConfigError("disc_steps must be at least 1")
        if self.challenging_m < 0:
            raise ConfigError("challenging_m must be nonnegative")

    @classmethod
    def from_dict(cls, d):
        _strict_fields(cls, d, ("dataset", "n_parts"))
        return cls(**d)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["weights"] = dataclasses.asdict(self.weights)
        d["image_size"] = list(self.image_size)
        d["betas"] = list(self.betas)
        return d

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


@dataclass
class PretrainConfig:
    """UV-generator pretraining across several scenes of one puppet family."""

    datasets: list
    n_parts: int
    image_size: tuple = (64, 64)
    epochs: int = 5
    seed: int = 0
    val_fraction: float = 0.1
    learning_rate: float = 0.002
    betas: tuple = (0.5, 0.999)
    checkpoint_every: int = 1
    uvgen: dict = field(default_factory=dict)

    def __post_init__(self):
        self.datasets = list(self.datasets)
        self.image_size = tuple(int(v) for v in self.image_size)
        self.betas = tuple(float(v) for v in self.betas)
        self.uvgen = _merge(self.uvgen, _UVGEN_DEFAULTS, "config.uvgen")
        if len(self.datasets) < 2:
            raise ConfigError("uv pretraining needs at least 2 distinct scenes")
        if len(set(self.datasets)) != len(self.datasets):
            raise ConfigError("pretraining scene list has duplicates")
        if self.n_parts < 1:
            raise ConfigError("n_parts must be at least 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if not (0.0 < self.val_fraction < 1.0):
            raise ConfigError("val_fraction must be in (0, 1)")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be nonnegative")

    @classmethod
    def from_dict(cls, d):
        _strict_fields(cls, d, ("datasets", "n_parts"))
        return cls(**d)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["image_size"] = list(self.image_size)
        d["betas"] = list(self.betas)
        return d

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def load_config(path, cls=TrainConfig, overrides=None):
    try:
        with open(path) as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path)
    except json.JSONDecodeError as e:
        raise ConfigError("config file %s is not valid JSON: %s" % (path, e))
    if overrides:
        doc.update(overrides)
    return cls.from_dict(doc)
