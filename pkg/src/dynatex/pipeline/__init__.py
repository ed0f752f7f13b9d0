from .config import PretrainConfig, TrainConfig
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = ["PretrainConfig", "TrainConfig", "load_checkpoint", "save_checkpoint"]
