from .config import SceneConfig, sample_scene_config
from .geometry import PuppetGeometry, derive_geometry, forward_kinematics
from .generate import SyntheticSequence, brute_force_unwrap, generate_sequence
from .dataset_io import load_dataset, write_dataset

__all__ = [
    "SceneConfig",
    "sample_scene_config",
    "PuppetGeometry",
    "derive_geometry",
    "forward_kinematics",
    "SyntheticSequence",
    "generate_sequence",
    "brute_force_unwrap",
    "load_dataset",
    "write_dataset",
]
