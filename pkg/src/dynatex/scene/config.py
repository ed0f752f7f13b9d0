"""Scene description for the synthetic puppet corpus.

A SceneConfig pins everything needed to re-render a sequence exactly:
geometry seed, per-frame motion script, per-part surface styles, the
pose-dependent shading amplitude, and the background style. Randomized
configs come from sample_scene_config; tests and tools may also build
configs by hand (e.g. pure-translation scripts for flow checks).
"""

import numpy as np

from ..errors import ConfigError, SchemaError

PART_PATTERNS = ("stripes", "checker", "rings", "gradient")
BG_PATTERNS = ("gradient", "checker", "rings")

_SCENE_KEYS = {
    "image_size",
    "n_parts",
    "n_frames",
    "seed",
    "detail_amplitude",
    "motion_script",
    "texture_spec",
    "background_spec",
}


class SceneConfig:
    def __init__(
        self,
        image_size,
        n_parts,
        motion_script,
        texture_spec,
        background_spec,
        detail_amplitude=0.0,
        seed=0,
    ):
        self.image_size = tuple(int(v) for v in image_size)
        self.n_parts = int(n_parts)
        self.motion_script = motion_script
        self.texture_spec = texture_spec
        self.background_spec = background_spec
        self.detail_amplitude = float(detail_amplitude)
        self.seed = int(seed)
        self.validate()

    @property
    def n_frames(self):
        return len(self.motion_script)

    def validate(self):
        h, w = self.image_size
        if h < 16 or w < 16:
            raise ConfigError("image_size must be at least 16x16, got %dx%d" % (h, w))
        if self.n_parts < 1:
            raise ConfigError("n_parts must be >= 1, got %d" % self.n_parts)
        if len(self.motion_script) < 2:
            raise ConfigError("motion_script must cover at least 2 frames")
        for t, entry in enumerate(self.motion_script):
            if set(entry) != {"root", "angles"}:
                raise ConfigError("motion_script[%d] must have exactly root and angles" % t)
            if len(entry["root"]) != 2:
                raise ConfigError("motion_script[%d].root must have 2 entries" % t)
            if len(entry["angles"]) != self.n_parts:
                raise ConfigError(
                    "motion_script[%d].angles must have n_parts=%d entries" % (t, self.n_parts)
                )
        if len(self.texture_spec) != self.n_parts:
            raise ConfigError("texture_spec must have one entry per part")
        for k, style in enumerate(self.texture_spec):
            if style["pattern"] not in PART_PATTERNS:
                raise ConfigError("texture_spec[%d].pattern unknown: %r" % (k, style["pattern"]))
        if self.background_spec["pattern"] not in BG_PATTERNS:
            raise ConfigError(
                "background_spec.pattern unknown: %r" % (self.background_spec["pattern"],)
            )
        if not 0.0 <= self.detail_amplitude < 1.0:
            raise ConfigError(
                "detail_amplitude must be in [0, 1), got %g" % self.detail_amplitude
            )

    def to_dict(self):
        return {
            "image_size": list(self.image_size),
            "n_parts": self.n_parts,
            "n_frames": self.n_frames,
            "seed": self.seed,
            "detail_amplitude": self.detail_amplitude,
            "motion_script": self.motion_script,
            "texture_spec": self.texture_spec,
            "background_spec": self.background_spec,
        }

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SchemaError("scene config must be a JSON object")
        unknown = set(d) - _SCENE_KEYS
        if unknown:
            raise SchemaError("scene config has unknown keys: %s" % sorted(unknown))
        missing = _SCENE_KEYS - set(d) - {"n_frames"}
        if missing:
            raise SchemaError("scene config is missing keys: %s" % sorted(missing))
        cfg = cls(
            image_size=d["image_size"],
            n_parts=d["n_parts"],
            motion_script=d["motion_script"],
            texture_spec=d["texture_spec"],
            background_spec=d["background_spec"],
            detail_amplitude=d["detail_amplitude"],
            seed=d["seed"],
        )
        if "n_frames" in d and int(d["n_frames"]) != cfg.n_frames:
            raise SchemaError("scene config n_frames does not match motion_script length")
        return cfg


def _sample_style(rng):
    color = rng.uniform(0.15, 0.9, size=3)
    accent = np.clip(color + rng.choice([-1.0, 1.0]) * rng.uniform(0.25, 0.5, size=3), 0.02, 0.98)
    return {
        "pattern": str(rng.choice(PART_PATTERNS)),
        "color": color.tolist(),
        "accent": accent.tolist(),
        "freq_u": int(rng.integers(1, 4)),
        "freq_v": int(rng.integers(1, 3)),
        "phase": float(rng.uniform(0, 2 * np.pi)),
    }


def sample_scene_config(
    seed, image_size=(64, 64), n_parts=8, n_frames=300, detail_amplitude=0.5
):
    """Random but smooth scene: sinusoidal joint swings plus a root orbit.

    Motion covers a decent range of poses so held-out frames include both
    near-duplicates of training poses and genuinely novel ones.
    """
    rng = np.random.default_rng(seed)
    h, w = image_size
    scale = min(h, w)

    mean_angles = np.concatenate(
        [rng.uniform(0, 2 * np.pi, size=1), rng.uniform(-0.7, 0.7, size=n_parts - 1)]
    )
    swing_amp = rng.uniform(0.15, 0.55, size=n_parts)
    swing_freq = rng.integers(1, 5, size=n_parts)
    swing_phase = rng.uniform(0, 2 * np.pi, size=n_parts)
    orbit_amp = rng.uniform(0.02, 0.08, size=2) * scale
    orbit_freq = rng.integers(1, 3, size=2)
    orbit_phase = rng.uniform(0, 2 * np.pi, size=2)

    motion_script = []
    for t in range(n_frames):
        tau = 2 * np.pi * t / n_frames
        root = [
            float(orbit_amp[0] * np.sin(orbit_freq[0] * tau + orbit_phase[0])),
            float(orbit_amp[1] * np.cos(orbit_freq[1] * tau + orbit_phase[1])),
        ]
        angles = mean_angles + swing_amp * np.sin(swing_freq * tau + swing_phase)
        motion_script.append({"root": root, "angles": angles.tolist()})

    texture_spec = [_sample_style(rng) for _ in range(n_parts)]
    bg_color = rng.uniform(0.1, 0.9, size=3)
    bg_accent = np.clip(bg_color + rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 0.4, size=3), 0.02, 0.98)
    background_spec = {
        "pattern": str(rng.choice(BG_PATTERNS)),
        "color": bg_color.tolist(),
        "accent": bg_accent.tolist(),
        "freq": int(rng.integers(2, 6)),
    }
    return SceneConfig(
        image_size=image_size,
        n_parts=n_parts,
        motion_script=motion_script,
        texture_spec=texture_spec,
        background_spec=background_spec,
        detail_amplitude=detail_amplitude,
        seed=seed,
    )
