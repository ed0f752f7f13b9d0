"""Articulated puppet: a kinematic chain of capsule-shaped rigid parts.

Part k (1-based in rendered ids, 0-based here) is the capsule between chain
joints k and k+1, so a puppet with n parts has n+1 joints. Joint 0 is the
root. Every frame is posed by a root translation plus one relative angle per
part; absolute part angles are the running sum of the relative ones.

Each part carries a local (u, v) chart. With segment endpoints a, b,
unit axis e = (b - a) / L and unit normal n = perp(e), a point p maps to

    s = dot(p - a, e)            axial coordinate in [-r, L + r]
    d = dot(p - a, n)            lateral coordinate in [-r, r]
    u = (s + r) / (L + 2 r)
    v = (d + r) / (2 r)

which covers the capsule (segment dilated by radius r) with (u, v) in
[0, 1]^2. The chart is invertible: p = a + (u (L + 2r) - r) e + (v 2r - r) n,
which is what ground-truth optical flow is built from.
"""

import numpy as np

from ..errors import ConfigError


class PuppetGeometry:
    """Static shape of the puppet: per-part lengths and radii, base root."""

    def __init__(self, lengths, radii, base_root):
        self.lengths = np.asarray(lengths, dtype=np.float64)
        self.radii = np.asarray(radii, dtype=np.float64)
        self.base_root = np.asarray(base_root, dtype=np.float64)
        if self.lengths.ndim != 1 or self.lengths.shape != self.radii.shape:
            raise ConfigError("geometry lengths and radii must be 1-d and equal length")
        if self.base_root.shape != (2,):
            raise ConfigError("geometry base_root must have shape (2,)")
        if np.any(self.lengths <= 0) or np.any(self.radii <= 0):
            raise ConfigError("geometry lengths and radii must be positive")

    @property
    def n_parts(self):
        return len(self.lengths)

    @property
    def n_joints(self):
        return len(self.lengths) + 1

    def bones(self):
        """Joint index pairs, one per part, in chain order."""
        return [(k, k + 1) for k in range(self.n_parts)]

    def to_dict(self):
        return {
            "lengths": self.lengths.tolist(),
            "radii": self.radii.tolist(),
            "base_root": self.base_root.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["lengths"], d["radii"], d["base_root"])


def derive_geometry(n_parts, image_size, seed):
    """Sample a puppet that fits comfortably inside an image of image_size.

    The chain is sized so that even fully stretched it stays within roughly
    a third of the smaller image dimension from the root, leaving room for
    root translation without clipping.
    """
    h, w = image_size
    rng = np.random.default_rng(seed)
    scale = min(h, w)
    # total reach ~ scale * 0.40, split unevenly across parts; fat capsules
    # so the puppet fills a useful fraction of the frame and neighboring
    # parts overlap (overlap is what exercises the depth ordering)
    weights = rng.uniform(0.7, 1.3, size=n_parts)
    lengths = weights / weights.sum() * (scale * 0.42)
    # radii shrink along the chain: later parts draw on top, so giving them
    # smaller footprints keeps every part at least partly visible
    factors = np.sort(rng.uniform(0.9, 1.7, size=n_parts))[::-1]
    radii = np.maximum(lengths.mean() * factors, 2.2)
    base_root = np.array([w / 2.0, h / 2.0])
    return PuppetGeometry(lengths, radii, base_root)


def forward_kinematics(geometry, root_offset, rel_angles):
    """Joint positions (n_joints, 2) for one pose.

    root_offset shifts the root from geometry.base_root; rel_angles holds one
    relative angle per part (radians), accumulated along the chain.
    """
    rel_angles = np.asarray(rel_angles, dtype=np.float64)
    if rel_angles.shape != (geometry.n_parts,):
        raise ConfigError(
            "rel_angles must have one entry per part, got shape %s" % (rel_angles.shape,)
        )
    joints = np.empty((geometry.n_joints, 2), dtype=np.float64)
    joints[0] = geometry.base_root + np.asarray(root_offset, dtype=np.float64)
    theta = 0.0
    for k in range(geometry.n_parts):
        theta += rel_angles[k]
        joints[k + 1, 0] = joints[k, 0] + geometry.lengths[k] * np.cos(theta)
        joints[k + 1, 1] = joints[k, 1] + geometry.lengths[k] * np.sin(theta)
    return joints


def absolute_angles(rel_angles):
    """Per-part absolute angles: running sum of the relative ones."""
    return np.cumsum(np.asarray(rel_angles, dtype=np.float64))
