"""Pose conditioning labels and keypoint-space pose distances.

The pose label is a 6-channel raster. Channels 0-2 draw the skeleton as
anti-aliased segments, one fixed palette color per bone. Channels 3-5 are a
geometry raster over the puppet silhouette implied by the keypoints: the
owning part's unit orientation vector remapped to [0,1] (two channels) and
its depth order k/N (one channel). Both halves are deterministic functions
of the keypoints, so the label is a pure pose encoding.
"""

import colorsys

import numpy as np

from .errors import SchemaError
from .scene import core


class KeypointSet:
    def __init__(self, points, visibility=None):
        self.points = np.asarray(points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise SchemaError("keypoints must have shape (J, 2)")
        if not np.isfinite(self.points).all():
            raise SchemaError("keypoints must be finite")
        if visibility is None:
            visibility = np.ones(len(self.points), dtype=bool)
        self.visibility = np.asarray(visibility, dtype=bool)
        if self.visibility.shape != (len(self.points),):
            raise SchemaError("visibility must have one flag per keypoint")

    @property
    def n_joints(self):
        return len(self.points)

    @classmethod
    def from_points(cls, points, image_size=None):
        """Visibility from image bounds when a canvas size is given."""
        points = np.asarray(points, dtype=np.float64)
        if image_size is None:
            return cls(points)
        h, w = image_size
        vis = (
            (points[:, 0] >= 0)
            & (points[:, 0] <= w - 1)
            & (points[:, 1] >= 0)
            & (points[:, 1] <= h - 1)
        )
        return cls(points, vis)


def bone_palette(n_bones):
    """Fixed, evenly spaced bone colors (n_bones, 3) in [0, 1]."""
    colors = [colorsys.hsv_to_rgb(k / max(n_bones, 1), 0.85, 1.0) for k in range(n_bones)]
    return np.asarray(colors, dtype=np.float64)


def _draw_segment(channels, a, b, color, line_radius=0.75):
    """Max-composite one anti-aliased segment into channels (H, W, 3)."""
    h, w = channels.shape[:2]
    x0 = max(int(np.floor(min(a[0], b[0]) - line_radius - 1)), 0)
    x1 = min(int(np.ceil(max(a[0], b[0]) + line_radius + 1)), w - 1)
    y0 = max(int(np.floor(min(a[1], b[1]) - line_radius - 1)), 0)
    y1 = min(int(np.ceil(max(a[1], b[1]) + line_radius + 1)), h - 1)
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)[None, :]
    ys = np.arange(y0, y1 + 1, dtype=np.float64)[:, None]
    tx = b[0] - a[0]
    ty = b[1] - a[1]
    L2 = tx * tx + ty * ty
    dx = xs - a[0]
    dy = ys - a[1]
    if L2 > 0:
        s = np.clip((dx * tx + dy * ty) / L2, 0.0, 1.0)
    else:
        s = 0.0
    rx = dx - s * tx
    ry = dy - s * ty
    dist = np.sqrt(rx * rx + ry * ry)
    alpha = np.clip(line_radius + 0.5 - dist, 0.0, 1.0)
    patch = channels[y0 : y1 + 1, x0 : x1 + 1]
    np.maximum(patch, alpha[..., None] * color[None, None, :], out=patch)


def rasterize_pose(kps, geometry, size):
    """6-channel pose label (H, W, 6) in [0, 1] for one keypoint set.

    Bones touching an invisible joint are dropped from both halves of the
    label. Raises a schema error when the keypoint count does not match the
    skeleton implied by the geometry.
    """
    if kps.n_joints != geometry.n_joints:
        raise SchemaError(
            "keypoint set has %d joints, skeleton expects %d"
            % (kps.n_joints, geometry.n_joints)
        )
    h, w = size
    label = np.zeros((h, w, 6), dtype=np.float64)
    palette = bone_palette(geometry.n_parts)
    n = geometry.n_parts
    owner = np.zeros((h, w), dtype=np.int32)
    orient = np.zeros((h, w, 2), dtype=np.float64)
    # bones composited in chain order so the higher part index stays on top,
    # same depth rule as the rendered frames
    for k, (i, j) in enumerate(geometry.bones()):
        if not (kps.visibility[i] and kps.visibility[j]):
            continue
        a = kps.points[i]
        b = kps.points[j]
        _draw_segment(label[..., 0:3], a, b, palette[k])
        tx = b[0] - a[0]
        ty = b[1] - a[1]
        L = np.sqrt(tx * tx + ty * ty)
        if L == 0:
            continue
        pid, _ = core.ownership_grid(np.stack([a, b]), geometry.radii[k : k + 1], h, w)
        mask = pid == 1
        owner[mask] = k + 1
        orient[mask, 0] = tx / L
        orient[mask, 1] = ty / L
    fg = owner > 0
    label[..., 3][fg] = (orient[fg, 0] + 1.0) / 2.0
    label[..., 4][fg] = (orient[fg, 1] + 1.0) / 2.0
    label[..., 5][fg] = owner[fg].astype(np.float64) / n
    return label


def pose_distance(a, b):
    """Euclidean norm of stacked coordinate differences over mutually
    visible keypoints, in raw pixel units (no joint-count or image-size
    normalization)."""
    if a.n_joints != b.n_joints:
        raise ValueError("keypoint sets have different joint counts")
    both = a.visibility & b.visibility
    if not both.any():
        raise ValueError("pose distance undefined: no mutually visible keypoints")
    diff = a.points[both] - b.points[both]
    return float(np.sqrt(np.sum(diff * diff)))


def select_challenging(validation, training, m):
    """Indices of the M validation poses farthest from the training set.

    d_i is the nearest-neighbor distance from validation pose i to the
    training poses; the M largest d_i win, ties broken by lower index.
    """
    if not validation or not training:
        raise ValueError("validation and training pose lists must be nonempty")
    if m > len(validation):
        raise ValueError("cannot select %d poses from %d" % (m, len(validation)))
    if m < 0:
        raise ValueError("selection count must be nonnegative")
    d = [min(pose_distance(v, t) for t in training) for v in validation]
    order = sorted(range(len(d)), key=lambda i: (-d[i], i))
    return order[:m]
