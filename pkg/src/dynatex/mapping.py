"""Differentiable screen-space texture mapping and probability blending.

Texel addressing: u = 0 hits the center of texel 0, u = 1 the center of
texel R-1, i.e. continuous index u * (R - 1) with bilinear interpolation
between the four surrounding texel centers. Coordinates outside [0, 1] are
clamped (part charts are not periodic); every clamped call bumps a debug
counter inspectable via out_of_range_count().
"""

import torch

from .errors import ShapeError

_out_of_range = 0


def out_of_range_count():
    return _out_of_range


def reset_out_of_range_count():
    global _out_of_range
    _out_of_range = 0


def sample_part(texture, coords):
    """Bilinear lookup of one part chart at per-pixel chart coordinates.

    texture: (C, R, R); coords: (H, W, 2) with (u, v) in the last axis.
    Returns (C, H, W), differentiable w.r.t. both arguments.
    """
    if texture.dim() != 3 or texture.shape[1] != texture.shape[2]:
        raise ShapeError("texture must be (C, R, R), got %s" % (tuple(texture.shape),))
    if coords.dim() != 3 or coords.shape[-1] != 2:
        raise ShapeError("coords must be (H, W, 2), got %s" % (tuple(coords.shape),))
    global _out_of_range
    with torch.no_grad():
        bad = int(((coords < 0.0) | (coords > 1.0)).sum())
    if bad:
        _out_of_range += bad
    coords = coords.clamp(0.0, 1.0)
    C, R, _ = texture.shape
    H, W = coords.shape[:2]
    x = coords[..., 0] * (R - 1)
    y = coords[..., 1] * (R - 1)
    x0 = x.floor().clamp(0, max(R - 2, 0))
    y0 = y.floor().clamp(0, max(R - 2, 0))
    fx = x - x0
    fy = y - y0
    x0 = x0.long()
    y0 = y0.long()
    x1 = (x0 + 1).clamp(max=R - 1)
    y1 = (y0 + 1).clamp(max=R - 1)
    flat = texture.reshape(C, R * R)
    v00 = flat[:, (y0 * R + x0).reshape(-1)].reshape(C, H, W)
    v01 = flat[:, (y0 * R + x1).reshape(-1)].reshape(C, H, W)
    v10 = flat[:, (y1 * R + x0).reshape(-1)].reshape(C, H, W)
    v11 = flat[:, (y1 * R + x1).reshape(-1)].reshape(C, H, W)
    w00 = (1 - fx) * (1 - fy)
    w01 = fx * (1 - fy)
    w10 = (1 - fx) * fy
    w11 = fx * fy
    return v00 * w00 + v01 * w01 + v10 * w10 + v11 * w11


def sample_all_parts(texture_values, coords):
    """sample_part over every part at once.

    texture_values: (N, C, R, R); coords: (N, H, W, 2). Returns (N, C, H, W).
    """
    if texture_values.dim() != 4:
        raise ShapeError("texture stack must be (N, C, R, R)")
    if coords.dim() != 4 or coords.shape[-1] != 2 or coords.shape[0] != texture_values.shape[0]:
        raise ShapeError("coords must be (N, H, W, 2) with matching N")
    return torch.stack(
        [sample_part(texture_values[k], coords[k]) for k in range(texture_values.shape[0])]
    )


def blend_parts(part_probs, samples):
    """Probability-weighted sum of per-part samples; background excluded.

    part_probs: (N+1, H, W) with index 0 = background; samples: (N, C, H, W).
    Returns (C, H, W) = sum_k part_probs[k] * samples[k-1] over k = 1..N.
    """
    if part_probs.dim() != 3 or samples.dim() != 4:
        raise ShapeError("part_probs must be (N+1, H, W) and samples (N, C, H, W)")
    if part_probs.shape[0] != samples.shape[0] + 1:
        raise ShapeError(
            "got %d probability maps for %d part samples; need N+1"
            % (part_probs.shape[0], samples.shape[0])
        )
    if part_probs.shape[1:] != samples.shape[2:]:
        raise ShapeError("part_probs and samples disagree on spatial size")
    return (part_probs[1:, None] * samples).sum(dim=0)


def static_component(feature):
    """RGB slice (channels 0-2) of an 18-channel screen feature."""
    if feature.dim() != 3 or feature.shape[0] < 3:
        raise ShapeError("feature must be (C>=3, H, W)")
    return feature[0:3]
