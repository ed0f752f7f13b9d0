"""Learnable background plate: analytic initialization and compositing.

Initialization is a per-pixel mean over the frames in which that pixel is
background. Pixels never seen as background are filled by neighbor
diffusion; a video with no background at all falls back to the global mean
color (with a warning flag). The optional mask dilation widens the
foreground before averaging: colors right at the silhouette are easily
contaminated by mixed pixels, so a small safety margin is standard, at the
cost of a slightly blurrier initial plate near edges (joint training is
what sharpens those back up).
"""

import numpy as np

from .errors import ShapeError
from .texture import _diffuse_fill


def dilate_masks(masks, iterations):
    """Binary 3x3 dilation, `iterations` times. masks: (..., H, W) bool."""
    masks = np.asarray(masks).astype(bool)
    for _ in range(iterations):
        out = masks.copy()
        out[..., 1:, :] |= masks[..., :-1, :]
        out[..., :-1, :] |= masks[..., 1:, :]
        out[..., :, 1:] |= masks[..., :, :-1]
        out[..., :, :-1] |= masks[..., :, 1:]
        # diagonals complete the 3x3 structuring element
        out[..., 1:, 1:] |= masks[..., :-1, :-1]
        out[..., 1:, :-1] |= masks[..., :-1, 1:]
        out[..., :-1, 1:] |= masks[..., 1:, :-1]
        out[..., :-1, :-1] |= masks[..., 1:, 1:]
        masks = out
    return masks


def _diffuse_fill_image(img, covered):
    """4-neighbor averaging fill over an (H, W, 3) image, in place."""
    filled = _diffuse_fill(np.ascontiguousarray(img.transpose(2, 0, 1)), covered)
    img[:] = filled.transpose(1, 2, 0)
    return img


def init_background(frames, fg_masks, dilation=0):
    """Average each pixel over the frames where it shows background.

    frames: (T, H, W, 3); fg_masks: (T, H, W) booleans (True = foreground).
    Returns (background (H, W, 3) float64, info dict). info carries
    `all_foreground` (fallback used) and `never_background` (pixel count
    that needed diffusion fill).
    """
    frames = np.asarray(frames, dtype=np.float64)
    fg = np.asarray(fg_masks).astype(bool)
    if frames.ndim != 4 or frames.shape[3] != 3 or fg.shape != frames.shape[:3]:
        raise ShapeError("frames must be (T, H, W, 3) with aligned (T, H, W) masks")
    if dilation:
        fg = dilate_masks(fg, dilation)
    bg_mask = ~fg
    counts = bg_mask.sum(axis=0).astype(np.float64)
    sums = (frames * bg_mask[..., None]).sum(axis=0)
    out = np.zeros(frames.shape[1:], dtype=np.float64)
    seen = counts > 0
    info = {"all_foreground": False, "never_background": int((~seen).sum())}
    if not seen.any():
        out[:] = frames.mean(axis=(0, 1, 2))
        info["all_foreground"] = True
        return out, info
    out[seen] = sums[seen] / counts[seen][:, None]
    if not seen.all():
        _diffuse_fill_image(out, seen)
    return out, info


def composite(fg, bg, p0):
    """Blend foreground over background by the background probability.

    fg, bg: (3, H, W); p0: (H, W) in [0, 1]. Returns
    fg * (1 - p0) + bg * p0, differentiable in all three.
    """
    if fg.shape != bg.shape or fg.dim() != 3:
        raise ShapeError("foreground and background must both be (3, H, W)")
    if p0.shape != fg.shape[1:]:
        raise ShapeError("background probability must be (H, W)")
    p = p0.unsqueeze(0)
    return fg * (1.0 - p) + bg * p
