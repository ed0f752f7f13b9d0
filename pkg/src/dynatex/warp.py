"""Backward warping by a dense displacement field.

The source location for output pixel (x, y) is (x + dx, y + dy) in the
input image; values are bilinearly interpolated and out-of-bounds sources
contribute zeros. Zero flow reproduces the input bit for bit (the bilinear
weights collapse to exactly 1 and 0), which downstream identity checks rely
on.

Every call increments a module-level counter. The inference path must never
warp (flow is a training-only input), and the counter is how that structural
claim is verified rather than asserted on faith.
"""

import torch

from .errors import ShapeError

_calls = 0


def warp_call_count():
    return _calls


def reset_warp_call_count():
    global _calls
    _calls = 0


def warp(image, flow):
    """image: (C, H, W); flow: (H, W, 2) displacements. Returns (C, H, W).

    Differentiable w.r.t. the image (and piecewise w.r.t. the flow).
    """
    global _calls
    _calls += 1
    if image.dim() != 3:
        raise ShapeError("image must be (C, H, W), got %s" % (tuple(image.shape),))
    if flow.dim() != 3 or flow.shape[-1] != 2:
        raise ShapeError("flow must be (H, W, 2), got %s" % (tuple(flow.shape),))
    C, H, W = image.shape
    if flow.shape[0] != H or flow.shape[1] != W:
        raise ShapeError("flow spatial size %s does not match image %s"
                         % (tuple(flow.shape[:2]), (H, W)))
    dtype = image.dtype
    xs = torch.arange(W, dtype=dtype, device=image.device)[None, :].expand(H, W)
    ys = torch.arange(H, dtype=dtype, device=image.device)[:, None].expand(H, W)
    sx = xs + flow[..., 0].to(dtype)
    sy = ys + flow[..., 1].to(dtype)
    x0 = sx.floor()
    y0 = sy.floor()
    fx = sx - x0
    fy = sy - y0
    x0 = x0.long()
    y0 = y0.long()
    x1 = x0 + 1
    y1 = y0 + 1

    def corner(xi, yi, wgt):
        valid = (xi >= 0) & (xi <= W - 1) & (yi >= 0) & (yi <= H - 1)
        xi = xi.clamp(0, W - 1)
        yi = yi.clamp(0, H - 1)
        vals = image.reshape(C, H * W)[:, (yi * W + xi).reshape(-1)].reshape(C, H, W)
        return vals * (wgt * valid.to(dtype))

    out = (
        corner(x0, y0, (1 - fx) * (1 - fy))
        + corner(x1, y0, fx * (1 - fy))
        + corner(x0, y1, (1 - fx) * fy)
        + corner(x1, y1, fx * fy)
    )
    return out
