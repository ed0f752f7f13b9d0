"""UV generator: pose label in, part probabilities and chart coords out.

A small encoder-decoder with skip connections. Two heads: an (N+1)-way
probability map normalized with softmax (index 0 is background) and 2N
sigmoid-bounded chart coordinates, reshaped to (N, H, W, 2) to match the
texture sampler's layout.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ShapeError

POSE_CHANNELS = 6


def _norm_layer(kind, ch):
    if kind == "instance":
        return nn.InstanceNorm2d(ch, affine=True)
    if kind == "batch":
        return nn.BatchNorm2d(ch)
    if kind == "none":
        return nn.Identity()
    raise ValueError("unknown norm flavor %r" % (kind,))


def _conv_block(cin, cout, norm):
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1),
        _norm_layer(norm, cout),
        nn.ReLU(inplace=True),
    )


class UVGenerator(nn.Module):
    def __init__(self, n_parts, base=16, downsamples=2, norm="instance"):
        super().__init__()
        self.n_parts = n_parts
        self.downsamples = downsamples
        widths = [base * (2 ** i) for i in range(downsamples + 1)]
        self.stem = _conv_block(POSE_CHANNELS, widths[0], norm)
        self.down = nn.ModuleList()
        for i in range(downsamples):
            self.down.append(nn.Sequential(
                nn.Conv2d(widths[i], widths[i + 1], 3, stride=2, padding=1),
                _norm_layer(norm, widths[i + 1]),
                nn.ReLU(inplace=True),
                _conv_block(widths[i + 1], widths[i + 1], norm),
            ))
        self.bottleneck = _conv_block(widths[-1], widths[-1], norm)
        self.up = nn.ModuleList()
        for i in reversed(range(downsamples)):
            self.up.append(nn.Sequential(
                nn.Conv2d(widths[i + 1] + widths[i], widths[i], 3, padding=1),
                _norm_layer(norm, widths[i]),
                nn.ReLU(inplace=True),
            ))
        self.prob_head = nn.Conv2d(widths[0], n_parts + 1, 1)
        self.coord_head = nn.Conv2d(widths[0], n_parts * 2, 1)

    def forward(self, pose):
        """pose: (B, 6, H, W) -> probs (B, N+1, H, W), coords (B, N, H, W, 2)."""
        if pose.dim() != 4 or pose.shape[1] != POSE_CHANNELS:
            raise ShapeError("pose label must be (B, 6, H, W), got %s" % (tuple(pose.shape),))
        h, w = pose.shape[2], pose.shape[3]
        if h % (2 ** self.downsamples) or w % (2 ** self.downsamples):
            raise ShapeError(
                "spatial size %dx%d not divisible by %d" % (h, w, 2 ** self.downsamples)
            )
        x = self.stem(pose)
        skips = [x]
        for blk in self.down:
            x = blk(x)
            skips.append(x)
        x = self.bottleneck(x)
        for level, blk in enumerate(self.up):
            skip = skips[self.downsamples - 1 - level]
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = blk(torch.cat([x, skip], dim=1))
        probs = torch.softmax(self.prob_head(x), dim=1)
        b = pose.shape[0]
        coords = torch.sigmoid(self.coord_head(x))
        coords = coords.reshape(b, self.n_parts, 2, h, w).permute(0, 1, 3, 4, 2)
        return probs, coords


def predict_uv(model, pose):
    """Single-image convenience wrapper: (6, H, W) -> ((N+1, H, W), (N, H, W, 2))."""
    probs, coords = model(pose.unsqueeze(0))
    return probs[0], coords[0]


def uv_pretrain_loss(probs, coords, part_id, uv_gt):
    """Pretraining objective: part cross entropy plus masked coordinate L1.

    probs (N+1, H, W); coords (N, H, W, 2); part_id (H, W) int in 0..N;
    uv_gt (H, W, 2) defined where part_id > 0. The cross entropy is averaged
    over all pixels; the L1 term takes each foreground pixel's ground-truth
    part only, sums |du| + |dv|, and averages over foreground pixels
    (coordinates of non-owning parts are undefined, so they carry no loss).
    """
    if probs.dim() != 3 or coords.dim() != 4 or coords.shape[-1] != 2:
        raise ShapeError("expected probs (N+1, H, W) and coords (N, H, W, 2)")
    n_classes, h, w = probs.shape
    if coords.shape[0] != n_classes - 1:
        raise ShapeError("coords part count must equal probability classes - 1")
    if part_id.shape != (h, w) or uv_gt.shape != (h, w, 2):
        raise ShapeError("ground truth shapes do not match the prediction")
    part_id = part_id.long()
    logp = torch.log(probs.clamp_min(1e-12))
    ce = F.nll_loss(logp.unsqueeze(0), part_id.unsqueeze(0), reduction="mean")
    fg = part_id > 0
    if fg.any():
        idx = (part_id - 1).clamp_min(0)
        idx = idx[None, :, :, None].expand(1, h, w, 2)
        picked = coords.gather(0, idx)[0]
        l1 = (picked - uv_gt).abs().sum(dim=-1)[fg].mean()
    else:
        l1 = probs.new_zeros(())
    return ce + l1
