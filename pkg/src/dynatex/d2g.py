"""Detail renderer: 18-channel screen feature to RGB foreground.

Residual translation net with the pose label injected at the middle: the
feature and the pose each pass through their own small encoder, the two are
concatenated channel-wise at the downsampled level, and a residual trunk
plus decoder produce the image. `condition=False` drops the pose branch
(the trunk then sees the feature encoding alone), which is the unconditioned
ablation arm. Output goes through tanh and is remapped to [0, 1] so all
image-space math stays in one range.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ShapeError
from .uvgen import POSE_CHANNELS, _norm_layer

FEATURE_CHANNELS = 18


class ResBlock(nn.Module):
    def __init__(self, ch, norm):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(ch, ch, 3, padding=1),
            _norm_layer(norm, ch),
            nn.ReLU(inplace=True),
            nn.Conv2d(ch, ch, 3, padding=1),
            _norm_layer(norm, ch),
        )

    def forward(self, x):
        return F.relu(x + self.body(x))


def _encoder(cin, base, norm):
    return nn.Sequential(
        nn.Conv2d(cin, base, 7, padding=3),
        _norm_layer(norm, base),
        nn.ReLU(inplace=True),
        nn.Conv2d(base, base * 2, 3, stride=2, padding=1),
        _norm_layer(norm, base * 2),
        nn.ReLU(inplace=True),
    )


class D2G(nn.Module):
    def __init__(self, base=24, res_blocks=4, condition=True, norm="instance"):
        super().__init__()
        self.condition = condition
        trunk_ch = base * 2
        self.front = _encoder(FEATURE_CHANNELS, base, norm)
        if condition:
            self.pose_enc = _encoder(POSE_CHANNELS, base, norm)
            self.fuse = nn.Conv2d(base * 4, trunk_ch, 1)
        else:
            self.fuse = nn.Conv2d(base * 2, trunk_ch, 1)
        self.trunk = nn.Sequential(*[ResBlock(trunk_ch, norm) for _ in range(res_blocks)])
        self.decode = nn.Sequential(
            nn.Conv2d(trunk_ch, base, 3, padding=1),
            _norm_layer(norm, base),
            nn.ReLU(inplace=True),
            nn.Conv2d(base, 3, 3, padding=1),
        )

    def forward(self, feature, pose):
        """feature: (B, 18, H, W); pose: (B, 6, H, W) -> (B, 3, H, W) in [0, 1]."""
        if feature.dim() != 4 or feature.shape[1] != FEATURE_CHANNELS:
            raise ShapeError(
                "screen feature must be (B, 18, H, W), got %s" % (tuple(feature.shape),)
            )
        if pose.dim() != 4 or pose.shape[1] != POSE_CHANNELS:
            raise ShapeError("pose label must be (B, 6, H, W), got %s" % (tuple(pose.shape),))
        if feature.shape[2:] != pose.shape[2:]:
            raise ShapeError(
                "feature %s and pose %s are not spatially aligned"
                % (tuple(feature.shape[2:]), tuple(pose.shape[2:]))
            )
        if feature.shape[2] % 2 or feature.shape[3] % 2:
            raise ShapeError("spatial size must be even for the strided encoder")
        x = self.front(feature)
        if self.condition:
            x = torch.cat([x, self.pose_enc(pose)], dim=1)
        x = self.fuse(x)
        x = self.trunk(x)
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        x = self.decode(x)
        return (torch.tanh(x) + 1.0) / 2.0


def render_details(model, feature, pose):
    """Single-image wrapper: (18, H, W), (6, H, W) -> (3, H, W)."""
    return model(feature.unsqueeze(0), pose.unsqueeze(0))[0]
