"""Training objectives: adversarial, supervised, temporal, and their sum.

Conventions fixed here (the upstream formulations leave reductions open):
every norm reduces by mean over its elements; the L2 image term is the
root-mean-square difference; per-level feature L1 terms are summed over
pyramid levels. The adversarial objective is the standard patch-level
conditional GAN trained with binary cross entropy, with the non-saturating
generator form -E[log D(pose, fake)].

The two-frame objective sums the per-frame generator terms of both frames
of a consecutive pair, adds the confidence-masked temporal term between
them, and never averages over the two frames.
"""

from dataclasses import dataclass, fields

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigError, DataError, ShapeError
from .uvgen import POSE_CHANNELS, _norm_layer
from .warp import warp

FEATURE_SEED = 1234


@dataclass
class LossWeights:
    lambda_temp: float = 100.0
    lambda_feat: float = 10.0
    lambda_l2: float = 200.0
    learning_rate: float = 0.002

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigError("loss weight %s must be nonnegative" % f.name)


class FeatureExtractor(nn.Module):
    """Frozen random conv pyramid standing in for pretrained deep features.

    Three ReLU conv levels at strides 1, 2, 2; parameters are seeded,
    He-scaled gaussians and never train. Gradients still flow through to
    the input image, which is all the supervised loss needs.
    """

    def __init__(self, seed=FEATURE_SEED):
        super().__init__()
        g = torch.Generator().manual_seed(seed)
        specs = [(3, 16, 1), (16, 24, 2), (24, 32, 2)]
        self.convs = nn.ModuleList()
        for cin, cout, stride in specs:
            conv = nn.Conv2d(cin, cout, 3, stride=stride, padding=1)
            std = (2.0 / (cin * 9)) ** 0.5
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=g) * std)
                conv.bias.zero_()
            self.convs.append(conv)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def forward(self, x):
        feats = []
        for conv in self.convs:
            x = F.relu(conv(x))
            feats.append(x)
        return feats


class PatchDiscriminator(nn.Module):
    """Conditional patch discriminator on concat(pose label, image)."""

    def __init__(self, base=24, layers=3, norm="instance"):
        super().__init__()
        seq = [nn.Conv2d(POSE_CHANNELS + 3, base, 4, stride=2, padding=1),
               nn.LeakyReLU(0.2, inplace=True)]
        ch = base
        for i in range(1, layers):
            stride = 2 if i < layers - 1 else 1
            seq += [nn.Conv2d(ch, ch * 2, 4, stride=stride, padding=1),
                    _norm_layer(norm, ch * 2),
                    nn.LeakyReLU(0.2, inplace=True)]
            ch *= 2
        seq += [nn.Conv2d(ch, 1, 4, stride=1, padding=1)]
        self.body = nn.Sequential(*seq)

    def forward(self, pose, image):
        if pose.dim() != 4 or image.dim() != 4:
            raise ShapeError("discriminator expects batched (B, C, H, W) inputs")
        if pose.shape[2:] != image.shape[2:]:
            raise ShapeError("pose and image are not spatially aligned")
        return self.body(torch.cat([pose, image], dim=1))


def discriminator_loss(disc, pose, real, fake):
    """BCE of the score maps: real against 1, (detached) fake against 0."""
    score_real = disc(pose, real)
    score_fake = disc(pose, fake.detach())
    return (
        F.binary_cross_entropy_with_logits(score_real, torch.ones_like(score_real))
        + F.binary_cross_entropy_with_logits(score_fake, torch.zeros_like(score_fake))
    )


def generator_gan_loss(disc, pose, fake):
    """Non-saturating generator term -E[log D(pose, fake)]."""
    score = disc(pose, fake)
    return F.binary_cross_entropy_with_logits(score, torch.ones_like(score))


def gan_loss(disc, pose, fake, real):
    """(d_loss, g_loss) pair on one discriminator state."""
    return (
        discriminator_loss(disc, pose, real, fake),
        generator_gan_loss(disc, pose, fake),
    )


def supervised_loss(syn, real, weights, extractor):
    """Feature L1 across pyramid levels plus RMS pixel difference.

    syn, real: (3, H, W). Returns
    lambda_feat * sum_levels mean|F_l(syn) - F_l(real)|
    + lambda_l2 * sqrt(mean((syn - real)^2)).
    """
    if syn.shape != real.shape or syn.dim() != 3:
        raise ShapeError("supervised loss expects two aligned (3, H, W) images")
    feat_term = syn.new_zeros(())
    if weights.lambda_feat > 0:
        fs = extractor(syn.unsqueeze(0))
        fr = extractor(real.unsqueeze(0))
        for a, b in zip(fs, fr):
            feat_term = feat_term + (a - b).abs().mean()
    l2_term = torch.sqrt(((syn - real) ** 2).mean())
    return weights.lambda_feat * feat_term + weights.lambda_l2 * l2_term


def temporal_loss(syn_t, syn_prev, flow, conf):
    """Confidence-masked difference against the warped previous frame.

    (1 / (H * W)) * sum_pixels conf * sum_channels |syn_t - warp(syn_prev)|.
    """
    if syn_t.shape != syn_prev.shape or syn_t.dim() != 3:
        raise ShapeError("temporal loss expects two aligned (C, H, W) frames")
    if conf.shape != syn_t.shape[1:]:
        raise ShapeError("confidence must be (H, W)")
    warped = warp(syn_prev, flow)
    diff = (syn_t - warped).abs().sum(dim=0)
    h, w = conf.shape
    return (conf * diff).sum() / (h * w)


def total_objective(frame_outputs, weights, extractor, disc=None, flow=None, conf=None):
    """Two-frame objective over a consecutive pair (t-1, t).

    frame_outputs: sequence of two dicts, each with keys `pose`, `real`,
    `syn`, `syn_static` ((C, H, W) tensors, pose batched on the fly).
    Returns (g_total, d_total, terms) where terms maps sub-term names to
    floats for logging. With disc=None the adversarial terms are dropped
    (d_total = 0); with syn_static=None the static-composite term is
    dropped. Missing flow or confidence for the pair is a data error: the
    temporal term is not optional.
    """
    if len(frame_outputs) != 2:
        raise ShapeError("the objective is defined on exactly two consecutive frames")
    if flow is None or conf is None:
        raise DataError("frame pair is missing precomputed flow/confidence")
    zero = frame_outputs[0]["syn"].new_zeros(())
    g_total = zero.clone()
    d_total = zero.clone()
    terms = {"gan_g": 0.0, "gan_d": 0.0, "sup": 0.0, "sup_static": 0.0}
    for out in frame_outputs:
        pose = out["pose"].unsqueeze(0)
        real = out["real"]
        if disc is not None:
            d_i = discriminator_loss(disc, pose, real.unsqueeze(0), out["syn"].unsqueeze(0))
            g_i = generator_gan_loss(disc, pose, out["syn"].unsqueeze(0))
            d_total = d_total + d_i
            g_total = g_total + g_i
            terms["gan_d"] += float(d_i.detach())
            terms["gan_g"] += float(g_i.detach())
        sup = supervised_loss(out["syn"], real, weights, extractor)
        g_total = g_total + sup
        terms["sup"] += float(sup.detach())
        if out.get("syn_static") is not None:
            sup_static = supervised_loss(out["syn_static"], real, weights, extractor)
            g_total = g_total + sup_static
            terms["sup_static"] += float(sup_static.detach())
    temp = temporal_loss(frame_outputs[1]["syn"], frame_outputs[0]["syn"], flow, conf)
    g_total = g_total + weights.lambda_temp * temp
    terms["temporal"] = float(temp.detach())
    return g_total, d_total, terms
