"""Training objective terms and their two-frame composition.

Frozen constants: a discriminator scoring logit 0 everywhere (probability
one half) gives d_loss = 2 ln 2 and g_loss = ln 2; a constant image offset
of c makes the RMS term exactly lambda_l2 * c.
"""

import math

import pytest
import torch

from dynatex.errors import ConfigError, DataError, ShapeError
from dynatex.losses import (FeatureExtractor, LossWeights, PatchDiscriminator,
                            gan_loss, supervised_loss, temporal_loss,
                            total_objective)


class _FlatDisc(torch.nn.Module):
    """Stub discriminator: logit 0 (score 1/2) for every patch."""

    def forward(self, pose, image):
        return torch.zeros(image.shape[0], 1, 4, 4, dtype=image.dtype)


def test_loss_weights_defaults():
    w = LossWeights()
    assert w.lambda_temp == 100.0
    assert w.lambda_feat == 10.0
    assert w.lambda_l2 == 200.0
    assert w.learning_rate == 0.002


def test_loss_weights_reject_negative():
    with pytest.raises(ConfigError, match="lambda_temp"):
        LossWeights(lambda_temp=-1.0)
    with pytest.raises(ConfigError, match="learning_rate"):
        LossWeights(learning_rate=-0.1)


def test_feature_extractor_reproducible_and_frozen():
    a = FeatureExtractor()
    b = FeatureExtractor()
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)
        assert not pa.requires_grad
    x = torch.rand(1, 3, 16, 16, requires_grad=True)
    feats = a(x)
    assert len(feats) == 3
    feats[-1].sum().backward()
    assert x.grad is not None and float(x.grad.abs().sum()) > 0.0


def test_gan_loss_at_score_half():
    disc = _FlatDisc()
    pose = torch.zeros(1, 6, 8, 8, dtype=torch.float64)
    fake = torch.rand(1, 3, 8, 8, dtype=torch.float64)
    real = torch.rand(1, 3, 8, 8, dtype=torch.float64)
    d_loss, g_loss = gan_loss(disc, pose, fake, real)
    assert float(d_loss) == pytest.approx(2.0 * math.log(2.0), abs=1e-12)
    assert float(g_loss) == pytest.approx(math.log(2.0), abs=1e-12)


def test_patch_discriminator_outputs_score_map():
    torch.manual_seed(0)
    disc = PatchDiscriminator(base=8, layers=3)
    out = disc(torch.rand(1, 6, 32, 32), torch.rand(1, 3, 32, 32))
    assert out.dim() == 4 and out.shape[:2] == (1, 1)
    assert out.shape[2] < 32 and out.shape[3] < 32
    with pytest.raises(ShapeError):
        disc(torch.rand(1, 6, 32, 32), torch.rand(1, 3, 16, 16))
    with pytest.raises(ShapeError):
        disc(torch.rand(6, 32, 32), torch.rand(3, 32, 32))


def test_supervised_rms_term_closed_form():
    w = LossWeights(lambda_feat=0.0)
    real = torch.full((3, 8, 8), 0.25, dtype=torch.float64)
    syn = torch.full((3, 8, 8), 0.35, dtype=torch.float64)
    loss = supervised_loss(syn, real, w, None)
    assert float(loss) == pytest.approx(200.0 * 0.1, abs=1e-9)


def test_supervised_identical_images_zero():
    w = LossWeights()
    ext = FeatureExtractor().double()
    img = torch.rand(3, 16, 16, dtype=torch.float64)
    assert float(supervised_loss(img, img, w, ext)) == 0.0


def test_supervised_composes_feature_and_rms_terms():
    torch.manual_seed(1)
    ext = FeatureExtractor().double()
    w = LossWeights(lambda_feat=10.0, lambda_l2=200.0)
    syn = torch.rand(3, 16, 16, dtype=torch.float64)
    real = torch.rand(3, 16, 16, dtype=torch.float64)
    feat = sum((a - b).abs().mean() for a, b in zip(ext(syn.unsqueeze(0)), ext(real.unsqueeze(0))))
    rms = torch.sqrt(((syn - real) ** 2).mean())
    expected = 10.0 * float(feat) + 200.0 * float(rms)
    assert float(supervised_loss(syn, real, w, ext)) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ShapeError):
        supervised_loss(syn, torch.rand(3, 8, 8, dtype=torch.float64), w, ext)


def test_temporal_hand_case():
    # per-pixel channel-sum differences (1, 0.5, 0.5, 0) over 4 pixels: 0.5
    prev = torch.zeros(3, 2, 2, dtype=torch.float64)
    cur = torch.zeros(3, 2, 2, dtype=torch.float64)
    cur[:, 0, 0] = torch.tensor([0.5, 0.25, 0.25], dtype=torch.float64)
    cur[0, 0, 1] = 0.5
    cur[1, 1, 0] = 0.5
    loss = temporal_loss(cur, prev, torch.zeros(2, 2, 2, dtype=torch.float64),
                         torch.ones(2, 2, dtype=torch.float64))
    assert float(loss) == pytest.approx(0.5, abs=1e-15)


def test_temporal_confidence_masks_pixels():
    prev = torch.zeros(1, 2, 2, dtype=torch.float64)
    cur = torch.ones(1, 2, 2, dtype=torch.float64)
    flow = torch.zeros(2, 2, 2, dtype=torch.float64)
    assert float(temporal_loss(cur, prev, flow, torch.zeros(2, 2, dtype=torch.float64))) == 0.0
    conf = torch.zeros(2, 2, dtype=torch.float64)
    conf[0, 1] = 1.0
    assert float(temporal_loss(cur, prev, flow, conf)) == pytest.approx(0.25, abs=1e-15)


def test_temporal_uses_backward_warp():
    prev = torch.tensor([[[1.0, 2.0], [3.0, 4.0]]], dtype=torch.float64)
    flow = torch.zeros(2, 2, 2, dtype=torch.float64)
    flow[..., 0] = 1.0
    conf = torch.ones(2, 2, dtype=torch.float64)
    shifted = torch.tensor([[[2.0, 0.0], [4.0, 0.0]]], dtype=torch.float64)
    assert float(temporal_loss(shifted, prev, flow, conf)) == 0.0
    # against the unshifted frame: |1-2| + |2-0| + |3-4| + |4-0| over 4 px
    assert float(temporal_loss(prev, prev, flow, conf)) == pytest.approx(2.0, abs=1e-15)


def _frame_outputs(seed, h=16, w=16):
    g = torch.Generator().manual_seed(seed)
    outs = []
    for _ in range(2):
        outs.append({
            "pose": torch.rand(6, h, w, generator=g, dtype=torch.float64),
            "real": torch.rand(3, h, w, generator=g, dtype=torch.float64),
            "syn": torch.rand(3, h, w, generator=g, dtype=torch.float64),
            "syn_static": torch.rand(3, h, w, generator=g, dtype=torch.float64),
        })
    flow = torch.zeros(h, w, 2, dtype=torch.float64)
    conf = (torch.rand(h, w, generator=g, dtype=torch.float64) > 0.5).double()
    return outs, flow, conf


def test_total_objective_composes_sub_terms():
    torch.manual_seed(2)
    ext = FeatureExtractor().double()
    disc = PatchDiscriminator(base=8, layers=2).double()
    w = LossWeights()
    outs, flow, conf = _frame_outputs(3)
    g_total, d_total, terms = total_objective(outs, w, ext, disc=disc, flow=flow, conf=conf)

    expected_g = 0.0
    expected_d = 0.0
    for out in outs:
        d_i, g_i = gan_loss(disc, out["pose"].unsqueeze(0), out["syn"].unsqueeze(0),
                            out["real"].unsqueeze(0))
        expected_d += float(d_i.detach())
        expected_g += float(g_i.detach())
        expected_g += float(supervised_loss(out["syn"], out["real"], w, ext))
        expected_g += float(supervised_loss(out["syn_static"], out["real"], w, ext))
    expected_g += w.lambda_temp * float(temporal_loss(outs[1]["syn"], outs[0]["syn"], flow, conf))
    assert float(g_total.detach()) == pytest.approx(expected_g, rel=1e-12)
    assert float(d_total.detach()) == pytest.approx(expected_d, rel=1e-12)
    assert set(terms) == {"gan_g", "gan_d", "sup", "sup_static", "temporal"}
    assert all(v >= 0.0 for v in terms.values())


def test_total_objective_without_discriminator():
    ext = FeatureExtractor().double()
    w = LossWeights()
    outs, flow, conf = _frame_outputs(4)
    g_total, d_total, terms = total_objective(outs, w, ext, disc=None, flow=flow, conf=conf)
    assert float(d_total) == 0.0
    assert terms["gan_g"] == 0.0 and terms["gan_d"] == 0.0
    expected = sum(float(supervised_loss(o["syn"], o["real"], w, ext))
                   + float(supervised_loss(o["syn_static"], o["real"], w, ext))
                   for o in outs)
    expected += w.lambda_temp * float(temporal_loss(outs[1]["syn"], outs[0]["syn"], flow, conf))
    assert float(g_total) == pytest.approx(expected, rel=1e-12)


def test_total_objective_optional_static_term():
    ext = FeatureExtractor().double()
    w = LossWeights()
    outs, flow, conf = _frame_outputs(5)
    for o in outs:
        o["syn_static"] = None
    _, _, terms = total_objective(outs, w, ext, disc=None, flow=flow, conf=conf)
    assert terms["sup_static"] == 0.0 and terms["sup"] > 0.0


def test_total_objective_requires_flow_and_pair():
    ext = FeatureExtractor().double()
    w = LossWeights()
    outs, flow, conf = _frame_outputs(6)
    with pytest.raises(DataError):
        total_objective(outs, w, ext, flow=None, conf=conf)
    with pytest.raises(DataError):
        total_objective(outs, w, ext, flow=flow, conf=None)
    with pytest.raises(ShapeError):
        total_objective(outs[:1], w, ext, flow=flow, conf=conf)
