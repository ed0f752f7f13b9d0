"""UV generator, detail renderer, and background estimation."""

import math

import numpy as np
import pytest
import torch

from dynatex.background import composite, dilate_masks, init_background
from dynatex.d2g import D2G, FEATURE_CHANNELS, render_details
from dynatex.errors import ShapeError
from dynatex.metrics import psnr
from dynatex.scene import generate_sequence, sample_scene_config
from dynatex.uvgen import POSE_CHANNELS, UVGenerator, predict_uv, uv_pretrain_loss


def test_uvgen_output_contract():
    torch.manual_seed(0)
    model = UVGenerator(n_parts=5, base=8, downsamples=2)
    pose = torch.rand(POSE_CHANNELS, 32, 32)
    probs, coords = predict_uv(model, pose)
    probs = probs.detach()
    coords = coords.detach()
    assert probs.shape == (6, 32, 32)
    assert coords.shape == (5, 32, 32, 2)
    assert float(probs.min()) >= 0.0
    assert torch.allclose(probs.sum(dim=0), torch.ones(32, 32), atol=1e-5)
    assert float(coords.min()) >= 0.0 and float(coords.max()) <= 1.0


def test_uvgen_deterministic_given_seed():
    pose = torch.linspace(0, 1, POSE_CHANNELS * 16 * 16).reshape(POSE_CHANNELS, 16, 16)
    torch.manual_seed(7)
    a = UVGenerator(3, base=8, downsamples=1)
    torch.manual_seed(7)
    b = UVGenerator(3, base=8, downsamples=1)
    pa, ca = predict_uv(a, pose)
    pb, cb = predict_uv(b, pose)
    assert torch.equal(pa, pb) and torch.equal(ca, cb)
    pa2, ca2 = predict_uv(a, pose)
    assert torch.equal(pa, pa2) and torch.equal(ca, ca2)


def test_uvgen_shape_errors():
    model = UVGenerator(3, base=8, downsamples=2)
    with pytest.raises(ShapeError):
        model(torch.rand(1, 5, 32, 32))
    with pytest.raises(ShapeError):
        model(torch.rand(1, POSE_CHANNELS, 30, 30))


def test_pretrain_loss_uniform_probabilities():
    # cross entropy of a flat (N+1)-way distribution is ln(N+1); with 24
    # parts that is ln 25, and zero foreground leaves no coordinate term
    n = 24
    h = w = 8
    probs = torch.full((n + 1, h, w), 1.0 / (n + 1))
    coords = torch.rand(n, h, w, 2)
    part_id = torch.zeros(h, w, dtype=torch.long)
    loss = uv_pretrain_loss(probs, coords, part_id, torch.zeros(h, w, 2))
    assert float(loss) == pytest.approx(math.log(25.0), abs=1e-5)
    assert float(loss) == pytest.approx(3.2189, abs=1e-4)


def test_pretrain_loss_handcrafted_l1():
    # 2x2 image, two parts; flat probabilities isolate the known ln 3 term
    probs = torch.full((3, 2, 2), 1.0 / 3.0, dtype=torch.float64)
    coords = torch.zeros(2, 2, 2, 2, dtype=torch.float64)
    part_id = torch.tensor([[0, 1], [2, 1]])
    uv_gt = torch.zeros(2, 2, 2, dtype=torch.float64)
    f64 = torch.float64
    coords[0, 0, 1] = torch.tensor([0.3, 0.4], dtype=f64)   # part 1 pixel, gt (0.1, 0.1)
    coords[1, 1, 0] = torch.tensor([0.5, 0.25], dtype=f64)  # part 2 pixel, gt (0.5, 0.05)
    coords[0, 1, 1] = torch.tensor([0.2, 0.2], dtype=f64)   # part 1 pixel, gt (0.2, 0.2)
    uv_gt[0, 1] = torch.tensor([0.1, 0.1], dtype=f64)
    uv_gt[1, 0] = torch.tensor([0.5, 0.05], dtype=f64)
    uv_gt[1, 1] = torch.tensor([0.2, 0.2], dtype=f64)
    expected_l1 = ((0.2 + 0.3) + (0.0 + 0.2) + (0.0 + 0.0)) / 3.0
    loss = uv_pretrain_loss(probs, coords, part_id, uv_gt)
    assert float(loss) == pytest.approx(math.log(3.0) + expected_l1, abs=1e-9)


def test_pretrain_loss_no_foreground_has_no_l1():
    probs = torch.full((3, 4, 4), 1.0 / 3.0, dtype=torch.float64)
    loss = uv_pretrain_loss(probs, torch.rand(2, 4, 4, 2, dtype=torch.float64),
                            torch.zeros(4, 4, dtype=torch.long), torch.rand(4, 4, 2, dtype=torch.float64))
    assert float(loss) == pytest.approx(math.log(3.0), abs=1e-12)


def test_pretrain_loss_shape_errors():
    probs = torch.full((3, 4, 4), 1.0 / 3.0)
    with pytest.raises(ShapeError):
        uv_pretrain_loss(probs, torch.rand(3, 4, 4, 2), torch.zeros(4, 4), torch.zeros(4, 4, 2))
    with pytest.raises(ShapeError):
        uv_pretrain_loss(probs, torch.rand(2, 4, 4, 2), torch.zeros(5, 4), torch.zeros(4, 4, 2))


def test_uvgen_input_gradients_match_finite_differences():
    torch.manual_seed(1)
    model = UVGenerator(2, base=4, downsamples=1, norm="none").double()
    pose = torch.rand(1, POSE_CHANNELS, 8, 8, dtype=torch.float64, requires_grad=True)
    wp = torch.randn(1, 3, 8, 8, dtype=torch.float64)
    wc = torch.randn(1, 2, 8, 8, 2, dtype=torch.float64)

    def scalar(x):
        probs, coords = model(x)
        return (probs * wp).sum() + (coords * wc).sum()

    loss = scalar(pose)
    (grad,) = torch.autograd.grad(loss, [pose])
    eps = 1e-6
    flat = pose.detach().reshape(-1)
    with torch.no_grad():
        for idx in range(0, flat.numel(), 97):
            plus = flat.clone()
            plus[idx] += eps
            minus = flat.clone()
            minus[idx] -= eps
            fd = (float(scalar(plus.reshape(pose.shape)))
                  - float(scalar(minus.reshape(pose.shape)))) / (2 * eps)
            assert abs(fd - float(grad.reshape(-1)[idx])) < 1e-4


def test_d2g_output_range_and_shape():
    torch.manual_seed(2)
    net = D2G(base=8, res_blocks=2)
    feat = torch.rand(FEATURE_CHANNELS, 32, 32)
    pose = torch.rand(POSE_CHANNELS, 32, 32)
    out = render_details(net, feat, pose).detach()
    assert out.shape == (3, 32, 32)
    assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0


def test_d2g_condition_flag_controls_pose_use():
    torch.manual_seed(3)
    feat = torch.rand(FEATURE_CHANNELS, 16, 16)
    pose_a = torch.rand(POSE_CHANNELS, 16, 16)
    pose_b = torch.rand(POSE_CHANNELS, 16, 16)
    torch.manual_seed(4)
    cond = D2G(base=8, res_blocks=1, condition=True)
    assert not torch.equal(render_details(cond, feat, pose_a),
                           render_details(cond, feat, pose_b))
    torch.manual_seed(4)
    uncond = D2G(base=8, res_blocks=1, condition=False)
    assert torch.equal(render_details(uncond, feat, pose_a),
                       render_details(uncond, feat, pose_b))


def test_d2g_deterministic():
    torch.manual_seed(5)
    net = D2G(base=8, res_blocks=1)
    feat = torch.rand(FEATURE_CHANNELS, 16, 16)
    pose = torch.rand(POSE_CHANNELS, 16, 16)
    assert torch.equal(render_details(net, feat, pose), render_details(net, feat, pose))


def test_d2g_shape_errors():
    net = D2G(base=8, res_blocks=1)
    with pytest.raises(ShapeError):
        net(torch.rand(1, FEATURE_CHANNELS - 1, 16, 16), torch.rand(1, POSE_CHANNELS, 16, 16))
    with pytest.raises(ShapeError):
        net(torch.rand(1, FEATURE_CHANNELS, 16, 16), torch.rand(1, 5, 16, 16))
    with pytest.raises(ShapeError):
        net(torch.rand(1, FEATURE_CHANNELS, 16, 16), torch.rand(1, POSE_CHANNELS, 32, 32))
    with pytest.raises(ShapeError):
        net(torch.rand(1, FEATURE_CHANNELS, 15, 15), torch.rand(1, POSE_CHANNELS, 15, 15))


def test_d2g_input_gradients_match_finite_differences():
    torch.manual_seed(6)
    net = D2G(base=4, res_blocks=1, norm="none").double()
    feat = torch.rand(1, FEATURE_CHANNELS, 8, 8, dtype=torch.float64, requires_grad=True)
    pose = torch.rand(1, POSE_CHANNELS, 8, 8, dtype=torch.float64)
    w = torch.randn(1, 3, 8, 8, dtype=torch.float64)

    def scalar(x):
        return (net(x, pose) * w).sum()

    (grad,) = torch.autograd.grad(scalar(feat), [feat])
    eps = 1e-6
    flat = feat.detach().reshape(-1)
    with torch.no_grad():
        for idx in range(0, flat.numel(), 173):
            plus = flat.clone()
            plus[idx] += eps
            minus = flat.clone()
            minus[idx] -= eps
            fd = (float(scalar(plus.reshape(feat.shape)))
                  - float(scalar(minus.reshape(feat.shape)))) / (2 * eps)
            assert abs(fd - float(grad.reshape(-1)[idx])) < 1e-4


def test_dilate_masks_grows_squares():
    masks = np.zeros((1, 7, 7), dtype=bool)
    masks[0, 3, 3] = True
    assert dilate_masks(masks, 0).sum() == 1
    one = dilate_masks(masks, 1)
    assert one.sum() == 9 and one[0, 2:5, 2:5].all()
    two = dilate_masks(masks, 2)
    assert two.sum() == 25 and two[0, 1:6, 1:6].all()
    assert not dilate_masks(masks, 0) is masks


def test_init_background_exact_where_ever_visible():
    cfg = sample_scene_config(seed=3, image_size=(48, 48), n_parts=6, n_frames=40,
                              detail_amplitude=0.0)
    seq = generate_sequence(cfg)
    masks = seq.part_id > 0
    bg, info = init_background(seq.frames, masks, dilation=0)
    assert not info["all_foreground"]
    never = masks.all(axis=0)
    assert 0 < never.sum() < never.size
    # pixels that were background in any frame average to the exact value
    assert np.abs(bg - seq.background)[~never].max() < 1e-12
    assert psnr(bg, seq.background) > 40.0


def test_init_background_dilation_trades_coverage_for_purity():
    cfg = sample_scene_config(seed=3, image_size=(48, 48), n_parts=6, n_frames=40,
                              detail_amplitude=0.0)
    seq = generate_sequence(cfg)
    masks = seq.part_id > 0
    bg0, info0 = init_background(seq.frames, masks, dilation=0)
    bg2, info2 = init_background(seq.frames, masks, dilation=2)
    assert info2["never_background"] > info0["never_background"]
    # widening the exclusion zone leaves more pixels to inpainting, so the
    # estimate can only get rougher on a clean synthetic scene
    assert psnr(bg0, seq.background) >= psnr(bg2, seq.background)


def test_init_background_all_foreground():
    frames = np.stack([np.full((4, 4, 3), 0.2), np.full((4, 4, 3), 0.6)])
    masks = np.ones((2, 4, 4), dtype=bool)
    bg, info = init_background(frames, masks, dilation=0)
    assert info["all_foreground"]
    assert np.allclose(bg, 0.4, atol=1e-12)


def test_composite_trivial_masks():
    fg = torch.rand(3, 5, 5)
    bg = torch.rand(3, 5, 5)
    assert torch.equal(composite(fg, bg, torch.zeros(5, 5)), fg)
    assert torch.equal(composite(fg, bg, torch.ones(5, 5)), bg)
    p0 = torch.full((5, 5), 0.25)
    mixed = composite(fg, bg, p0)
    assert torch.allclose(mixed, fg * 0.75 + bg * 0.25, atol=1e-7)
    with pytest.raises(ShapeError):
        composite(fg, bg, torch.zeros(4, 5))
