import numpy as np
import pytest

from dynatex.errors import ConfigError, DataError, FormatError
from dynatex.scene import (
    SceneConfig,
    brute_force_unwrap,
    generate_sequence,
    load_dataset,
    sample_scene_config,
    write_dataset,
)
from dynatex.scene import _core_np
from dynatex.scene.dataset_io import MAGIC_UV, read_tensor, write_tensor
from dynatex.scene.generate import eval_part_pattern


def _manual_config(n_parts=3, size=32, motion=None, amplitude=0.0, styles=None, seed=11):
    base = sample_scene_config(
        seed=seed, image_size=(size, size), n_parts=n_parts, n_frames=4,
        detail_amplitude=amplitude,
    )
    if motion is not None:
        base = SceneConfig(
            image_size=base.image_size,
            n_parts=n_parts,
            motion_script=motion,
            texture_spec=styles or base.texture_spec,
            background_spec=base.background_spec,
            detail_amplitude=amplitude,
            seed=seed,
        )
    elif styles is not None:
        base = SceneConfig(
            image_size=base.image_size,
            n_parts=n_parts,
            motion_script=base.motion_script,
            texture_spec=styles,
            background_spec=base.background_spec,
            detail_amplitude=amplitude,
            seed=seed,
        )
    return base


def _static_motion(n_parts, n_frames, root=(0.0, 0.0), angles=None):
    if angles is None:
        angles = [0.9] + [0.45] * (n_parts - 1)
    return [{"root": list(root), "angles": list(angles)} for _ in range(n_frames)]


def test_static_scene():
    # zero motion: identical frames, bitwise-zero flow, confident interior
    cfg = _manual_config(motion=_static_motion(3, 3))
    seq = generate_sequence(cfg)
    assert (seq.frames[0] == seq.frames[1]).all()
    assert (seq.frames[0] == seq.frames[2]).all()
    assert (seq.flow == 0.0).all()
    assert seq.conf[:, 1:-1, 1:-1].all()


def test_pure_translation_backward_flow():
    motion = [
        {"root": [2.0 * t - 6.0, 0.0], "angles": [0.9, 0.45, 0.45]} for t in range(4)
    ]
    cfg = _manual_config(motion=motion)
    seq = generate_sequence(cfg)
    for t in range(1, 4):
        both = (seq.part_id[t] > 0) & (seq.conf[t - 1] == 1)
        assert both.any()
        np.testing.assert_allclose(seq.flow[t - 1][both, 0], -2.0, atol=1e-9)
        np.testing.assert_allclose(seq.flow[t - 1][both, 1], 0.0, atol=1e-9)


def test_generation_deterministic():
    cfg = sample_scene_config(seed=5, image_size=(32, 32), n_parts=4, n_frames=5)
    a = generate_sequence(cfg)
    b = generate_sequence(cfg)
    for name in ("frames", "keypoints", "part_id", "uv", "flow", "conf", "background"):
        assert (getattr(a, name) == getattr(b, name)).all(), name


def test_sequence_invariants():
    cfg = sample_scene_config(seed=2, image_size=(48, 48), n_parts=6, n_frames=6,
                              detail_amplitude=0.5)
    seq = generate_sequence(cfg)
    assert seq.frames.min() >= 0.0 and seq.frames.max() <= 1.0
    assert seq.part_id.min() >= 0 and seq.part_id.max() <= 6
    fg = seq.part_id > 0
    assert (seq.uv[fg] >= 0.0).all() and (seq.uv[fg] <= 1.0).all()
    assert (seq.uv[~fg] == 0.0).all()
    assert set(np.unique(seq.conf)) <= {0, 1}
    # background shows through untouched wherever no part covers the pixel
    for t in range(seq.n_frames):
        bg = seq.part_id[t] == 0
        assert (seq.frames[t][bg] == seq.background[bg]).all()


def test_invalid_configs_name_the_field():
    good = sample_scene_config(seed=1, image_size=(32, 32), n_parts=3, n_frames=4)
    with pytest.raises(ConfigError, match="image_size"):
        SceneConfig((8, 32), 3, good.motion_script, good.texture_spec,
                    good.background_spec)
    with pytest.raises(ConfigError, match="n_parts"):
        SceneConfig((32, 32), 0, good.motion_script, good.texture_spec,
                    good.background_spec)
    with pytest.raises(ConfigError, match="motion_script"):
        SceneConfig((32, 32), 3, good.motion_script[:1], good.texture_spec,
                    good.background_spec)
    with pytest.raises(ConfigError, match="detail_amplitude"):
        SceneConfig((32, 32), 3, good.motion_script, good.texture_spec,
                    good.background_spec, detail_amplitude=1.0)
    bad_motion = [dict(e) for e in good.motion_script]
    bad_motion[2]["angles"] = bad_motion[2]["angles"][:-1]
    with pytest.raises(ConfigError, match="angles"):
        SceneConfig((32, 32), 3, bad_motion, good.texture_spec, good.background_spec)


def test_dynamic_detail_defeats_static_texture():
    """With detail_amplitude > 0 the same surface point changes color as the
    pose changes, so no static texture reproduces the frames."""
    cfg = sample_scene_config(seed=9, image_size=(48, 48), n_parts=4, n_frames=10,
                              detail_amplitude=0.6)
    seq = generate_sequence(cfg)
    seen = {}
    best = 0.0
    for t in range(seq.n_frames):
        fg = np.argwhere(seq.part_id[t] > 0)
        for i, j in fg:
            k = seq.part_id[t, i, j]
            key = (int(k), round(seq.uv[t, i, j, 0] * 40), round(seq.uv[t, i, j, 1] * 40))
            if key in seen:
                best = max(best, float(np.abs(seen[key] - seq.frames[t, i, j]).max()))
            else:
                seen[key] = seq.frames[t, i, j]
    assert best > 0.02


def test_warp_verification_on_translation():
    """Backward flow is verified by warping: bilinear-sample frame t-1 at
    pixel + flow and compare to frame t wherever confidence is 1. Exact (to
    1e-6) on an integer-translation script with smooth patterns."""
    styles = [
        {"pattern": "stripes", "color": [0.8, 0.2, 0.2], "accent": [0.1, 0.6, 0.9],
         "freq_u": 2, "freq_v": 1, "phase": 0.3},
        {"pattern": "gradient", "color": [0.2, 0.8, 0.3], "accent": [0.9, 0.9, 0.1],
         "freq_u": 1, "freq_v": 1, "phase": 0.0},
        {"pattern": "rings", "color": [0.3, 0.3, 0.9], "accent": [0.9, 0.4, 0.1],
         "freq_u": 2, "freq_v": 2, "phase": 1.1},
    ]
    motion = [
        {"root": [1.0 * t - 2.0, -1.0 * t + 2.0], "angles": [0.9, 0.45, 0.45]}
        for t in range(4)
    ]
    cfg = _manual_config(motion=motion, styles=styles, amplitude=0.3)
    cfg = SceneConfig(
        image_size=cfg.image_size, n_parts=3, motion_script=motion,
        texture_spec=styles,
        background_spec={"pattern": "gradient", "color": [0.2, 0.2, 0.25],
                         "accent": [0.7, 0.75, 0.8], "freq": 3},
        detail_amplitude=0.3, seed=11,
    )
    seq = generate_sequence(cfg)
    h, w = cfg.image_size
    for t in range(1, 4):
        prev, cur = seq.frames[t - 1], seq.frames[t]
        conf = seq.conf[t - 1] == 1
        ys, xs = np.nonzero(conf)
        sx = xs + seq.flow[t - 1][conf, 0]
        sy = ys + seq.flow[t - 1][conf, 1]
        x0 = np.clip(np.floor(sx).astype(int), 0, w - 1)
        y0 = np.clip(np.floor(sy).astype(int), 0, h - 1)
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        fx = (sx - x0)[:, None]
        fy = (sy - y0)[:, None]
        interp = (
            prev[y0, x0] * (1 - fx) * (1 - fy)
            + prev[y0, x1] * fx * (1 - fy)
            + prev[y1, x0] * (1 - fx) * fy
            + prev[y1, x1] * fx * fy
        )
        assert np.abs(interp - cur[conf]).max() < 1e-6


def test_unwrap_constant_part_color():
    color = [0.35, 0.55, 0.75]
    styles = [
        {"pattern": "stripes", "color": color, "accent": color,
         "freq_u": 2, "freq_v": 1, "phase": 0.0}
        for _ in range(3)
    ]
    cfg = _manual_config(styles=styles, amplitude=0.0)
    seq = generate_sequence(cfg)
    tex, counts = brute_force_unwrap(seq.frames, seq.part_id, seq.uv, 3, 16)
    covered = counts > 0
    assert covered.any()
    for c in range(3):
        np.testing.assert_allclose(tex[:, c][covered], color[c], atol=1e-12)


def test_unwrap_single_and_two_sample_means():
    frames = np.zeros((2, 4, 4, 3))
    part_id = np.zeros((2, 4, 4), dtype=np.int32)
    uv = np.zeros((2, 4, 4, 2))
    a = np.array([0.2, 0.4, 0.6])
    b = np.array([0.8, 0.1, 0.3])
    frames[0, 1, 2] = a
    frames[1, 3, 0] = b
    part_id[0, 1, 2] = 1
    part_id[1, 3, 0] = 1
    uv[0, 1, 2] = [0.52, 0.52]  # both observations round to the same texel
    uv[1, 3, 0] = [0.49, 0.49]
    tex, counts = brute_force_unwrap(frames, part_id, uv, 1, 3)
    assert counts[0, 1, 1] == 2
    np.testing.assert_array_equal(tex[0, :, 1, 1], (a + b) / 2)
    # single observation lands unaveraged
    frames2 = frames[:1]
    tex1, counts1 = brute_force_unwrap(frames2, part_id[:1], uv[:1], 1, 3)
    assert counts1[0, 1, 1] == 1
    np.testing.assert_array_equal(tex1[0, :, 1, 1], a)
    assert (tex1[0][:, counts1[0] == 0] == 0).all()


def test_part_pattern_range():
    rng = np.random.default_rng(0)
    u = rng.uniform(0, 1, size=500)
    v = rng.uniform(0, 1, size=500)
    for pattern in ("stripes", "checker", "rings", "gradient"):
        style = {"pattern": pattern, "color": [0.9, 0.1, 0.5],
                 "accent": [0.05, 0.95, 0.4], "freq_u": 3, "freq_v": 2, "phase": 0.7}
        out = eval_part_pattern(style, u, v)
        assert out.shape == (500, 3)
        assert out.min() >= 0.0 and out.max() <= 1.0


def test_dataset_roundtrip(tmp_path):
    cfg = sample_scene_config(seed=4, image_size=(32, 32), n_parts=4, n_frames=5,
                              detail_amplitude=0.4)
    seq = generate_sequence(cfg)
    root = str(tmp_path / "ds")
    write_dataset(seq, root)
    ds = load_dataset(root)
    assert ds.n_frames == 5
    assert ds.config.to_dict() == cfg.to_dict()
    np.testing.assert_array_equal(ds.part_id, seq.part_id)
    np.testing.assert_array_equal(ds.uv, seq.uv.astype(np.float32))
    np.testing.assert_array_equal(ds.flow, seq.flow.astype(np.float32))
    np.testing.assert_array_equal(ds.conf, seq.conf.astype(np.float32))
    np.testing.assert_array_equal(ds.keypoints, seq.keypoints)
    assert np.abs(ds.frames - seq.frames).max() <= 0.5 / 255 + 1e-6
    assert np.abs(ds.background - seq.background).max() <= 0.5 / 255 + 1e-6


def test_tensor_file_errors(tmp_path):
    path = str(tmp_path / "t.bin")
    arr = np.random.default_rng(0).normal(size=(4, 5, 2)).astype(np.float32)
    write_tensor(path, MAGIC_UV, arr)
    back = read_tensor(path, MAGIC_UV)
    np.testing.assert_array_equal(back, arr)
    with pytest.raises(FormatError, match="magic"):
        read_tensor(path, b"FLW1")
    with open(path, "rb") as f:
        blob = f.read()
    with open(path, "wb") as f:
        f.write(blob[:-7])
    with pytest.raises(FormatError, match="payload"):
        read_tensor(path, MAGIC_UV)
    with pytest.raises(DataError):
        read_tensor(str(tmp_path / "absent.bin"), MAGIC_UV)


def test_load_missing_pieces(tmp_path):
    cfg = sample_scene_config(seed=6, image_size=(32, 32), n_parts=3, n_frames=3)
    seq = generate_sequence(cfg)
    root = str(tmp_path / "ds")
    write_dataset(seq, root)
    (tmp_path / "ds" / "frames" / "000001.png").unlink()
    with pytest.raises(DataError):
        load_dataset(root)


def test_backends_bit_identical():
    pytest.importorskip("dynatex.scene._scene_core")
    from dynatex.scene import _scene_core

    for seed in range(3):
        cfg = sample_scene_config(seed=seed, image_size=(40, 40), n_parts=5,
                                  n_frames=3, detail_amplitude=0.3)
        seq = generate_sequence(cfg)
        radii = seq.geometry.radii
        for t in range(1, 3):
            pid_np, uv_np = _core_np.ownership_grid(seq.keypoints[t], radii, 40, 40)
            pid_cy, uv_cy = _scene_core.ownership_grid(seq.keypoints[t], radii, 40, 40)
            assert (pid_np == pid_cy).all()
            assert (uv_np == uv_cy).all()
            prev_np, _ = _core_np.ownership_grid(seq.keypoints[t - 1], radii, 40, 40)
            fl_np, cf_np = _core_np.flow_and_confidence(
                seq.keypoints[t], seq.keypoints[t - 1], radii, pid_np, uv_np, prev_np)
            fl_cy, cf_cy = _scene_core.flow_and_confidence(
                seq.keypoints[t], seq.keypoints[t - 1], radii, pid_cy, uv_cy, prev_np)
            assert (fl_np == fl_cy).all()
            assert (cf_np == cf_cy).all()
