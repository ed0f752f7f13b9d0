"""Rendering of the synthetic puppet corpus with analytic ground truth.

Every frame is composed with hard per-pixel-center assignment (no edge
anti-aliasing): the pixel's color is fully determined by the topmost part
covering its center, or the background. That makes per-pixel ground truth
(part id, chart coords, backward flow, occlusion confidence) exact rather
than approximate, which the oracle tests rely on.

Surface color of part k at chart coords (u, v) and absolute part angle
theta_k is

    base(u, v) * (1 + A * sin(2*pi*(fu*u + fv*v) + rate*theta_k + phase)) / (1 + A)

so the pose-dependent shading is multiplicative, bounded in (0, 1], and
A = 0 reproduces the static base pattern exactly.
"""

import numpy as np

from ..errors import ConfigError
from . import core
from .geometry import absolute_angles, derive_geometry, forward_kinematics


def _mix(color, accent, weight):
    color = np.asarray(color, dtype=np.float64)
    accent = np.asarray(accent, dtype=np.float64)
    w = weight[..., None]
    return color * (1.0 - w) + accent * w


def eval_part_pattern(style, u, v):
    """Base albedo of one part at chart coords, in [0, 1], float64."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    kind = style["pattern"]
    fu = style["freq_u"]
    fv = style["freq_v"]
    phase = style["phase"]
    if kind == "stripes":
        w = 0.5 * (1.0 + np.sin(2.0 * np.pi * fu * u + phase))
    elif kind == "checker":
        w = ((np.floor(u * 2 * fu) + np.floor(v * 2 * fv)) % 2.0)
    elif kind == "rings":
        rho = np.sqrt((u - 0.5) ** 2 + (v - 0.5) ** 2)
        w = 0.5 * (1.0 + np.sin(4.0 * np.pi * fu * rho + phase))
    elif kind == "gradient":
        w = np.clip(0.5 * (u + v), 0.0, 1.0)
    else:
        raise ConfigError("unknown part pattern %r" % (kind,))
    return _mix(style["color"], style["accent"], w)


def eval_background(style, h, w):
    """Static background image (h, w, 3) in [0, 1], float64."""
    ys = np.arange(h, dtype=np.float64)[:, None] / max(h - 1, 1)
    xs = np.arange(w, dtype=np.float64)[None, :] / max(w - 1, 1)
    kind = style["pattern"]
    freq = style["freq"]
    if kind == "gradient":
        wgt = np.broadcast_to(0.5 * (xs + ys), (h, w))
    elif kind == "checker":
        wgt = np.broadcast_to((np.floor(xs * freq) + np.floor(ys * freq)) % 2.0, (h, w))
    elif kind == "rings":
        rho = np.sqrt((xs - 0.5) ** 2 + (ys - 0.5) ** 2)
        wgt = 0.5 * (1.0 + np.sin(2.0 * np.pi * freq * rho))
    else:
        raise ConfigError("unknown background pattern %r" % (kind,))
    return _mix(style["color"], style["accent"], wgt)


def derive_detail_params(config):
    """Per-part shading parameters, fixed by the scene seed."""
    rng = np.random.default_rng(config.seed + 7777)
    n = config.n_parts
    return {
        "freq_u": rng.integers(1, 4, size=n).astype(np.float64),
        "freq_v": rng.integers(1, 4, size=n).astype(np.float64),
        "rate": rng.uniform(1.0, 3.0, size=n),
        "phase": rng.uniform(0.0, 2.0 * np.pi, size=n),
    }


def shading_factor(detail, amplitude, k, u, v, theta_k):
    arg = (
        2.0 * np.pi * (detail["freq_u"][k] * u + detail["freq_v"][k] * v)
        + detail["rate"][k] * theta_k
        + detail["phase"][k]
    )
    return (1.0 + amplitude * np.sin(arg)) / (1.0 + amplitude)


class SyntheticSequence:
    """One rendered sequence plus all analytic ground truth.

    frames      (T, H, W, 3) float64 in [0, 1]
    keypoints   (T, J, 2) float64, pixel coords of the chain joints
    part_id     (T, H, W) int32, 0 = background
    uv          (T, H, W, 2) float64, zero where part_id == 0
    flow        (T-1, H, W, 2) float64; flow[t-1] maps frame t back to t-1
    conf        (T-1, H, W) uint8, 1 where the flow target is valid
    background  (H, W, 3) float64
    """

    def __init__(self, config, geometry, frames, keypoints, part_id, uv, flow, conf, background):
        self.config = config
        self.geometry = geometry
        self.frames = frames
        self.keypoints = keypoints
        self.part_id = part_id
        self.uv = uv
        self.flow = flow
        self.conf = conf
        self.background = background

    @property
    def n_frames(self):
        return self.frames.shape[0]


def generate_sequence(config):
    config.validate()
    h, w = config.image_size
    geometry = derive_geometry(config.n_parts, config.image_size, config.seed)
    detail = derive_detail_params(config)
    background = eval_background(config.background_spec, h, w)

    T = config.n_frames
    frames = np.empty((T, h, w, 3), dtype=np.float64)
    keypoints = np.empty((T, geometry.n_joints, 2), dtype=np.float64)
    part_id = np.empty((T, h, w), dtype=np.int32)
    uv = np.empty((T, h, w, 2), dtype=np.float64)
    joints_all = []
    thetas_all = []

    for t, entry in enumerate(config.motion_script):
        joints = forward_kinematics(geometry, entry["root"], entry["angles"])
        thetas = absolute_angles(entry["angles"])
        pid, puv = core.ownership_grid(joints, geometry.radii, h, w)
        frame = background.copy()
        for k in range(config.n_parts):
            mask = pid == k + 1
            if not mask.any():
                continue
            pu = puv[..., 0][mask]
            pv = puv[..., 1][mask]
            base = eval_part_pattern(config.texture_spec[k], pu, pv)
            shade = shading_factor(detail, config.detail_amplitude, k, pu, pv, thetas[k])
            frame[mask] = base * shade[..., None]
        frames[t] = frame
        keypoints[t] = joints
        part_id[t] = pid
        uv[t] = puv
        joints_all.append(joints)
        thetas_all.append(thetas)

    flow = np.zeros((T - 1, h, w, 2), dtype=np.float64)
    conf = np.zeros((T - 1, h, w), dtype=np.uint8)
    for t in range(1, T):
        flow[t - 1], conf[t - 1] = core.flow_and_confidence(
            joints_all[t], joints_all[t - 1], geometry.radii,
            part_id[t], uv[t], part_id[t - 1],
        )
    return SyntheticSequence(
        config, geometry, frames, keypoints, part_id, uv, flow, conf, background
    )


def brute_force_unwrap(frames, part_id, uv, n_parts, resolution):
    """Slow reference unwrap: average observed colors into each part's chart.

    Walks every pixel of every frame in plain Python, binning the color at
    the nearest texel center (index round(u * (R - 1))). Returns
    (textures (N, 3, R, R) float64, counts (N, R, R) int64); texels never
    observed keep color 0 and count 0. Deliberately unclever: this is the
    oracle the fast initializer is checked against.
    """
    R = int(resolution)
    n_frames, h, w = part_id.shape
    sums = np.zeros((n_parts, 3, R, R), dtype=np.float64)
    counts = np.zeros((n_parts, R, R), dtype=np.int64)
    for t in range(n_frames):
        pid_t = part_id[t]
        uv_t = uv[t]
        frame_t = frames[t]
        for i in range(h):
            for j in range(w):
                k = int(pid_t[i, j])
                if k == 0:
                    continue
                iu = int(round(uv_t[i, j, 0] * (R - 1)))
                iv = int(round(uv_t[i, j, 1] * (R - 1)))
                if iu < 0:
                    iu = 0
                elif iu > R - 1:
                    iu = R - 1
                if iv < 0:
                    iv = 0
                elif iv > R - 1:
                    iv = R - 1
                sums[k - 1, :, iv, iu] += frame_t[i, j]
                counts[k - 1, iv, iu] += 1
    textures = np.zeros_like(sums)
    observed = counts > 0
    for c in range(3):
        textures[:, c][observed] = sums[:, c][observed] / counts[observed]
    return textures, counts
