"""Learnable multi-part hybrid texture atlas.

One atlas holds N part charts of R x R texels with 18 channels each:
channels 0-2 are explicit RGB, channels 3-17 are implicit detail codes that
only mean something to the detail renderer. Initialization writes the
average observed color of each texel into the RGB channels and leaves the
implicit channels at exactly zero.
"""

import os
import struct

import numpy as np
import torch
from PIL import Image

from .errors import FormatError

N_CHANNELS = 18
MAGIC = b"HTX1"
_HEADER = struct.Struct("<4sIII")


class HybridTexture(torch.nn.Module):
    def __init__(self, n_parts, resolution, values=None):
        super().__init__()
        self.n_parts = int(n_parts)
        self.resolution = int(resolution)
        if values is None:
            values = torch.zeros(self.n_parts, N_CHANNELS, self.resolution, self.resolution)
        values = torch.as_tensor(values, dtype=torch.float32)
        expect = (self.n_parts, N_CHANNELS, self.resolution, self.resolution)
        if tuple(values.shape) != expect:
            raise FormatError("texture values must have shape %s" % (expect,))
        self.values = torch.nn.Parameter(values)

    def rgb(self):
        return self.values[:, 0:3]


def _diffuse_fill(rgb, covered):
    """Fill uncovered texels by repeatedly averaging covered 4-neighbors.

    rgb is (3, R, R) float64, covered (R, R) bool; mutates and returns rgb.
    """
    covered = covered.copy()
    while not covered.all():
        csum = np.zeros_like(rgb)
        cnt = np.zeros(covered.shape, dtype=np.float64)
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            shifted = np.zeros_like(rgb)
            shifted_cov = np.zeros_like(cnt)
            src = rgb * covered[None]
            if dy == 1:
                shifted[:, 1:] = src[:, :-1]
                shifted_cov[1:] = covered[:-1]
            elif dy == -1:
                shifted[:, :-1] = src[:, 1:]
                shifted_cov[:-1] = covered[1:]
            elif dx == 1:
                shifted[:, :, 1:] = src[:, :, :-1]
                shifted_cov[:, 1:] = covered[:, :-1]
            else:
                shifted[:, :, :-1] = src[:, :, 1:]
                shifted_cov[:, :-1] = covered[:, 1:]
            csum += shifted
            cnt += shifted_cov
        frontier = (~covered) & (cnt > 0)
        if not frontier.any():
            break
        rgb[:, frontier] = csum[:, frontier] / cnt[frontier]
        covered |= frontier
    return rgb


def accumulate_observations(frames, part_id, uv, n_parts, resolution):
    """Vectorized texel accumulation (same binning as the slow unwrap).

    Returns (sums (N, 3, R, R) float64, counts (N, R, R) int64). Each
    foreground pixel contributes its color to the nearest texel center of
    its owning part, texel index rint(u * (R - 1)).
    """
    R = int(resolution)
    frames = np.asarray(frames, dtype=np.float64)
    pid = np.asarray(part_id)
    uv = np.asarray(uv, dtype=np.float64)
    fg = pid > 0
    colors = frames[fg]
    parts = pid[fg].astype(np.int64) - 1
    iu = np.clip(np.rint(uv[fg][:, 0] * (R - 1)).astype(np.int64), 0, R - 1)
    iv = np.clip(np.rint(uv[fg][:, 1] * (R - 1)).astype(np.int64), 0, R - 1)
    flat = (parts * R + iv) * R + iu
    sums = np.zeros((n_parts, 3, R, R), dtype=np.float64)
    counts = np.zeros(n_parts * R * R, dtype=np.int64)
    np.add.at(counts, flat, 1)
    for c in range(3):
        acc = np.zeros(n_parts * R * R, dtype=np.float64)
        np.add.at(acc, flat, colors[:, c])
        sums[:, c] = acc.reshape(n_parts, R, R)
    return sums, counts.reshape(n_parts, R, R)


def initialize_from_video(frames, part_id, uv, n_parts, resolution):
    """Build the initial hybrid texture from observed frames.

    RGB channels get the per-texel mean color; texels never observed are
    filled by neighbor diffusion from observed ones so UV drift during joint
    training does not sample black seams. Channels 3-17 start at exactly
    zero. Returns (HybridTexture, uncovered_part_ids); parts without a
    single observation are filled with the mean observed color overall and
    reported in the id list rather than failing.
    """
    R = int(resolution)
    sums, counts = accumulate_observations(frames, part_id, uv, n_parts, resolution)
    values = np.zeros((n_parts, N_CHANNELS, R, R), dtype=np.float64)
    observed = counts > 0
    if observed.any():
        global_mean = sums.sum(axis=(0, 2, 3)) / counts.sum()
    else:
        global_mean = np.full(3, 0.5)
    uncovered_parts = []
    for k in range(n_parts):
        cov = observed[k]
        if not cov.any():
            uncovered_parts.append(k + 1)
            values[k, 0:3] = global_mean[:, None, None]
            continue
        rgb = np.zeros((3, R, R), dtype=np.float64)
        rgb[:, cov] = sums[k][:, cov] / counts[k][cov]
        values[k, 0:3] = _diffuse_fill(rgb, cov)
    tex = HybridTexture(n_parts, R, torch.from_numpy(values.astype(np.float32)))
    return tex, uncovered_parts


def save_texture(tex, path):
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, tex.n_parts, N_CHANNELS, tex.resolution))
        f.write(tex.values.detach().cpu().numpy().astype("<f4").tobytes())


def load_texture(path):
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FormatError("%s: truncated texture header" % path)
        magic, n, c, r = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError("%s: bad texture magic %r" % (path, magic))
        if c != N_CHANNELS:
            raise FormatError("%s: texture has %d channels, expected %d" % (path, c, N_CHANNELS))
        payload = f.read()
    expected = n * c * r * r * 4
    if len(payload) != expected:
        raise FormatError(
            "%s: texture payload is %d bytes, expected %d" % (path, len(payload), expected)
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(n, c, r, r).copy()
    return HybridTexture(n, r, torch.from_numpy(values))


def export_previews(tex, out_dir):
    """Write the RGB channels of each part as texture_part_%02d.png."""
    os.makedirs(out_dir, exist_ok=True)
    rgb = tex.rgb().detach().cpu().numpy()
    paths = []
    for k in range(tex.n_parts):
        img = np.clip(np.round(rgb[k].transpose(1, 2, 0) * 255.0), 0, 255).astype(np.uint8)
        path = os.path.join(out_dir, "texture_part_%02d.png" % k)
        Image.fromarray(img).save(path)
        paths.append(path)
    return paths
