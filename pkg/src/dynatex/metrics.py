"""Image and sequence quality metrics, computed in float64 numpy.

PSNR uses peak 1.0 (images live in [0, 1]) and returns inf for identical
inputs. SSIM is the classic single-scale index on Rec.601 luma with an
11x11 gaussian window (sigma 1.5) and valid-mode convolution, so no
padding policy can skew border statistics.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError, ShapeError
from .losses import temporal_loss
from .pose import select_challenging

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def psnr(a, b):
    """Peak signal-to-noise ratio in dB between two [0, 1] images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError("psnr inputs differ in shape: %s vs %s" % (a.shape, b.shape))
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * math.log10(1.0 / mse))


def _to_gray(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 3:
        return img[:, :, 0] * 0.299 + img[:, :, 1] * 0.587 + img[:, :, 2] * 0.114
    if img.ndim == 2:
        return img
    raise ShapeError("expected an (H, W) or (H, W, 3) image, got %s" % (img.shape,))


def _gaussian_kernel(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    off = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(off ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(img, kernel):
    # separable valid-mode gaussian: rows then columns
    win = sliding_window_view(img, len(kernel), axis=1)
    img = win @ kernel
    win = sliding_window_view(img, len(kernel), axis=0)
    return win @ kernel


def ssim(a, b):
    """Mean structural similarity over all valid 11x11 windows."""
    ga = _to_gray(a)
    gb = _to_gray(b)
    if ga.shape != gb.shape:
        raise ShapeError("ssim inputs differ in shape: %s vs %s" % (ga.shape, gb.shape))
    if ga.shape[0] < SSIM_WINDOW or ga.shape[1] < SSIM_WINDOW:
        raise ValueError("image smaller than the %dx%d ssim window" % (SSIM_WINDOW, SSIM_WINDOW))
    k = _gaussian_kernel()
    mu_a = _filter_valid(ga, k)
    mu_b = _filter_valid(gb, k)
    var_a = _filter_valid(ga * ga, k) - mu_a * mu_a
    var_b = _filter_valid(gb * gb, k) - mu_b * mu_b
    cov = _filter_valid(ga * gb, k) - mu_a * mu_b
    c1 = 0.01 ** 2
    c2 = 0.03 ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def temporal_error(frames, flow, conf):
    """Mean confidence-masked warp error over consecutive synthesized frames.

    frames: (T, H, W, 3), flow: (T-1, H, W, 2), conf: (T-1, H, W); the
    per-pair term is the training-time temporal loss evaluated in float64.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 4 or frames.shape[3] != 3:
        raise ShapeError("expected frames shaped (T, H, W, 3), got %s" % (frames.shape,))
    if frames.shape[0] < 2:
        raise ValueError("temporal error needs at least two frames")
    if flow.shape[0] != frames.shape[0] - 1 or conf.shape[0] != frames.shape[0] - 1:
        raise DataError("flow/confidence must cover each consecutive pair")
    total = 0.0
    for t in range(1, frames.shape[0]):
        cur = torch.from_numpy(np.ascontiguousarray(frames[t].transpose(2, 0, 1)))
        prev = torch.from_numpy(np.ascontiguousarray(frames[t - 1].transpose(2, 0, 1)))
        fl = torch.from_numpy(np.asarray(flow[t - 1], dtype=np.float64))
        cf = torch.from_numpy(np.asarray(conf[t - 1], dtype=np.float64))
        total += float(temporal_loss(cur, prev, fl, cf))
    return total / (frames.shape[0] - 1)


def robust_subset_metrics(syn_frames, real_frames, val_keypoints, train_keypoints, m=10):
    """PSNR/SSIM averaged over the m validation poses farthest from training.

    Frame order must match val_keypoints. Returns a dict with the chosen
    indices and the subset means.
    """
    if len(syn_frames) != len(val_keypoints) or len(real_frames) != len(val_keypoints):
        raise ShapeError("frames and validation keypoints are misaligned")
    idx = select_challenging(val_keypoints, train_keypoints, m)
    psnrs = [psnr(syn_frames[i], real_frames[i]) for i in idx]
    ssims = [ssim(syn_frames[i], real_frames[i]) for i in idx]
    return {
        "indices": list(idx),
        "psnr": float(np.mean(psnrs)) if psnrs else float("nan"),
        "ssim": float(np.mean(ssims)) if ssims else float("nan"),
    }


def _jsonable(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


@dataclass
class EvalReport:
    """Aggregate evaluation results for one synthesized sequence.

    robust_psnr/robust_ssim are the means over the challenging-pose subset
    picked by select_challenging; challenging_indices records that subset.
    """

    n_frames: int
    psnr: float
    ssim: float
    temporal_error: float
    challenging_indices: list = field(default_factory=list)
    robust_psnr: float = float("nan")
    robust_ssim: float = float("nan")
    frame_psnr: list = field(default_factory=list)
    frame_ssim: list = field(default_factory=list)

    def to_json(self):
        payload = {
            "n_frames": self.n_frames,
            "psnr": self.psnr,
            "ssim": self.ssim,
            "temporal_error": self.temporal_error,
            "robust_psnr": self.robust_psnr,
            "robust_ssim": self.robust_ssim,
            "challenging_indices": self.challenging_indices,
            "frame_psnr": self.frame_psnr,
            "frame_ssim": self.frame_ssim,
        }
        return json.dumps(_jsonable(payload), indent=1, sort_keys=True)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "psnr", "ssim"])
            for i, (p, s) in enumerate(zip(self.frame_psnr, self.frame_ssim)):
                writer.writerow([i, repr(float(p)), repr(float(s))])
