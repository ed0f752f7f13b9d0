"""Self-transfer evaluation on the validation split."""

import os

import numpy as np

from ..metrics import EvalReport, psnr, robust_subset_metrics, ssim, temporal_error
from .data import TrainData
from .infer import load_render_model, render_sequence


def report_for_frames(syn, real, val_kps, train_kps, flow=None, conf=None, m=10):
    """Build an EvalReport from aligned synthesized/ground-truth frames.

    syn, real: (T, H, W, 3); flow/conf cover the T-1 consecutive pairs of
    the window when temporal error is wanted. m is clamped to the window
    size so short validation windows still evaluate.
    """
    n = len(syn)
    frame_psnr = [psnr(syn[t], real[t]) for t in range(n)]
    frame_ssim = [ssim(syn[t], real[t]) for t in range(n)]
    temporal = float("nan")
    if flow is not None and conf is not None and n >= 2:
        temporal = temporal_error(syn, flow, conf)
    subset = {"indices": [], "psnr": float("nan"), "ssim": float("nan")}
    m_eff = min(m, len(val_kps))
    if m_eff > 0 and train_kps:
        subset = robust_subset_metrics(syn, real, val_kps, train_kps, m_eff)
    return EvalReport(
        n_frames=n,
        psnr=float(np.mean(frame_psnr)),
        ssim=float(np.mean(frame_ssim)),
        temporal_error=temporal,
        challenging_indices=subset["indices"],
        robust_psnr=subset["psnr"],
        robust_ssim=subset["ssim"],
        frame_psnr=frame_psnr,
        frame_ssim=frame_ssim,
    )


def evaluate(checkpoint_path, out_dir=None, dataset_root=None):
    """Render the validation window and score it against ground truth."""
    model, config, _ = load_render_model(checkpoint_path)
    data = TrainData(dataset_root or config.dataset, config.n_parts,
                     config.image_size, config.val_fraction, config.seed)
    val = data.val_indices
    syn = render_sequence(model, data.poses[val])
    real = data.dataset.frames[val].astype(np.float64)
    # the window is contiguous, so dataset flow t-1 -> t lines up directly
    flow = conf = None
    if len(val) >= 2:
        flow = data.dataset.flow[val[0]:val[-1]]
        conf = data.dataset.conf[val[0]:val[-1]]
    val_kps = [data.keypoints[t] for t in val]
    train_kps = [data.keypoints[t] for t in data.train_indices]
    report = report_for_frames(syn, real, val_kps, train_kps,
                               flow=flow, conf=conf, m=config.challenging_m)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "eval_report.json"), "w") as f:
            f.write(report.to_json())
        report.write_csv(os.path.join(out_dir, "eval_frames.csv"))
    return report
