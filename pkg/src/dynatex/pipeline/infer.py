"""Inference: drive a trained model with poses, write PNG frames + video.

This path renders frame by frame with no temporal state: no flow is read,
computed, or warped anywhere here, which is what makes single-frame and
shuffled-pose driving possible. The warp call counter stays untouched.
"""

import os

import numpy as np
import torch
from PIL import Image

from ..errors import DataError, VersionError
from ..pose import KeypointSet, rasterize_pose
from ..scene import load_dataset
from .config import TrainConfig
from .checkpoint import load_checkpoint
from .model import RenderModel
from .train import load_model_tensors


def load_render_model(checkpoint_path):
    """Rebuild a RenderModel from a training checkpoint's embedded config."""
    manifest, tensors = load_checkpoint(checkpoint_path)
    if manifest.get("kind") != "train":
        raise VersionError("%s is not a training checkpoint" % checkpoint_path)
    config = TrainConfig.from_dict(manifest["config"])
    model = RenderModel(config)
    load_model_tensors(model, tensors)
    model.eval()
    return model, config, manifest


def pose_rasters(dataset_root, image_size):
    """Rasterized pose labels (T, 6, H, W) from a dataset's keypoints."""
    ds = load_dataset(dataset_root)
    if tuple(ds.image_size) != tuple(image_size):
        raise DataError("pose source %s is %s, model expects %s"
                        % (dataset_root, tuple(ds.image_size), tuple(image_size)))
    h, w = image_size
    kps = [KeypointSet.from_points(p, image_size=(h, w)) for p in ds.keypoints]
    poses = np.stack([rasterize_pose(k, ds.geometry, (h, w)) for k in kps])
    return torch.from_numpy(poses.transpose(0, 3, 1, 2).astype(np.float32).copy()), ds


def render_sequence(model, poses):
    """(T, 6, H, W) poses -> (T, H, W, 3) float32 frames in [0, 1]."""
    frames = []
    with torch.no_grad():
        for t in range(poses.shape[0]):
            out = model.forward_frame(poses[t], with_static=False)
            img = out["syn"].clamp(0.0, 1.0).numpy().transpose(1, 2, 0)
            frames.append(img)
    return np.stack(frames)


def _to_u8(frame):
    return np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8)


def write_frames(frames, out_dir):
    frame_dir = os.path.join(out_dir, "frames")
    os.makedirs(frame_dir, exist_ok=True)
    paths = []
    for t in range(frames.shape[0]):
        path = os.path.join(frame_dir, "%06d.png" % t)
        Image.fromarray(_to_u8(frames[t])).save(path)
        paths.append(path)
    return paths


def write_video(frames, path, fps=20):
    """Lossless animated PNG; every frame is stored exactly."""
    images = [Image.fromarray(_to_u8(frames[t])) for t in range(frames.shape[0])]
    images[0].save(path, save_all=True, append_images=images[1:],
                   duration=int(round(1000.0 / fps)), loop=0, default_image=False)


def load_background_image(path, image_size):
    try:
        img = Image.open(path).convert("RGB")
    except FileNotFoundError:
        raise DataError("background image not found: %s" % path)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    if arr.shape[:2] != tuple(image_size):
        raise DataError("background image %s is %s, model expects %s"
                        % (path, arr.shape[:2], tuple(image_size)))
    return arr


def infer(checkpoint_path, out_dir, pose_source=None, background_png=None, limit=None):
    """Render a pose sequence to out_dir/frames and out_dir/video.png.

    pose_source defaults to the dataset the model was trained on
    (self-transfer). background_png, if given, replaces the learned
    background for this render only.
    """
    model, config, _ = load_render_model(checkpoint_path)
    poses, _ = pose_rasters(pose_source or config.dataset, config.image_size)
    if limit is not None:
        poses = poses[:max(0, int(limit))]
    if poses.shape[0] == 0:
        raise DataError("no poses to render")
    if background_png is not None:
        bg = load_background_image(background_png, config.image_size)
        with torch.no_grad():
            model.background.copy_(torch.from_numpy(bg.transpose(2, 0, 1)))
    os.makedirs(out_dir, exist_ok=True)
    frames = render_sequence(model, poses)
    paths = write_frames(frames, out_dir)
    video = os.path.join(out_dir, "video.png")
    write_video(frames, video)
    return {"frames": paths, "video": video, "n_frames": frames.shape[0]}
