"""Training-side view of a dataset: torch tensors, split, pair ordering.

The validation split is one contiguous window (fraction of the timeline,
placed deterministically by seed) rather than scattered frames, so the
training pairs stay genuinely consecutive and validation measures a real
unseen stretch of motion. Frame pairs never straddle the window edges.
"""

import numpy as np
import torch

from ..errors import ConfigError, DataError
from ..pose import KeypointSet, rasterize_pose
from ..scene import load_dataset


class TrainData:
    """Everything the trainer reads, preloaded as CPU tensors.

    Desk-scale sequences fit in memory whole, so there is no loader
    process; the single training thread is the only writer anywhere.
    """

    def __init__(self, root, n_parts, image_size, val_fraction, seed):
        ds = load_dataset(root)
        if ds.config.n_parts != n_parts:
            raise ConfigError("config says %d parts but dataset %s has %d"
                              % (n_parts, root, ds.config.n_parts))
        if tuple(ds.image_size) != tuple(image_size):
            raise ConfigError("config image_size %s does not match dataset %s"
                              % (tuple(image_size), tuple(ds.image_size)))
        self.root = root
        self.dataset = ds
        self.n_frames = ds.n_frames
        self.geometry = ds.geometry
        h, w = ds.image_size
        self.frames = torch.from_numpy(ds.frames.transpose(0, 3, 1, 2).copy())
        self.part_id = torch.from_numpy(ds.part_id.astype(np.int64))
        self.uv = torch.from_numpy(ds.uv)
        self.flow = torch.from_numpy(ds.flow)
        self.conf = torch.from_numpy(ds.conf.astype(np.float32))
        self.keypoints = [KeypointSet.from_points(p, image_size=(h, w))
                          for p in ds.keypoints]
        poses = np.stack([rasterize_pose(k, ds.geometry, (h, w))
                          for k in self.keypoints])
        self.poses = torch.from_numpy(poses.transpose(0, 3, 1, 2).astype(np.float32).copy())
        self.background_gt = ds.background

        val_len = max(1, int(round(ds.n_frames * val_fraction)))
        if val_len >= ds.n_frames:
            raise DataError("dataset %s too short for a %.2f validation fraction"
                            % (root, val_fraction))
        rng = np.random.default_rng(seed)
        start = int(rng.integers(0, ds.n_frames - val_len + 1))
        self.val_indices = list(range(start, start + val_len))
        val_set = set(self.val_indices)
        self.train_indices = [t for t in range(ds.n_frames) if t not in val_set]
        # pairs (t-1, t) with both frames in the training split
        self.train_pairs = [(t - 1, t) for t in range(1, ds.n_frames)
                            if t - 1 not in val_set and t not in val_set]
        self.val_pairs = [(t - 1, t) for t in range(1, ds.n_frames)
                          if t - 1 in val_set and t in val_set]
        if not self.train_pairs:
            raise DataError("dataset %s leaves no consecutive training pairs" % root)
        self._seed = seed

    def epoch_pair_order(self, epoch):
        """Deterministic shuffle for one epoch, independent of torch RNG state.

        Derived from (seed, epoch) alone so resuming at an epoch boundary
        replays the identical schedule without serializing generator state.
        """
        rng = np.random.default_rng(self._seed * 1000003 + epoch)
        order = rng.permutation(len(self.train_pairs))
        return [self.train_pairs[i] for i in order]

    def epoch_frame_order(self, epoch):
        rng = np.random.default_rng(self._seed * 1000003 + epoch)
        order = rng.permutation(len(self.train_indices))
        return [self.train_indices[i] for i in order]
