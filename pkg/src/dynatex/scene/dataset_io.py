"""On-disk layout for generated sequences.

    <root>/frames/%06d.png      8-bit RGB frames
    <root>/partid/%06d.png      8-bit single channel, pixel value = part id
    <root>/uv/%06d.bin          chart coords, 2 channels       (magic UVW1)
    <root>/flow/%06d.bin        backward flow,  2 channels     (magic FLW1)
    <root>/conf/%06d.bin        flow validity,  1 channel      (magic CNF1)
    <root>/background.png       clean plate
    <root>/keypoints.json       T x J x [x, y]
    <root>/scene.json           scene config + puppet geometry
    <root>/skeleton.json        bone index pairs, bone palette, radii

Flow and confidence describe the pair (t-1 -> t) and are indexed by t, so
those directories start at 000001. Binary tensors are a 16-byte header
(magic, u32 height, width, channels, little endian) followed by float32
row-major payload.
"""

import json
import os
import struct

import numpy as np
from PIL import Image

from ..errors import DataError, FormatError, SchemaError
from .config import SceneConfig
from .generate import SyntheticSequence
from .geometry import PuppetGeometry

MAGIC_UV = b"UVW1"
MAGIC_FLOW = b"FLW1"
MAGIC_CONF = b"CNF1"
_HEADER = struct.Struct("<4sIII")


def write_tensor(path, magic, array):
    array = np.asarray(array, dtype=np.float32)
    if array.ndim == 2:
        array = array[..., None]
    if array.ndim != 3:
        raise FormatError("tensor files hold HxWxC arrays, got ndim=%d" % array.ndim)
    h, w, c = array.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(magic, h, w, c))
        f.write(np.ascontiguousarray(array).tobytes())


def read_tensor(path, magic):
    try:
        with open(path, "rb") as f:
            header = f.read(_HEADER.size)
            if len(header) != _HEADER.size:
                raise FormatError("%s: truncated header" % path)
            got_magic, h, w, c = _HEADER.unpack(header)
            if got_magic != magic:
                raise FormatError(
                    "%s: bad magic %r, expected %r" % (path, got_magic, magic)
                )
            payload = f.read()
    except OSError as e:
        raise DataError("cannot read %s: %s" % (path, e)) from e
    expected = h * w * c * 4
    if len(payload) != expected:
        raise FormatError(
            "%s: payload is %d bytes, expected %d" % (path, len(payload), expected)
        )
    return np.frombuffer(payload, dtype="<f4").reshape(h, w, c).copy()


def _to_u8(img):
    return np.clip(np.round(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)


def _save_png(path, array):
    Image.fromarray(array).save(path)


def write_dataset(seq, root):
    """Write a SyntheticSequence to root, creating the directory tree."""
    for sub in ("frames", "partid", "uv", "flow", "conf"):
        os.makedirs(os.path.join(root, sub), exist_ok=True)
    T = seq.n_frames
    if seq.config.n_parts > 255:
        raise DataError("part ids beyond 255 do not fit the 8-bit id maps")
    for t in range(T):
        _save_png(os.path.join(root, "frames", "%06d.png" % t), _to_u8(seq.frames[t]))
        _save_png(
            os.path.join(root, "partid", "%06d.png" % t),
            seq.part_id[t].astype(np.uint8),
        )
        write_tensor(os.path.join(root, "uv", "%06d.bin" % t), MAGIC_UV, seq.uv[t])
    for t in range(1, T):
        write_tensor(os.path.join(root, "flow", "%06d.bin" % t), MAGIC_FLOW, seq.flow[t - 1])
        write_tensor(
            os.path.join(root, "conf", "%06d.bin" % t),
            MAGIC_CONF,
            seq.conf[t - 1].astype(np.float32),
        )
    _save_png(os.path.join(root, "background.png"), _to_u8(seq.background))
    with open(os.path.join(root, "keypoints.json"), "w") as f:
        json.dump(seq.keypoints.tolist(), f)
    with open(os.path.join(root, "scene.json"), "w") as f:
        json.dump(
            {"config": seq.config.to_dict(), "geometry": seq.geometry.to_dict()},
            f,
            indent=1,
        )
    from ..pose import bone_palette

    with open(os.path.join(root, "skeleton.json"), "w") as f:
        json.dump(
            {
                "bones": seq.geometry.bones(),
                "palette": bone_palette(seq.geometry.n_parts).tolist(),
                "radii": seq.geometry.radii.tolist(),
            },
            f,
        )


class Dataset:
    """A sequence loaded back from disk.

    Frames and ground truth come back as float32 in [0, 1] (frames went
    through 8-bit PNG, so they carry quantization; the float ground truth
    does not).
    """

    def __init__(self, root, config, geometry, frames, keypoints, part_id, uv, flow, conf, background):
        self.root = root
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

    @property
    def image_size(self):
        return self.frames.shape[1:3]


def _load_json(path, what):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise DataError("missing %s: %s" % (what, path)) from e
    except json.JSONDecodeError as e:
        raise SchemaError("%s is not valid JSON: %s" % (path, e)) from e


def load_dataset(root):
    scene = _load_json(os.path.join(root, "scene.json"), "scene description")
    if not isinstance(scene, dict) or set(scene) != {"config", "geometry"}:
        raise SchemaError("scene.json must hold exactly config and geometry")
    config = SceneConfig.from_dict(scene["config"])
    geometry = PuppetGeometry.from_dict(scene["geometry"])
    h, w = config.image_size
    T = config.n_frames

    frames = np.empty((T, h, w, 3), dtype=np.float32)
    part_id = np.empty((T, h, w), dtype=np.int32)
    uv = np.empty((T, h, w, 2), dtype=np.float32)
    for t in range(T):
        fpath = os.path.join(root, "frames", "%06d.png" % t)
        try:
            with Image.open(fpath) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
        except OSError as e:
            raise DataError("missing or unreadable frame %s: %s" % (fpath, e)) from e
        if arr.shape != (h, w, 3):
            raise DataError(
                "frame %s has shape %s, scene says %s" % (fpath, arr.shape, (h, w, 3))
            )
        frames[t] = arr
        ppath = os.path.join(root, "partid", "%06d.png" % t)
        try:
            with Image.open(ppath) as im:
                pid = np.asarray(im, dtype=np.int32)
        except OSError as e:
            raise DataError("missing part id map %s: %s" % (ppath, e)) from e
        if pid.shape != (h, w):
            raise DataError("part id map %s has shape %s" % (ppath, pid.shape))
        if pid.max(initial=0) > config.n_parts:
            raise DataError("part id map %s has ids beyond n_parts" % ppath)
        part_id[t] = pid
        uv_t = read_tensor(os.path.join(root, "uv", "%06d.bin" % t), MAGIC_UV)
        if uv_t.shape != (h, w, 2):
            raise DataError("uv map %06d has shape %s" % (t, uv_t.shape))
        uv[t] = uv_t

    flow = np.empty((T - 1, h, w, 2), dtype=np.float32)
    conf = np.empty((T - 1, h, w), dtype=np.float32)
    for t in range(1, T):
        fl = read_tensor(os.path.join(root, "flow", "%06d.bin" % t), MAGIC_FLOW)
        cf = read_tensor(os.path.join(root, "conf", "%06d.bin" % t), MAGIC_CONF)
        if fl.shape != (h, w, 2) or cf.shape != (h, w, 1):
            raise DataError("flow/conf %06d have wrong shapes" % t)
        flow[t - 1] = fl
        conf[t - 1] = cf[..., 0]

    kp = _load_json(os.path.join(root, "keypoints.json"), "keypoints")
    keypoints = np.asarray(kp, dtype=np.float64)
    if keypoints.shape != (T, geometry.n_joints, 2):
        raise SchemaError(
            "keypoints.json has shape %s, expected %s"
            % (keypoints.shape, (T, geometry.n_joints, 2))
        )
    bpath = os.path.join(root, "background.png")
    try:
        with Image.open(bpath) as im:
            background = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    except OSError as e:
        raise DataError("missing background %s: %s" % (bpath, e)) from e
    return Dataset(root, config, geometry, frames, keypoints, part_id, uv, flow, conf, background)
