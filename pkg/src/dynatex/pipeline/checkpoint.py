"""Binary checkpoint container: one JSON manifest plus float32 payloads.

Layout: magic "CKP1", u32 little-endian manifest byte length, canonical
JSON manifest (sorted keys, no whitespace), then each tensor's float32
little-endian bytes in manifest index order. The index is sorted by
tensor name and the manifest embeds the full originating config, so
saving, loading, and saving again reproduces the file byte for byte.
"""

import json
import struct

import numpy as np

from ..errors import FormatError, VersionError

MAGIC = b"CKP1"
VERSION = 1
_LEN = struct.Struct("<I")


def save_checkpoint(path, config, tensors, step=0, epoch=0, kind="train"):
    """Write named float32 arrays with config identity and progress counters."""
    names = sorted(tensors)
    index = []
    payloads = []
    for name in names:
        arr = np.asarray(tensors[name], dtype="<f4")
        index.append({"name": name, "shape": list(arr.shape)})
        payloads.append(arr.tobytes(order="C"))
    manifest = {
        "version": VERSION,
        "kind": kind,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "step": int(step),
        "epoch": int(epoch),
        "tensors": index,
    }
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_LEN.pack(len(blob)))
        f.write(blob)
        for p in payloads:
            f.write(p)


def load_checkpoint(path, expect_config=None):
    """Read (manifest, {name: float32 array}); verify version and config hash.

    expect_config: when resuming or fine-tuning under a given config, pass it
    to assert the checkpoint was produced under the same one.
    """
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except FileNotFoundError:
        raise FormatError("checkpoint not found: %s" % path)
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise FormatError("%s: not a checkpoint file" % path)
    (blob_len,) = _LEN.unpack(raw[4:8])
    if len(raw) < 8 + blob_len:
        raise FormatError("%s: truncated manifest" % path)
    try:
        manifest = json.loads(raw[8:8 + blob_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError("%s: manifest is not valid JSON" % path)
    if manifest.get("version") != VERSION:
        raise VersionError("%s: unsupported checkpoint version %r"
                           % (path, manifest.get("version")))
    if expect_config is not None and manifest["config_hash"] != expect_config.config_hash():
        raise VersionError("%s: checkpoint was produced under a different config" % path)
    tensors = {}
    offset = 8 + blob_len
    for entry in manifest["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        nbytes = count * 4
        chunk = raw[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise FormatError("%s: payload truncated at tensor %r" % (path, entry["name"]))
        tensors[entry["name"]] = np.frombuffer(chunk, dtype="<f4").reshape(entry["shape"]).copy()
        offset += nbytes
    if offset != len(raw):
        raise FormatError("%s: %d trailing bytes after last tensor" % (path, len(raw) - offset))
    return manifest, tensors
