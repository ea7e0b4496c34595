"""Binary weight and dataset files.

Weights (little-endian)::

    magic    8 bytes   b"HRCLSTM\\0"
    version  uint32    1
    inputs   uint32    F
    hidden   uint32    H
    float64 blocks in order: W (4H*F), U (4H*H), b (4H), w_out (H), b_out (1),
                             mean (F), std (F)

Dataset::

    line 1   "# hrcsync imu-dataset v1"
    line 2   JSON metadata with "n", "T", "F" and generator settings
    payload  y as uint8 (n bytes), then X as float64 LE (n*T*F)
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..formats import FormatError, check_header, header
from .lstm import LstmParams
from .synth import ImuDataset

MAGIC = b"HRCLSTM\0"
WEIGHTS_VERSION = 1
DATASET_KIND = "imu-dataset"
_HEAD = struct.Struct("<8sIII")
_BLOCKS = ("W", "U", "b", "w_out", "b_out", "mean", "std")


def weights_bytes(params: LstmParams) -> bytes:
    parts = [_HEAD.pack(MAGIC, WEIGHTS_VERSION, params.input_size, params.hidden_size)]
    for name in _BLOCKS:
        parts.append(np.asarray(getattr(params, name), dtype="<f8").tobytes())
    return b"".join(parts)


def params_from_bytes(buf: bytes) -> LstmParams:
    if len(buf) < _HEAD.size:
        raise FormatError("weights file truncated")
    magic, version, F, H = _HEAD.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError("not a weights file (bad magic)")
    if version != WEIGHTS_VERSION:
        raise FormatError(f"unsupported weights version {version}")
    sizes = [4 * H * F, 4 * H * H, 4 * H, H, 1, F, F]
    expected = _HEAD.size + 8 * sum(sizes)
    if len(buf) != expected:
        raise FormatError(f"weights file has {len(buf)} bytes, expected {expected}")
    vals = np.frombuffer(buf, dtype="<f8", offset=_HEAD.size).astype(float)
    out = {}
    pos = 0
    shapes = [(4 * H, F), (4 * H, H), (4 * H,), (H,), None, (F,), (F,)]
    for name, size, shape in zip(_BLOCKS, sizes, shapes):
        chunk = vals[pos:pos + size]
        out[name] = float(chunk[0]) if shape is None else chunk.reshape(shape).copy()
        pos += size
    return LstmParams(**out)


def save_weights(params: LstmParams, path) -> None:
    Path(path).write_bytes(weights_bytes(params))


def load_weights(path) -> LstmParams:
    return params_from_bytes(Path(path).read_bytes())


def weights_to_text(params: LstmParams) -> str:
    """Structured-text export for inspection (not read back)."""
    d = {
        "format": f"hrcsync-weights v{WEIGHTS_VERSION}",
        "inputs": params.input_size,
        "hidden": params.hidden_size,
        "gates": {},
        "w_out": params.w_out.tolist(),
        "b_out": params.b_out,
        "mean": params.mean.tolist(),
        "std": params.std.tolist(),
    }
    for g in ("i", "f", "g", "o"):
        W, U, b = params.gate(g)
        d["gates"][g] = {"W": W.tolist(), "U": U.tolist(), "b": b.tolist()}
    return json.dumps(d, indent=1) + "\n"


def save_dataset(data: ImuDataset, path) -> None:
    n, T, F = data.X.shape
    meta = dict(data.meta, n=n, T=T, F=F)
    with open(path, "wb") as fh:
        fh.write((header(DATASET_KIND) + "\n").encode())
        fh.write((json.dumps(meta, sort_keys=True) + "\n").encode())
        fh.write(data.y.astype(np.uint8).tobytes())
        fh.write(data.X.astype("<f8").tobytes())


def load_dataset(path) -> ImuDataset:
    with open(path, "rb") as fh:
        check_header(fh.readline().decode("utf-8", "replace"), DATASET_KIND)
        try:
            meta = json.loads(fh.readline())
            n, T, F = meta["n"], meta["T"], meta["F"]
        except (ValueError, KeyError) as e:
            raise FormatError(f"bad dataset metadata: {e}", 2) from None
        y_raw = fh.read(n)
        x_raw = fh.read(8 * n * T * F)
        if len(y_raw) != n or len(x_raw) != 8 * n * T * F or fh.read(1):
            raise FormatError("dataset payload size does not match its metadata")
        y = np.frombuffer(y_raw, dtype=np.uint8)
        X = np.frombuffer(x_raw, dtype="<f8")
    for k in ("n", "T", "F"):
        meta.pop(k)
    return ImuDataset(X.reshape(n, T, F).astype(float), y.copy(), meta)
