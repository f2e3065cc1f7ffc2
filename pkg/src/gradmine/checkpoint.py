"""GMCK checkpoint container.

Little-endian binary layout::

    magic   "GMCK"
    u32     version (= 1)
    u32     layer count
    per layer:
        u8  kind tag (see network.KIND_TAGS)
        for conv/dense layers: weights tensor, bias tensor
    Adam moments, one (m, v) tensor pair per parameter tensor in the
    same traversal order as above
    u64     Adam step counter

Every tensor is serialized as four u32 dims followed by a raw float32
payload.  Tied biases use dims (1, 1, 1, c); untied biases
(1, out_w, out_h, c).  Save -> load -> save is byte-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .network import KIND_TAGS, LAYER_KINDS, Network, ParamStore

MAGIC = b"GMCK"
VERSION = 1


def _tensor_bytes(arr: np.ndarray) -> bytes:
    a = np.ascontiguousarray(arr, dtype="<f4")
    dims = list(a.shape)
    while len(dims) < 4:
        dims.insert(0, 1)
    if len(dims) != 4:
        raise FormatError(f"tensor rank {arr.ndim} > 4 cannot be serialized")
    return struct.pack("<4I", *dims) + a.tobytes()


def _read_exact(buf: bytes, offset: int, count: int) -> tuple[bytes, int]:
    if offset + count > len(buf):
        raise FormatError("truncated checkpoint file")
    return buf[offset:offset + count], offset + count


def _read_tensor(buf: bytes, offset: int) -> tuple[np.ndarray, int]:
    raw, offset = _read_exact(buf, offset, 16)
    dims = struct.unpack("<4I", raw)
    if min(dims) < 1:
        raise FormatError(f"invalid tensor dims {dims}")
    count = int(np.prod(dims))
    raw, offset = _read_exact(buf, offset, 4 * count)
    arr = np.frombuffer(raw, dtype="<f4").reshape(dims)
    return arr, offset


@dataclass
class CheckpointData:
    kinds: list[str]
    params: list[tuple[np.ndarray, np.ndarray] | None]   # (weights, bias) per layer
    moments: list[tuple[np.ndarray, np.ndarray]]          # (m, v) per parameter tensor
    step: int


def save_checkpoint(network: Network, store: ParamStore, path) -> None:
    """Serialize parameters and optimizer state; float64 networks are
    stored at float32 precision per the container format."""
    chunks = [MAGIC, struct.pack("<II", VERSION, len(network.layers))]
    for layer in network.layers:
        chunks.append(struct.pack("<B", KIND_TAGS[layer.kind]))
        if layer.has_params:
            chunks.append(_tensor_bytes(layer.weights))
            chunks.append(_tensor_bytes(layer.bias))
    for m, v in zip(store.m, store.v):
        chunks.append(_tensor_bytes(m))
        chunks.append(_tensor_bytes(v))
    chunks.append(struct.pack("<Q", store.t))
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_checkpoint(path) -> CheckpointData:
    """Parse a GMCK file; any structural problem raises FormatError
    without producing a partial result."""
    with open(path, "rb") as fh:
        buf = fh.read()
    raw, offset = _read_exact(buf, 0, 4)
    if raw != MAGIC:
        raise FormatError(f"bad magic {raw!r}, expected {MAGIC!r}")
    raw, offset = _read_exact(buf, offset, 8)
    version, n_layers = struct.unpack("<II", raw)
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    kinds: list[str] = []
    params: list[tuple[np.ndarray, np.ndarray] | None] = []
    for _ in range(n_layers):
        raw, offset = _read_exact(buf, offset, 1)
        tag = raw[0]
        if tag >= len(LAYER_KINDS):
            raise FormatError(f"unknown layer kind tag {tag}")
        kind = LAYER_KINDS[tag]
        kinds.append(kind)
        if kind in ("conv", "dense"):
            weights, offset = _read_tensor(buf, offset)
            bias, offset = _read_tensor(buf, offset)
            params.append((weights, bias))
        else:
            params.append(None)
    n_tensors = 2 * sum(1 for p in params if p is not None)
    moments = []
    for _ in range(n_tensors):
        m, offset = _read_tensor(buf, offset)
        v, offset = _read_tensor(buf, offset)
        moments.append((m, v))
    raw, offset = _read_exact(buf, offset, 8)
    (step,) = struct.unpack("<Q", raw)
    if offset != len(buf):
        raise FormatError(f"{len(buf) - offset} trailing bytes in checkpoint")
    return CheckpointData(kinds=kinds, params=params, moments=moments, step=step)


def apply_checkpoint(network: Network, store: ParamStore, data: CheckpointData) -> None:
    """Install checkpoint values into a freshly built network, validating
    the layer structure and every tensor shape."""
    if len(data.kinds) != len(network.layers):
        raise FormatError(f"checkpoint has {len(data.kinds)} layers, network has "
                          f"{len(network.layers)}")
    dtype = network.dtype
    for layer, kind, p in zip(network.layers, data.kinds, data.params):
        if layer.kind != kind:
            raise FormatError(f"layer {layer.index}: checkpoint kind {kind!r} != "
                              f"network kind {layer.kind!r}")
        if layer.has_params:
            weights, bias = p
            if weights.shape != layer.weights.shape:
                raise FormatError(f"layer {layer.index}: weight dims {weights.shape} "
                                  f"!= expected {layer.weights.shape}")
            bias_target = layer.bias.shape
            if tuple(bias.shape[-len(bias_target):]) != bias_target or \
                    int(np.prod(bias.shape)) != int(np.prod(bias_target)):
                raise FormatError(f"layer {layer.index}: bias dims {bias.shape} "
                                  f"!= expected {bias_target}")
            layer.weights = weights.astype(dtype).reshape(layer.weights.shape)
            layer.bias = bias.astype(dtype).reshape(bias_target)
    if len(data.moments) != len(store.entries):
        raise FormatError(f"checkpoint has {len(data.moments)} moment pairs, "
                          f"expected {len(store.entries)}")
    for i, entry in enumerate(store.entries):
        target = store.get(entry).shape
        m, v = data.moments[i]
        if int(np.prod(m.shape)) != int(np.prod(target)):
            raise FormatError(f"moment dims {m.shape} != parameter dims {target}")
        store.m[i] = m.astype(dtype).reshape(target)
        store.v[i] = v.astype(dtype).reshape(target)
    store.t = data.step


def load_into(network: Network, store: ParamStore, path) -> None:
    apply_checkpoint(network, store, load_checkpoint(path))
