"""Binary weight checkpoints.

Layout, all little-endian: b"PCSN", u32 version, u32 layer count, one u32
size per layer, then each weight matrix as float64 in row-major (post, pre)
order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import NetworkParams, Topology
from .errors import FormatError

MAGIC = b"PCSN"
VERSION = 1


def encode_checkpoint(net: NetworkParams) -> bytes:
    sizes = net.topology.layer_sizes
    head = MAGIC + struct.pack(f"<II{len(sizes)}I", VERSION, len(sizes), *sizes)
    return head + b"".join(np.ascontiguousarray(w, dtype="<f8").tobytes() for w in net.weights)


def decode_checkpoint(data: bytes) -> NetworkParams:
    data = bytes(data)
    if len(data) < 12:
        raise FormatError("checkpoint shorter than its fixed header", offset=len(data))
    if data[:4] != MAGIC:
        raise FormatError(f"bad checkpoint magic {data[:4]!r}", offset=0)
    version, n_layers = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    if n_layers < 2:
        raise FormatError(f"checkpoint declares {n_layers} layers, need at least 2", offset=8)
    pos = 12 + 4 * n_layers
    if len(data) < pos:
        raise FormatError("checkpoint truncated inside the layer sizes", offset=len(data))
    sizes = struct.unpack_from(f"<{n_layers}I", data, 12)
    topo = Topology(sizes)
    expected = pos + 8 * sum(a * b for a, b in topo.weight_shapes())
    if len(data) != expected:
        raise FormatError(f"checkpoint holds {len(data)} bytes, layout needs {expected}",
                          offset=min(len(data), expected))
    weights = []
    for shape in topo.weight_shapes():
        n = shape[0] * shape[1]
        weights.append(np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(shape).astype(np.float64))
        pos += 8 * n
    return NetworkParams(topo, weights)


def save_checkpoint(net: NetworkParams, path) -> None:
    Path(path).write_bytes(encode_checkpoint(net))


def load_checkpoint(path) -> NetworkParams:
    return decode_checkpoint(Path(path).read_bytes())
