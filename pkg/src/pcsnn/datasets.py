"""Loaders for MNIST IDX files, N-MNIST AER samples and CSV pixel matrices.

The ``load_*`` / ``parse_*`` functions work on in-memory payloads;
``build_dataset`` does the file I/O and encodes everything into spike times.
"""

from __future__ import annotations

import csv
import gzip
import io
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .encoding import EncodingParams, encode_events, encode_image
from .errors import FormatError, InputError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

NMNIST_WIDTH = 34
NMNIST_HEIGHT = 34

_EVENT_DTYPE = np.dtype(
    [("x", np.int64), ("y", np.int64), ("polarity", np.int64), ("timestamp_us", np.int64)]
)


class Event(NamedTuple):
    x: int
    y: int
    polarity: int
    timestamp_us: int


class Sample(NamedTuple):
    input: np.ndarray
    label: int


def _maybe_gunzip(data: bytes) -> bytes:
    if data[:2] == b"\x1f\x8b":
        return gzip.decompress(data)
    return data


def _read_header(data, magic, n_dims):
    size = 4 * (1 + n_dims)
    if len(data) < size:
        raise FormatError(f"IDX header needs {size} bytes, payload has {len(data)}", offset=len(data))
    found, *dims = struct.unpack(">" + "I" * (1 + n_dims), data[:size])
    if found != magic:
        raise FormatError(f"bad IDX magic 0x{found:08x}, expected 0x{magic:08x}", offset=0)
    return dims, size


def load_idx_images(data: bytes) -> np.ndarray:
    """Decode an IDX image file into a ``(n, rows, cols)`` uint8 array."""
    data = _maybe_gunzip(bytes(data))
    (n, rows, cols), start = _read_header(data, IDX_IMAGES_MAGIC, 3)
    expected = n * rows * cols
    if len(data) - start != expected:
        raise FormatError(
            f"IDX image payload should hold {expected} bytes, found {len(data) - start}",
            offset=start + min(expected, len(data) - start),
        )
    return np.frombuffer(data, dtype=np.uint8, offset=start).reshape(n, rows, cols).copy()


def load_idx_labels(data: bytes) -> np.ndarray:
    data = _maybe_gunzip(bytes(data))
    (n,), start = _read_header(data, IDX_LABELS_MAGIC, 1)
    if len(data) - start != n:
        raise FormatError(
            f"IDX label count {n} does not match payload of {len(data) - start} bytes",
            offset=start + min(n, len(data) - start),
        )
    return np.frombuffer(data, dtype=np.uint8, offset=start).copy()


def dump_idx_images(images) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    return struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols) + images.tobytes()


def dump_idx_labels(labels) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]) + labels.tobytes()


def parse_nmnist(data: bytes) -> np.ndarray:
    """Decode 5-byte AER events into a structured array (x, y, polarity, timestamp_us).

    Byte layout per event: x, y, then polarity in the top bit of byte 2 followed
    by a 23-bit big-endian microsecond timestamp.
    """
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    if raw.size % 5:
        raise FormatError(
            f"N-MNIST payload length {raw.size} is not a multiple of 5", offset=raw.size - raw.size % 5
        )
    raw = raw.reshape(-1, 5).astype(np.int64)
    out = np.empty(raw.shape[0], dtype=_EVENT_DTYPE)
    out["x"] = raw[:, 0]
    out["y"] = raw[:, 1]
    out["polarity"] = raw[:, 2] >> 7
    out["timestamp_us"] = ((raw[:, 2] & 0x7F) << 16) | (raw[:, 3] << 8) | raw[:, 4]
    return out


def load_nmnist_sample(data: bytes) -> list[Event]:
    return [Event(*map(int, row)) for row in parse_nmnist(data)]


def dump_nmnist(events) -> bytes:
    """Inverse of ``parse_nmnist``; accepts Events or the structured array."""
    if isinstance(events, np.ndarray) and events.dtype.names:
        x, y, p, ts = (events[k].astype(np.int64) for k in _EVENT_DTYPE.names)
    else:
        x, y, p, ts = np.array([tuple(e) for e in events], dtype=np.int64).reshape(-1, 4).T
    if ((x < 0) | (x > 255) | (y < 0) | (y > 255)).any():
        raise InputError("event coordinates must fit in one byte")
    if ((p < 0) | (p > 1)).any() or ((ts < 0) | (ts >= 1 << 23)).any():
        raise InputError("polarity must be 0/1 and timestamps must fit in 23 bits")
    raw = np.empty((x.size, 5), dtype=np.uint8)
    raw[:, 0] = x
    raw[:, 1] = y
    raw[:, 2] = (p << 7) | (ts >> 16)
    raw[:, 3] = (ts >> 8) & 0xFF
    raw[:, 4] = ts & 0xFF
    return raw.tobytes()


def load_matrix_csv(text: str, p_max=255) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError("matrix CSV is empty")
    width = len(rows[0])
    values = []
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise FormatError(f"row {i} has {len(row)} cells, expected {width}")
        try:
            values.append([float(c) for c in row])
        except ValueError:
            raise FormatError(f"row {i} contains a non-numeric cell: {row}") from None
    m = np.array(values)
    if np.isnan(m).any() or m.min() < 0 or m.max() > p_max:
        raise InputError(f"matrix values must lie in [0, {p_max}]")
    return m


def dump_matrix_csv(matrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(matrix):
        w.writerow([_fmt_number(v) for v in row])
    return buf.getvalue()


def _fmt_number(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


@dataclass
class Dataset:
    """Encoded samples stored column-wise: ``inputs[i]`` is the spike-time vector of sample i."""

    inputs: np.ndarray
    labels: np.ndarray
    class_count: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 and self.inputs.size == 0:
            self.inputs = self.inputs.reshape(0, 0)
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise InputError("inputs and labels disagree on sample count")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            bad = int(self.labels[(self.labels < 0) | (self.labels >= self.class_count)][0])
            raise InputError(f"label {bad} outside [0, {self.class_count})")

    def __len__(self):
        return self.labels.shape[0]

    def __getitem__(self, i) -> Sample:
        return Sample(self.inputs[i], int(self.labels[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def samples(self) -> list[Sample]:
        return list(self)

    @property
    def input_size(self) -> int:
        return self.inputs.shape[1]

    def subset(self, indices) -> Dataset:
        return Dataset(self.inputs[indices], self.labels[indices], self.class_count, dict(self.metadata))


@dataclass(frozen=True)
class DatasetSource:
    """Where a dataset lives on disk.

    kind "mnist": ``images``/``labels`` are IDX files (optionally gzipped).
    kind "nmnist": ``images`` is a directory with one subdirectory per class
    holding ``.bin`` samples.
    kind "matrix": ``images`` is a manifest CSV of ``path,label`` rows pointing
    at CSV pixel matrices (relative paths resolve against the manifest).
    """

    kind: str
    images: str
    labels: str | None = None
    subset: int | None = None
    seed: int = 0
    class_count: int = 10


def select_subset(n, cap, seed) -> np.ndarray:
    """Sorted, seed-reproducible choice of ``min(cap, n)`` indices out of ``n``."""
    if cap is None or cap >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=cap, replace=False))


def nmnist_files(root) -> tuple[list[Path], np.ndarray]:
    root = Path(root)
    files, labels = [], []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir() and p.name.isdigit()):
        for f in sorted(class_dir.glob("*.bin")):
            files.append(f)
            labels.append(int(class_dir.name))
    return files, np.array(labels, dtype=np.int64)


def read_manifest(path) -> tuple[list[Path], np.ndarray]:
    path = Path(path)
    files, labels = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'path,label'")
            p = Path(row[0].strip())
            files.append(p if p.is_absolute() else path.parent / p)
            labels.append(int(row[1]))
    return files, np.array(labels, dtype=np.int64)


def build_dataset(source: DatasetSource, params: EncodingParams, bin_width_us=1000) -> Dataset:
    meta = {"kind": source.kind, "source": str(source.images), "p_max": params.p_max,
            "t_max": params.t_max, "subset": source.subset, "seed": source.seed}
    if source.kind == "mnist":
        images = load_idx_images(Path(source.images).read_bytes())
        labels = load_idx_labels(Path(source.labels).read_bytes())
        if images.shape[0] != labels.shape[0]:
            raise FormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
        idx = select_subset(images.shape[0], source.subset, source.seed)
        inputs = np.stack([encode_image(images[i], params) for i in idx]) if idx.size else \
            np.zeros((0, images.shape[1] * images.shape[2]), dtype=np.int64)
        return Dataset(inputs, labels[idx], source.class_count, meta)
    if source.kind == "nmnist":
        files, labels = nmnist_files(source.images)
        idx = select_subset(len(files), source.subset, source.seed)
        n_in = 2 * NMNIST_WIDTH * NMNIST_HEIGHT
        inputs = np.zeros((idx.size, n_in), dtype=np.int64)
        for row, i in enumerate(idx):
            events = parse_nmnist(files[i].read_bytes())
            inputs[row] = encode_events(events, NMNIST_WIDTH, NMNIST_HEIGHT, bin_width_us, params.t_max)
        meta["bin_width_us"] = bin_width_us
        return Dataset(inputs, labels[idx], source.class_count, meta)
    if source.kind == "matrix":
        files, labels = read_manifest(source.images)
        idx = select_subset(len(files), source.subset, source.seed)
        rows = [encode_image(load_matrix_csv(files[i].read_text(), params.p_max), params) for i in idx]
        sizes = {r.size for r in rows}
        if len(sizes) > 1:
            raise FormatError(f"matrices in {source.images} have differing sizes {sorted(sizes)}")
        inputs = np.stack(rows) if rows else np.zeros((0, 0), dtype=np.int64)
        return Dataset(inputs, labels[idx], source.class_count, meta)
    raise InputError(f"unknown dataset kind {source.kind!r}")


def default_data_dir() -> Path:
    return Path(os.environ.get("PCSNN_DATA_DIR", "data"))
