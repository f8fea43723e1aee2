"""Evaluation statistics, learning-curve records and figure data export."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import NetworkParams, SimParams, forward
from .errors import FormatError, InputError

EPOCH_CSV_HEADER = ("epoch", "train_acc", "test_acc", "msse", "mean_F", "seconds")


@dataclass
class EpochRecord:
    epoch: int
    train_acc: float
    test_acc: float
    msse: float
    mean_F: float
    seconds: float

    def __post_init__(self):
        for name in ("train_acc", "test_acc"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InputError(f"{name} must lie in [0, 1], got {v}")


def output_times(net: NetworkParams, dataset, sim: SimParams) -> np.ndarray:
    """``(n_samples, C)`` output firing times."""
    C = net.topology.n_classes
    if len(dataset) == 0:
        return np.zeros((0, C), dtype=np.int64)
    return np.stack([forward(net, x, sim).output for x, _ in dataset])


def accuracy(net, dataset, sim, outputs=None) -> float:
    """Fraction of samples whose earliest output neuron matches the label."""
    if len(dataset) == 0:
        warnings.warn("accuracy of an empty dataset is reported as 0", RuntimeWarning, stacklevel=2)
        return 0.0
    outputs = output_times(net, dataset, sim) if outputs is None else outputs
    return float(np.mean(outputs.argmin(axis=1) == dataset.labels))


def msse(sample_errors) -> float:
    """Mean over samples of each sample's summed squared output error."""
    e = np.asarray(sample_errors, dtype=np.float64)
    return float(e.mean()) if e.size else 0.0


def mean_firing_time_matrix(net, dataset, sim, outputs=None) -> np.ndarray:
    """Row c: mean output firing times over samples of class c (NaN for absent classes)."""
    outputs = output_times(net, dataset, sim) if outputs is None else outputs
    C = net.topology.n_classes
    m = np.full((C, C), np.nan)
    for c in range(C):
        rows = outputs[dataset.labels == c]
        if rows.shape[0]:
            m[c] = rows.mean(axis=0)
    return m


@dataclass
class FiringHistogram:
    bin_edges: np.ndarray
    winner_counts: np.ndarray
    non_winner_counts: np.ndarray
    winner_mean: float
    non_winner_mean: float

    def to_json(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}


def firing_time_histogram(net, dataset, sim, bins=32, outputs=None) -> FiringHistogram:
    """Winner = earliest output of each sample, right or wrong; all others are non-winners."""
    outputs = output_times(net, dataset, sim) if outputs is None else outputs
    edges = np.linspace(0, sim.t_max + 1, bins + 1)
    if outputs.shape[0] == 0:
        z = np.zeros(bins, dtype=np.int64)
        return FiringHistogram(edges, z, z.copy(), float("nan"), float("nan"))
    winners = outputs.argmin(axis=1)
    is_winner = np.zeros(outputs.shape, dtype=bool)
    is_winner[np.arange(outputs.shape[0]), winners] = True
    win, rest = outputs[is_winner], outputs[~is_winner]
    return FiringHistogram(
        edges,
        np.histogram(win, edges)[0],
        np.histogram(rest, edges)[0],
        float(win.mean()),
        float(rest.mean()) if rest.size else float("nan"),
    )


def weight_images(net: NetworkParams, layer: int, shape) -> np.ndarray:
    """Incoming weights of each neuron in ``layer``, min-max scaled to uint8 images."""
    if not 1 <= layer <= net.topology.n_weighted:
        raise InputError(f"layer must be in [1, {net.topology.n_weighted}]")
    w = net.weights[layer - 1]
    rows, cols = shape
    if rows * cols != w.shape[1]:
        raise InputError(f"shape {shape} does not hold {w.shape[1]} inputs")
    lo = w.min(axis=1, keepdims=True)
    span = w.max(axis=1, keepdims=True) - lo
    scaled = np.divide(w - lo, span, out=np.zeros_like(w), where=span > 0)
    return np.rint(scaled * 255).astype(np.uint8).reshape(-1, rows, cols)


def encode_pgm(image) -> bytes:
    image = np.asarray(image, dtype=np.uint8)
    rows, cols = image.shape
    return f"P5 {cols} {rows} 255\n".encode() + image.tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    parts = data.split(maxsplit=4)
    if len(parts) < 4 or parts[0] != b"P5":
        raise FormatError("not a binary PGM", offset=0)
    cols, rows, maxval = (int(p) for p in parts[1:4])
    if maxval != 255:
        raise FormatError(f"unsupported PGM maxval {maxval}")
    header_len = len(b" ".join(parts[:4])) + 1
    body = data[header_len:]
    if len(body) != rows * cols:
        raise FormatError(f"PGM body holds {len(body)} bytes, expected {rows * cols}", offset=header_len)
    return np.frombuffer(body, dtype=np.uint8).reshape(rows, cols).copy()


def export_weight_images(net, layer, shape, out_dir, limit=None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for j, img in enumerate(weight_images(net, layer, shape)[:limit]):
        p = out_dir / f"layer{layer}_neuron{j:04d}.pgm"
        p.write_bytes(encode_pgm(img))
        paths.append(p)
    return paths


def format_epoch_csv(records, include_seconds=True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EPOCH_CSV_HEADER)
    for r in records:
        w.writerow([r.epoch, repr(r.train_acc), repr(r.test_acc), repr(r.msse), repr(r.mean_F),
                    f"{r.seconds:.3f}" if include_seconds else ""])
    return buf.getvalue()


def parse_epoch_csv(text: str) -> list[EpochRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != EPOCH_CSV_HEADER:
        raise FormatError(f"epoch CSV must start with header {','.join(EPOCH_CSV_HEADER)}")
    out = []
    for row in rows[1:]:
        if not row:
            continue
        ep, tr, te, ms, F, sec = row
        out.append(EpochRecord(int(ep), float(tr), float(te), float(ms), float(F), float(sec or 0.0)))
    return out


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")
