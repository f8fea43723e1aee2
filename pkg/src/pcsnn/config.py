"""Experiment configuration: a line-oriented ``key = value`` format with [sections].

Top-level keys come before the first section header. ``preset`` selects a
dataset row of defaults; every other key overrides one field::

    preset = mnist
    epochs = 20

    [data]
    train_subset = 5000

    [train]
    eta = 0.06, 0.02
    init_ranges = 0:5, 0:10

Blank lines and lines starting with ``#`` or ``;`` are ignored.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .core import SimParams, Topology
from .datasets import DatasetSource
from .encoding import EncodingParams
from .errors import ConfigError, InputError
from .pc import PCConfig

KINDS = ("mnist", "nmnist", "matrix")
LEARNERS = ("pc", "bp")
INPUT_SIZES = {"mnist": 784, "nmnist": 2 * 34 * 34}


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "mnist"
    kind: str = "mnist"
    learner: str = "pc"
    epochs: int = 20
    seed: int = 0
    out_dir: str = "runs/mnist"
    # data
    train_images: str = "mnist/train-images-idx3-ubyte"
    train_labels: str | None = "mnist/train-labels-idx1-ubyte"
    test_images: str = "mnist/t10k-images-idx3-ubyte"
    test_labels: str | None = "mnist/t10k-labels-idx1-ubyte"
    train_subset: int | None = None
    test_subset: int | None = None
    subset_seed: int = 0
    p_max: float = 255.0
    bin_width_us: int = 1000
    # network / simulation
    layer_sizes: tuple[int, ...] = (784, 200, 10)
    t_max: int = 256
    threshold: float = 100.0
    # learning
    sigma: float = 10.0
    alpha: float = 1.0
    eta: tuple[float, float] = (0.06, 0.02)
    gamma: int = 20
    inference_iters: int = 20
    inference_step: float = 1.0
    inference_tol: float = 1e-3
    dropout_rate: float = 0.5
    init_ranges: tuple[tuple[float, float], ...] = ((0.0, 5.0), (0.0, 10.0))
    batch_size: int = 1
    reset_dead: bool = False

    @property
    def topology(self) -> Topology:
        return Topology(self.layer_sizes)

    @property
    def sim(self) -> SimParams:
        return SimParams(self.t_max, self.threshold)

    @property
    def encoding(self) -> EncodingParams:
        return EncodingParams(self.p_max, self.t_max)

    def pc_config(self, seed=None) -> PCConfig:
        return PCConfig(
            sigma=self.sigma, alpha=self.alpha, eta_start=self.eta[0], eta_end=self.eta[1],
            gamma=self.gamma, inference_iters=self.inference_iters, inference_step=self.inference_step,
            inference_tol=self.inference_tol, dropout_rate=self.dropout_rate, init_ranges=self.init_ranges,
            batch_size=self.batch_size, seed=self.seed if seed is None else seed,
        )

    def sources(self, data_root=".") -> tuple[DatasetSource, DatasetSource]:
        """Train and test sources with relative paths resolved against ``data_root``."""
        root = Path(data_root)

        def res(p):
            return None if p is None else str(p if Path(p).is_absolute() else root / p)

        train = DatasetSource(self.kind, res(self.train_images), res(self.train_labels),
                              self.train_subset, self.subset_seed, self.layer_sizes[-1])
        test = DatasetSource(self.kind, res(self.test_images), res(self.test_labels),
                             self.test_subset, self.subset_seed, self.layer_sizes[-1])
        return train, test

    def fingerprint(self) -> str:
        return hashlib.sha256(dump_config(self).encode()).hexdigest()


_MNIST = ExperimentConfig()

PRESETS = {
    "mnist": _MNIST,
    # init ranges are not given for this row; the MNIST ones are reused
    "nmnist": replace(
        _MNIST, preset="nmnist", kind="nmnist", out_dir="runs/nmnist",
        train_images="nmnist/Train", train_labels=None, test_images="nmnist/Test", test_labels=None,
        layer_sizes=(2 * 34 * 34, 500, 10), sigma=5.0, eta=(0.02, 0.02), epochs=30,
    ),
    # generic grayscale matrices default to the face/motorbike row
    "matrix": replace(
        _MNIST, preset="matrix", kind="matrix", out_dir="runs/matrix",
        train_images="matrix/train.csv", train_labels=None, test_images="matrix/test.csv", test_labels=None,
        layer_sizes=(28 * 50, 200, 2), gamma=8, eta=(0.1, 0.1), init_ranges=((0.0, 1.0), (0.0, 5.0)),
    ),
}

# key -> section ("" = top level)
SECTIONS = {
    "preset": "", "learner": "", "epochs": "", "seed": "", "out_dir": "",
    "kind": "data", "train_images": "data", "train_labels": "data", "test_images": "data",
    "test_labels": "data", "train_subset": "data", "test_subset": "data", "subset_seed": "data",
    "p_max": "data", "bin_width_us": "data",
    "layer_sizes": "network",
    "t_max": "sim", "threshold": "sim",
    "sigma": "train", "alpha": "train", "eta": "train", "gamma": "train", "inference_iters": "train",
    "inference_step": "train", "inference_tol": "train", "dropout_rate": "train", "init_ranges": "train",
    "batch_size": "train", "reset_dead": "train",
}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
assert set(SECTIONS) == set(_FIELD_TYPES)


def _opt(conv):
    def parse(s):
        return None if s.lower() in ("", "none") else conv(s)
    return parse


def _int(s):
    v = float(s)
    if not v.is_integer():
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _bool(s):
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _int_list(s):
    return tuple(_int(p) for p in s.split(",") if p.strip())


def _eta(s):
    parts = [float(p) for p in s.split(",")]
    if len(parts) == 1:
        return (parts[0], parts[0])
    if len(parts) != 2:
        raise ValueError("eta takes one rate or 'start, end'")
    return tuple(parts)


def _ranges(s):
    out = []
    for part in s.split(","):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise ValueError(f"range {part.strip()!r} must look like lo:hi")
        out.append((float(lo), float(hi)))
    return tuple(out)


_PARSERS = {
    "preset": str, "learner": str, "kind": str, "out_dir": str,
    "train_images": str, "test_images": str,
    "train_labels": _opt(str), "test_labels": _opt(str),
    "epochs": _int, "seed": _int, "subset_seed": _int, "bin_width_us": _int, "t_max": _int,
    "gamma": _int, "inference_iters": _int, "batch_size": _int,
    "train_subset": _opt(_int), "test_subset": _opt(_int),
    "p_max": float, "threshold": float, "sigma": float, "alpha": float, "inference_step": float,
    "inference_tol": float, "dropout_rate": float,
    "layer_sizes": _int_list, "eta": _eta, "init_ranges": _ranges, "reset_dead": _bool,
}


def parse_config(text: str) -> ExperimentConfig:
    entries = []  # (key, raw value, lineno, line)
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError("unterminated section header", line, lineno)
            section = s[1:-1].strip()
            if section not in set(SECTIONS.values()) - {""}:
                raise ConfigError(f"unknown section [{section}]", line, lineno)
            continue
        key, sep, value = s.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError("expected 'key = value'", line, lineno)
        if key not in SECTIONS:
            raise ConfigError(f"unknown key {key!r}", line, lineno)
        if SECTIONS[key] != section:
            where = f"[{SECTIONS[key]}]" if SECTIONS[key] else "the top level"
            raise ConfigError(f"key {key!r} belongs in {where}", line, lineno)
        if any(k == key for k, *_ in entries):
            raise ConfigError(f"duplicate key {key!r}", line, lineno)
        entries.append((key, value, lineno, line))

    base = PRESETS["mnist"]
    for key, value, lineno, line in entries:
        if key == "preset":
            if value not in PRESETS:
                raise ConfigError(f"unknown preset {value!r}; choose from {', '.join(PRESETS)}", line, lineno)
            base = PRESETS[value]
    values = {}
    for key, value, lineno, line in entries:
        if key == "preset":
            continue
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r} ({exc})", line, lineno) from None
        _check_field(key, values[key], line, lineno)
    cfg = replace(base, **values)
    lines = {k: (ln, line) for k, _, ln, line in entries}
    validate(cfg, lines)
    return cfg


def _check_field(key, v, line=None, lineno=None):
    def fail(msg):
        raise ConfigError(msg, line, lineno)

    if key == "learner" and v not in LEARNERS:
        fail(f"learner must be one of {', '.join(LEARNERS)}")
    if key == "kind" and v not in KINDS:
        fail(f"kind must be one of {', '.join(KINDS)}")
    if key in ("epochs", "subset_seed", "seed") and v < 0:
        fail(f"{key} must be >= 0")
    if key in ("train_subset", "test_subset") and v is not None and v < 0:
        fail(f"{key} must be >= 0")
    if key in ("bin_width_us", "t_max", "gamma", "batch_size") and v < 1:
        fail(f"{key} must be >= 1")
    if key in ("p_max", "threshold", "sigma", "alpha", "inference_step") and not v > 0:
        fail(f"{key} must be positive")
    if key == "inference_iters" and v < 0:
        fail("inference_iters must be >= 0")
    if key == "inference_tol" and v < 0:
        fail("inference_tol must be >= 0")
    if key == "dropout_rate" and not 0 <= v < 1:
        fail("dropout_rate must lie in [0, 1)")
    if key == "eta" and min(v) < 0:
        fail("learning rates must be non-negative")
    if key == "init_ranges" and any(lo > hi for lo, hi in v):
        fail("init ranges need lo <= hi")
    if key == "layer_sizes" and (len(v) < 2 or min(v) < 1):
        fail("layer_sizes needs at least two positive entries")


def validate(cfg: ExperimentConfig, lines=None) -> None:
    """Cross-field checks; errors point at the most relevant source line when known."""
    lines = lines or {}

    def fail(msg, *keys):
        for k in keys:
            if k in lines:
                raise ConfigError(msg, lines[k][1], lines[k][0])
        raise ConfigError(msg)

    for f in fields(cfg):
        if f.name != "preset":
            try:
                _check_field(f.name, getattr(cfg, f.name))
            except ConfigError as exc:
                fail(str(exc), f.name)
    if cfg.preset not in PRESETS:
        fail(f"unknown preset {cfg.preset!r}", "preset")
    if len(cfg.init_ranges) != len(cfg.layer_sizes) - 1:
        fail(f"init_ranges has {len(cfg.init_ranges)} entries for {len(cfg.layer_sizes) - 1} weighted layers",
             "init_ranges", "layer_sizes")
    need = INPUT_SIZES.get(cfg.kind)
    if need is not None and cfg.layer_sizes[0] != need:
        fail(f"{cfg.kind} inputs have {need} channels but layer_sizes starts with {cfg.layer_sizes[0]}",
             "layer_sizes", "kind", "preset")
    if cfg.kind == "mnist" and (cfg.train_labels is None or cfg.test_labels is None):
        fail("mnist data needs train_labels and test_labels", "train_labels", "test_labels", "kind")
    if cfg.kind == "mnist" and cfg.layer_sizes[-1] != 10 or cfg.kind == "nmnist" and cfg.layer_sizes[-1] != 10:
        fail(f"{cfg.kind} has 10 classes but the output layer has {cfg.layer_sizes[-1]} neurons",
             "layer_sizes", "kind", "preset")
    try:
        cfg.pc_config()
    except InputError as exc:
        fail(str(exc))


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple) and v and isinstance(v[0], tuple):
        return ", ".join(f"{lo!r}:{hi!r}" for lo, hi in v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def dump_config(cfg: ExperimentConfig) -> str:
    """Every field written out explicitly, so the text alone reproduces ``cfg``."""
    by_section: dict[str, list[str]] = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "eta":
            v = tuple(float(x) for x in v)
        by_section.setdefault(SECTIONS[f.name], []).append(f"{f.name} = {_fmt(v)}")
    out = by_section.pop("")
    for section, rows in by_section.items():
        out += ["", f"[{section}]"] + rows
    return "\n".join(out) + "\n"


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def override(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    """``replace`` plus validation, used for command-line flags."""
    new = dataclasses.replace(cfg, **{k: v for k, v in changes.items() if v is not None})
    validate(new)
    return new
