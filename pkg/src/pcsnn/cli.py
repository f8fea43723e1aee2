"""Command-line driver: ``pcsnn train|eval|encode|inspect``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bp, pc
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, PRESETS, dump_config, load_config, override
from .core import decide
from .datasets import (
    Dataset,
    build_dataset,
    default_data_dir,
    load_idx_images,
    load_matrix_csv,
    parse_nmnist,
    NMNIST_HEIGHT,
    NMNIST_WIDTH,
)
from .encoding import EncodingParams, encode_events, encode_image
from .errors import ConfigError, FormatError, InputError
from .metrics import (
    EpochRecord,
    accuracy,
    export_weight_images,
    firing_time_histogram,
    format_epoch_csv,
    mean_firing_time_matrix,
    output_times,
    parse_epoch_csv,
    write_json,
)

CHECKPOINT_NAME = "checkpoint.pcsn"
CURVE_NAME = "epochs.csv"
SUMMARY_NAME = "summary.json"
CONFIG_NAME = "config.txt"


def load_data(cfg: ExperimentConfig, data_root=None) -> tuple[Dataset, Dataset]:
    data_root = default_data_dir() if data_root is None else Path(data_root)
    train_src, test_src = cfg.sources(data_root)
    for p in (train_src.images, train_src.labels, test_src.images, test_src.labels):
        if p is not None and not Path(p).exists():
            raise FileNotFoundError(f"dataset file not found: {p}")
    train = build_dataset(train_src, cfg.encoding, cfg.bin_width_us)
    test = build_dataset(test_src, cfg.encoding, cfg.bin_width_us)
    for name, ds in (("train", train), ("test", test)):
        if len(ds) and ds.input_size != cfg.layer_sizes[0]:
            raise ConfigError(f"{name} samples have {ds.input_size} inputs but layer_sizes starts "
                              f"with {cfg.layer_sizes[0]}")
    return train, test


def run_train(cfg: ExperimentConfig, out_dir, train: Dataset, test: Dataset, resume=None, log=None) -> dict:
    """Train for ``cfg.epochs`` epochs, writing checkpoint, curve CSV and summary into ``out_dir``.

    ``resume`` is a checkpoint path; training then restarts at the epoch after
    the last row already present in the curve CSV, which reproduces an
    uninterrupted run because order, dropout and learning rate are keyed by
    epoch index.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim, pcc = cfg.sim, cfg.pc_config()
    curve_path = out / CURVE_NAME
    records: list[EpochRecord] = []
    if resume is not None:
        net = load_checkpoint(resume)
        if net.topology != cfg.topology:
            raise ConfigError(f"checkpoint topology {net.topology.layer_sizes} does not match "
                              f"layer_sizes {cfg.layer_sizes}")
        if curve_path.exists():
            records = parse_epoch_csv(curve_path.read_text())
    else:
        net = pc.init_weights(cfg.topology, cfg.init_ranges, cfg.seed)
    (out / CONFIG_NAME).write_text(dump_config(cfg))
    save_checkpoint(net, out / CHECKPOINT_NAME)
    curve_path.write_text(format_epoch_csv(records))

    for epoch in range(len(records), cfg.epochs):
        t0 = time.perf_counter()
        if cfg.learner == "pc":
            net, st = pc.train_epoch(net, train, pcc, sim, epoch, cfg.epochs)
        else:
            net, st = bp.bp_train_epoch(net, train, pcc, sim, epoch, cfg.epochs,
                                        reset_dead_neurons=cfg.reset_dead)
        test_acc = accuracy(pc.eval_network(net, cfg.dropout_rate), test, sim) if len(test) else 0.0
        rec = EpochRecord(epoch + 1, st.train_acc, test_acc, 0.0 if st.n_samples == 0 else st.msse,
                          0.0 if st.n_samples == 0 else st.mean_F, time.perf_counter() - t0)
        records.append(rec)
        save_checkpoint(net, out / CHECKPOINT_NAME)
        curve_path.write_text(format_epoch_csv(records))
        if log:
            log(f"epoch {rec.epoch}/{cfg.epochs} train_acc={rec.train_acc:.4f} test_acc={rec.test_acc:.4f} "
                f"msse={rec.msse:.2f} mean_F={rec.mean_F:.2f} ({rec.seconds:.1f}s)")

    summary = {
        "learner": cfg.learner,
        "seed": cfg.seed,
        "subset_seed": cfg.subset_seed,
        "epochs": cfg.epochs,
        "n_train": len(train),
        "n_test": len(test),
        "final_train_acc": records[-1].train_acc if records else None,
        "final_test_acc": records[-1].test_acc if records else (
            accuracy(pc.eval_network(net, cfg.dropout_rate), test, sim) if len(test) else None),
        "config_sha256": cfg.fingerprint(),
        "config": dump_config(cfg),
    }
    write_json(out / SUMMARY_NAME, summary)
    return {"net": net, "records": records, "summary": summary}


def evaluate(net, dataset: Dataset, cfg: ExperimentConfig, bins=32) -> dict:
    """Test-split statistics of a trained net (dropout weight scaling applied here)."""
    sim = cfg.sim
    net = pc.eval_network(net, cfg.dropout_rate)
    outs = output_times(net, dataset, sim)
    hist = firing_time_histogram(net, dataset, sim, bins, outputs=outs)
    return {
        "n_samples": len(dataset),
        "accuracy": accuracy(net, dataset, sim, outputs=outs),
        "mean_firing_time_matrix": mean_firing_time_matrix(net, dataset, sim, outputs=outs),
        "histogram": hist.to_json(),
        "_outputs": outs,
    }


def per_sample_csv(dataset: Dataset, outs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    C = outs.shape[1] if outs.ndim == 2 else 0
    w.writerow(["index", "label", "predicted"] + [f"t{j}" for j in range(C)])
    for i, (row, y) in enumerate(zip(outs, dataset.labels)):
        w.writerow([i, int(y), decide(row)] + [int(v) for v in row])
    return buf.getvalue()


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else PRESETS[args.preset]
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "learner", None):
        changes["learner"] = args.learner
    if getattr(args, "epochs", None) is not None:
        changes["epochs"] = args.epochs
    if getattr(args, "subset", None):
        parts = [int(p) for p in args.subset.split(",")]
        changes["train_subset"] = parts[0]
        changes["test_subset"] = parts[1] if len(parts) > 1 else cfg.test_subset
    return override(cfg, **changes)


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(args.out_dir or cfg.out_dir)
    resume = None
    if args.resume is not None:
        resume = Path(args.resume) if args.resume else out_dir / CHECKPOINT_NAME
        if not resume.exists():
            raise FileNotFoundError(f"checkpoint not found: {resume}")
    train, test = load_data(cfg, args.data_dir)
    res = run_train(cfg, out_dir, train, test, resume, log=lambda m: print(m, file=sys.stderr))
    print(json.dumps({k: v for k, v in res["summary"].items() if k != "config"}, indent=2))
    return 0


def cmd_eval(args) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise FileNotFoundError(f"checkpoint not found: {ckpt}")
    net = load_checkpoint(ckpt)
    cfg = _config_from_args(args)
    if net.topology != cfg.topology:
        raise ConfigError(f"checkpoint topology {net.topology.layer_sizes} does not match "
                          f"layer_sizes {cfg.layer_sizes}")
    _, test = load_data(cfg, args.data_dir)
    res = evaluate(net, test, cfg, args.bins)
    outs = res.pop("_outputs")
    out_dir = Path(args.out_dir or ckpt.parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "eval.json", res)
    if args.dump_per_sample:
        (out_dir / "per_sample.csv").write_text(per_sample_csv(test, outs))
    print(json.dumps({"accuracy": res["accuracy"], "n_samples": res["n_samples"]}))
    return 0


def encode_file(path, kind=None, index=0, p_max=255.0, t_max=256, bin_width_us=1000) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if kind is None:
        suffix = path.suffix.lower()
        kind = "nmnist" if suffix == ".bin" else "matrix" if suffix in (".csv", ".txt") else "idx"
    if kind == "nmnist":
        return encode_events(parse_nmnist(data), NMNIST_WIDTH, NMNIST_HEIGHT, bin_width_us, t_max)
    params = EncodingParams(p_max, t_max)
    if kind == "matrix":
        return encode_image(load_matrix_csv(data.decode(), p_max), params)
    if kind == "idx":
        images = load_idx_images(data)
        if not 0 <= index < images.shape[0]:
            raise InputError(f"index {index} outside the {images.shape[0]} images in {path}")
        return encode_image(images[index], params)
    raise InputError(f"unknown input kind {kind!r}")


def cmd_encode(args) -> int:
    times = encode_file(args.input, args.kind, args.index, args.p_max, args.t_max, args.bin_width_us)
    text = "".join(f"{int(t)}\n" for t in times)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _default_shape(n_inputs):
    side = int(round(n_inputs ** 0.5))
    if side * side == n_inputs:
        return (side, side)
    if n_inputs == 2 * NMNIST_WIDTH * NMNIST_HEIGHT:
        return (2 * NMNIST_HEIGHT, NMNIST_WIDTH)  # polarity blocks stacked vertically
    return (1, n_inputs)


def cmd_inspect(args) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise FileNotFoundError(f"checkpoint not found: {ckpt}")
    net = load_checkpoint(ckpt)
    stats = {"layer_sizes": list(net.topology.layer_sizes), "layers": []}
    for l, w in enumerate(net.weights, start=1):
        stats["layers"].append({
            "layer": l, "shape": list(w.shape), "mean": float(w.mean()), "std": float(w.std()),
            "min": float(w.min()), "max": float(w.max()), "negative_fraction": float((w < 0).mean()),
        })
    if args.out_dir:
        shape = tuple(int(s) for s in args.shape.split("x")) if args.shape else _default_shape(net.topology.n_inputs)
        paths = export_weight_images(net, 1, shape, args.out_dir, args.limit)
        stats["images_written"] = len(paths)
        write_json(Path(args.out_dir) / "layer_stats.json", stats)
    print(json.dumps(stats, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pcsnn", description="Train and evaluate first-spike IF networks.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--preset", choices=sorted(PRESETS), default="mnist",
                       help="defaults to use when --config is absent")
        p.add_argument("--data-dir", help="dataset root (default: $PCSNN_DATA_DIR or ./data)")
        p.add_argument("--subset", help="cap sample counts: N or TRAIN,TEST")
        p.add_argument("--out-dir")

    p = sub.add_parser("train", help="train a network")
    common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--learner", choices=("pc", "bp"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--resume", nargs="?", const="", default=None, metavar="CHECKPOINT",
                   help="continue from a checkpoint (default: the one in --out-dir)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    common(p)
    p.add_argument("checkpoint")
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--dump-per-sample", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("encode", help="print first-spike times of one sample, one per line")
    p.add_argument("input")
    p.add_argument("--kind", choices=("idx", "nmnist", "matrix"), help="default: guessed from the suffix")
    p.add_argument("--index", type=int, default=0, help="image index inside an IDX file")
    p.add_argument("--p-max", type=float, default=255.0)
    p.add_argument("--t-max", type=int, default=256)
    p.add_argument("--bin-width-us", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("inspect", help="weight statistics and first-layer weight images")
    p.add_argument("checkpoint")
    p.add_argument("--out-dir", help="write one PGM per hidden neuron here")
    p.add_argument("--shape", help="image shape as ROWSxCOLS (default: inferred)")
    p.add_argument("--limit", type=int, help="at most this many images")
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"pcsnn: error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FormatError, InputError) as exc:
        print(f"pcsnn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
