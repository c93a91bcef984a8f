"""Command-line interface for the plasticity lab.

Subcommands: encode, fit-kernel, train, evaluate, grid, scaling, plot-data.
Exit codes are per error class (see EXIT_CODES); 0 on success.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bench, classifier, datasets
from .encoding import EncoderConfig, encode_batch
from .errors import (
    DataError,
    DomainError,
    FitError,
    NumericError,
    ParseError,
    SadpError,
    ShapeError,
    StageError,
    UnsupportedVersionError,
)
from .kernels import DeviceTrace, export_kernel, extract_updates, fit_spline_kernel

EXIT_CODES = {
    ShapeError: 2,
    DomainError: 3,
    NumericError: 4,
    UnsupportedVersionError: 6,
    ParseError: 5,
    DataError: 7,
    FitError: 8,
    StageError: 9,
    SadpError: 10,
}

PROFILES = {
    "desk": {"n_train": 1000, "n_test": 200, "n_features": 64},
    "full": {"n_train": 60000, "n_test": 10000, "n_features": 400},
}


def _exit_code(exc: Exception) -> int:
    for klass, code in EXIT_CODES.items():
        if isinstance(exc, klass):
            return code
    return 1


def _load_config(path, profile=None, seed=None) -> bench.ExperimentConfig:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"config {path} line {e.lineno}: {e.msg}") from None
    if profile:
        for k, v in PROFILES[profile].items():
            doc.setdefault(k, v)
    if seed is not None:
        doc["seed"] = seed
    if "classifier_hidden" in doc:
        doc["classifier_hidden"] = tuple(doc["classifier_hidden"])
    return bench.ExperimentConfig(**doc)


def cmd_encode(args) -> int:
    if args.dataset == "digits":
        train, test = datasets.digits_fallback(seed=args.seed)
        ds = train if args.split == "train" else test
    else:
        ds = datasets.load_idx(args.images, args.labels, split=args.split)
    if args.n:
        ds = datasets.subset(ds, args.n, seed=args.seed)
    cfg = EncoderConfig(scheme=args.scheme, T=args.T, seed=args.seed)
    tensor = encode_batch(ds.images, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.dataset}_{args.split}_{args.scheme}.spk"
    tensor.dump(path)
    print(f"wrote {path} (B={tensor.B}, N={tensor.N}, T={tensor.T})")
    return 0


def cmd_fit_kernel(args) -> int:
    trace = DeviceTrace.from_csv(args.device_csv)
    updates = extract_updates(trace)
    kernel = fit_spline_kernel(*updates, s_pot=args.s_pot, s_dep=args.s_dep)
    export_kernel(kernel, args.out)
    print(
        f"wrote {args.out} (residuals: potentiation {kernel.residual_pot:.3g}, "
        f"depression {kernel.residual_dep:.3g})"
    )
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args.config, profile=args.profile, seed=args.seed)
    metrics = bench.run_experiment(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    record = {
        "config_hash": cfg.config_hash(),
        "config": asdict(cfg),
        "label": cfg.label(),
        "metrics": metrics.to_dict(),
    }
    path = out / f"run_{cfg.config_hash()}.json"
    with open(path, "w") as f:
        json.dump(record, f, indent=2, default=list)
    print(f"{cfg.label()}: accuracy={metrics.validation_accuracy:.4f} "
          f"macro_f1={metrics.macro_f1:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_evaluate(args) -> int:
    trained = classifier.load_checkpoint(args.checkpoint)
    features = np.load(args.features)
    labels = np.load(args.labels)
    metrics = classifier.evaluate(trained.model, features, labels)
    print(json.dumps(
        {"accuracy": metrics["accuracy"], "macro_f1": metrics["macro_f1"]},
        indent=2,
    ))
    return 0


def cmd_grid(args) -> int:
    with open(args.config) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"config {args.config} line {e.lineno}: {e.msg}") from None
    defaults = doc.get("defaults", {})
    if args.profile:
        for k, v in PROFILES[args.profile].items():
            defaults.setdefault(k, v)
    configs = []
    for entry in doc["runs"]:
        merged = {**defaults, **entry}
        if args.seed is not None:
            merged["seed"] = args.seed
        if "classifier_hidden" in merged:
            merged["classifier_hidden"] = tuple(merged["classifier_hidden"])
        configs.append(bench.ExperimentConfig(**merged))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = bench.run_grid(configs, results_path=out / "results.jsonl")
    for r in rows:
        if r["metrics"]:
            print(f"{r['label']}: accuracy={r['metrics']['validation_accuracy']:.4f} "
                  f"macro_f1={r['metrics']['macro_f1']:.4f}")
        else:
            print(f"{r['label']}: FAILED ({r['error']})")
    return 0


def cmd_scaling(args) -> int:
    report = bench.run_scaling_study(
        T_values=tuple(args.T),
        S_values=tuple(args.S),
        trials=args.trials,
        seed=args.seed or 0,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "scaling.json"
    with open(path, "w") as f:
        json.dump(report, f, indent=2)
    print(f"SADP time slope vs T: {report['sadp_time_slope']:.3f}")
    print(f"pairwise op-count slope vs S: {report['oracle_ops_slope']:.3f}")
    print(f"wrote {path}")
    return 0


def cmd_plot_data(args) -> int:
    rows = []
    with open(args.results) as f:
        for line in f:
            if line.strip():
                rows.append(json.loads(line))
    paths = bench.emit_plot_data(rows, args.out)
    for name, path in paths.items():
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sadp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default="out")

    enc = sub.add_parser("encode", help="encode a dataset into a spike dump")
    enc.add_argument("--dataset", default="digits")
    enc.add_argument("--images", help="IDX image file (mnist/fmnist)")
    enc.add_argument("--labels", help="IDX label file (mnist/fmnist)")
    enc.add_argument("--split", default="train", choices=("train", "test"))
    enc.add_argument("--scheme", default="rate", choices=("rate", "ttfs"))
    enc.add_argument("--T", type=int, default=10)
    enc.add_argument("--n", type=int, default=0, help="optional subset size")
    common(enc)
    enc.set_defaults(func=cmd_encode, seed=0)

    fit = sub.add_parser("fit-kernel", help="device CSV -> spline kernel file")
    fit.add_argument("device_csv")
    fit.add_argument("--s-pot", type=float, default=0.1)
    fit.add_argument("--s-dep", type=float, default=0.01)
    fit.add_argument("--out", default="kernel.json")
    fit.set_defaults(func=cmd_fit_kernel)

    tr = sub.add_parser("train", help="run one experiment from a config file")
    tr.add_argument("config")
    tr.add_argument("--profile", choices=("desk", "full"), default=None)
    common(tr)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("evaluate", help="evaluate a saved classifier")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--features", required=True, help=".npy feature matrix")
    ev.add_argument("--labels", required=True, help=".npy label vector")
    ev.set_defaults(func=cmd_evaluate)

    gd = sub.add_parser("grid", help="run a grid of experiments")
    gd.add_argument("config", help="JSON with 'defaults' and 'runs' entries")
    gd.add_argument("--profile", choices=("desk", "full"), default=None)
    common(gd)
    gd.set_defaults(func=cmd_grid)

    sc = sub.add_parser("scaling", help="runtime scaling study (update cost vs T and S)")
    sc.add_argument("--T", type=int, nargs="+", default=[256, 512, 1024, 2048])
    sc.add_argument("--S", type=int, nargs="+", default=[8, 16, 32, 64])
    sc.add_argument("--trials", type=int, default=3)
    common(sc)
    sc.set_defaults(func=cmd_scaling)

    pl = sub.add_parser("plot-data", help="emit CSV series from results.jsonl")
    pl.add_argument("results")
    pl.add_argument("--out", default="plots")
    pl.set_defaults(func=cmd_plot_data)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SadpError as e:
        print(f"error: {e}", file=sys.stderr)
        return _exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
