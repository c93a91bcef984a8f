"""Experiment runner: single runs, grids, the scaling study, and plot data.

Results are appended as one JSON record per line, keyed by a config hash so
reruns of an identical config reuse the cached record.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import datasets
from .agreement import kappa_batch
from .errors import DomainError, StageError
from .kernels import StdpParams
from .layers import HebbianLayer, MlpClassifier, SadpLayer, StdpBaselineLayer
from .plasticity import (
    OpCounter,
    sadp_linear_update_packed,
    stdp_pairwise_oracle,
)
from .kernels import LinearKernel
from .spikes import SpikeTensor, init_rademacher

RULES = ("sadp", "stdp", "hebbian")
KERNELS = ("linear", "spline_device", "spline_ideal")
CODINGS = ("rate", "ttfs")


@dataclass
class ExperimentConfig:
    dataset: str = "mnist"
    rule: str = "sadp"
    kernel: str = "linear"          # SADP only
    kernel_file: str = ""           # required when kernel == "spline_device"
    coding: str = "rate"
    n_features: int = 64
    sadp_epochs: int = 10
    batch: int = 64
    classifier_epochs: int = 50
    classifier_hidden: tuple = (256,)
    seed: int = 0
    n_train: int = 1000
    n_test: int = 200
    T: int = 10
    lif_decay: float = 0.9
    lif_theta: float = 0.5
    sadp_eta: float = 50.0
    data_dir: str = ""              # directory holding the IDX files

    def __post_init__(self):
        if self.rule not in RULES:
            raise DomainError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.coding not in CODINGS:
            raise DomainError(f"coding must be one of {CODINGS}")
        if self.rule == "sadp" and self.kernel not in KERNELS:
            raise DomainError(f"kernel must be one of {KERNELS}")
        if self.rule != "sadp" and self.kernel not in ("", "linear"):
            raise DomainError("kernel is only valid for rule='sadp'")
        if self.kernel == "spline_device" and not self.kernel_file:
            raise DomainError("spline_device requires kernel_file")

    def config_hash(self) -> str:
        body = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def label(self) -> str:
        kern = f"-{self.kernel}" if self.rule == "sadp" else ""
        return f"{self.dataset}/{self.rule}{kern}/{self.coding}/{self.n_features}"


@dataclass
class RunMetrics:
    validation_accuracy: float
    macro_f1: float
    runtime_per_epoch_seconds: float
    total_runtime_seconds: float
    weight_norm_per_epoch: list = field(default_factory=list)
    accuracy_curve: list = field(default_factory=list)

    WALL_CLOCK_FIELDS = ("runtime_per_epoch_seconds", "total_runtime_seconds")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunMetrics":
        return cls(**d)

    def deterministic_fields(self) -> dict:
        return {
            k: v for k, v in self.to_dict().items()
            if k not in self.WALL_CLOCK_FIELDS
        }


def _load_dataset(cfg: ExperimentConfig):
    """Resolve the train/test pair for a config.

    mnist/fmnist expect the four IDX files in cfg.data_dir; the 'digits'
    dataset is the bundled offline fallback.
    """
    if cfg.dataset == "digits":
        return datasets.digits_fallback(seed=cfg.seed)
    names = {
        "mnist": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                  "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        "fmnist": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                   "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    }
    if cfg.dataset not in names:
        raise DomainError(f"unknown dataset {cfg.dataset!r}")
    d = Path(cfg.data_dir)
    ti, tl, vi, vl = (d / n for n in names[cfg.dataset])
    train = datasets.load_idx(ti, tl, name=cfg.dataset, split="train")
    test = datasets.load_idx(vi, vl, name=cfg.dataset, split="test")
    return train, test


def _build_layer(cfg: ExperimentConfig):
    common = dict(
        n_features=cfg.n_features,
        coding=cfg.coding,
        T=cfg.T,
        epochs=cfg.sadp_epochs,
        batch_size=cfg.batch,
        decay=cfg.lif_decay,
        theta=cfg.lif_theta,
        seed=cfg.seed,
    )
    if cfg.rule == "sadp":
        kernel = cfg.kernel
        if kernel == "spline_device":
            from .kernels import import_kernel

            kernel = import_kernel(cfg.kernel_file)
        return SadpLayer(kernel=kernel, eta=cfg.sadp_eta, **common)
    if cfg.rule == "stdp":
        return StdpBaselineLayer(**common)
    return HebbianLayer(**common)


def run_experiment(cfg: ExperimentConfig, data=None) -> RunMetrics:
    """Full pipeline: encode -> plasticity epochs -> features -> classifier.

    `data` may inject a preloaded (train, test) ImageDataset pair (used by
    the grid runner to avoid reloading).
    """
    t_start = time.perf_counter()

    def stage(tag, fn):
        try:
            return fn()
        except Exception as e:
            raise StageError(tag, e) from e

    if data is None:
        data = stage("load-data", lambda: _load_dataset(cfg))
    train_full, test_full = data
    train, test = stage(
        "subset",
        lambda: datasets.train_test_subsets(
            train_full, test_full, cfg.n_train, cfg.n_test, seed=cfg.seed
        ),
    )
    layer = _build_layer(cfg)
    stage("plasticity", lambda: layer.fit(train.images))
    feats_train = stage("features", lambda: layer.transform(train.images))
    feats_test = stage("features", lambda: layer.transform(test.images))
    model = MlpClassifier(
        hidden=tuple(cfg.classifier_hidden),
        epochs=cfg.classifier_epochs,
        feature_scale=float(cfg.T),
        seed=cfg.seed,
    )
    stage("classifier", lambda: model.fit(feats_train, train.labels))
    metrics = stage("evaluate", lambda: model.score_metrics(feats_test, test.labels))

    return RunMetrics(
        validation_accuracy=metrics["accuracy"],
        macro_f1=metrics["macro_f1"],
        runtime_per_epoch_seconds=float(np.mean(layer.epoch_seconds_)),
        total_runtime_seconds=time.perf_counter() - t_start,
        weight_norm_per_epoch=list(layer.weight_norms_),
        accuracy_curve=list(model.trained_.val_accuracy_curve),
    )


def run_grid(configs, results_path=None, data_cache=None) -> list:
    """Run each config, tolerate per-run failures, return sorted rows.

    With results_path, records are appended as JSON lines and identical
    configs (by hash) are served from cache.
    """
    configs = list(configs)
    if not configs:
        raise DomainError("empty grid")
    cache = {}
    if results_path and Path(results_path).exists():
        with open(results_path) as f:
            for line in f:
                rec = json.loads(line)
                cache[rec["config_hash"]] = rec
    rows = []
    for cfg in configs:
        h = cfg.config_hash()
        if h in cache:
            rows.append(cache[h])
            continue
        rec = {"config_hash": h, "config": asdict(cfg), "label": cfg.label()}
        try:
            data = data_cache.get(cfg.dataset) if data_cache else None
            metrics = run_experiment(cfg, data=data)
            rec["metrics"] = metrics.to_dict()
            rec["error"] = None
        except Exception as e:
            rec["metrics"] = None
            rec["error"] = str(e)
        rows.append(rec)
        if results_path:
            with open(results_path, "a") as f:
                f.write(json.dumps(rec, default=list) + "\n")
    rows.sort(
        key=lambda r: (
            r["config"]["dataset"],
            r["config"]["rule"],
            r["config"]["kernel"],
            r["config"]["coding"],
            r["config"]["n_features"],
        )
    )
    return rows


def run_scaling_study(
    T_values=(256, 512, 1024, 2048),
    S_values=(8, 16, 32, 64),
    N_pre: int = 512,
    N_post: int = 128,
    trials: int = 7,
    B: int = 32,
    seed: int = 0,
) -> dict:
    """Empirical check of linear-in-T SADP cost vs quadratic-in-S pairwise cost.

    Returns fitted log-log slopes plus the raw measurements.
    """
    if list(T_values) != sorted(T_values) or list(S_values) != sorted(S_values):
        raise DomainError("T_values and S_values must be ascending")
    rng = np.random.default_rng(seed)
    kernel = LinearKernel()

    sadp_times = []
    for T in T_values:
        dense_x = (rng.random((B, N_pre, T)) < 0.5).astype(np.uint8)
        dense_s = (rng.random((B, N_post, T)) < 0.5).astype(np.uint8)
        X = SpikeTensor.from_dense(dense_x)
        S = SpikeTensor.from_dense(dense_s)
        W = init_rademacher(N_pre, N_post, seed=seed)
        sadp_linear_update_packed(W, X, S, kernel)   # jit warm-up
        best = np.inf
        for _ in range(trials):
            W = init_rademacher(N_pre, N_post, seed=seed)
            t0 = time.perf_counter()
            sadp_linear_update_packed(W, X, S, kernel)
            best = min(best, time.perf_counter() - t0)
        sadp_times.append(best)
    sadp_slope = float(
        np.polyfit(np.log(np.array(T_values, float)), np.log(sadp_times), 1)[0]
    )

    oracle_ops = []
    oracle_times = []
    params = StdpParams()
    for S_count in S_values:
        pre_times = np.sort(rng.choice(10 * S_count, size=S_count, replace=False))
        post_times = np.sort(rng.choice(10 * S_count, size=S_count, replace=False)) + 0.5
        counter = OpCounter()
        t0 = time.perf_counter()
        stdp_pairwise_oracle(pre_times, post_times, params, counter)
        oracle_times.append(time.perf_counter() - t0)
        oracle_ops.append(counter.ops)
    ops_slope = float(
        np.polyfit(np.log(np.array(S_values, float)), np.log(oracle_ops), 1)[0]
    )

    return {
        "T_values": list(T_values),
        "sadp_seconds": sadp_times,
        "sadp_time_slope": sadp_slope,
        "S_values": list(S_values),
        "oracle_ops": oracle_ops,
        "oracle_seconds": oracle_times,
        "oracle_ops_slope": ops_slope,
    }


def emit_plot_data(rows, out_dir) -> dict:
    """Write per-panel CSV series: weight norms and accuracy curves."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "weight_norm": out_dir / "weight_norm.csv",
        "accuracy": out_dir / "accuracy.csv",
    }
    with open(paths["weight_norm"], "w") as f:
        f.write("epoch,value,config\n")
        for r in rows:
            if not r.get("metrics"):
                continue
            for i, v in enumerate(r["metrics"]["weight_norm_per_epoch"], start=1):
                f.write(f"{i},{v!r},{r['label']}\n")
    with open(paths["accuracy"], "w") as f:
        f.write("epoch,value,config\n")
        for r in rows:
            if not r.get("metrics"):
                continue
            for i, v in enumerate(r["metrics"]["accuracy_curve"], start=1):
                f.write(f"{i},{v!r},{r['label']}\n")
    return {k: str(v) for k, v in paths.items()}
