"""End-to-end acceptance gate.

Each test checks one release criterion and prints a single PASS/FAIL line
(visible even under pytest capture). Criterion 6, the full-scale MNIST
reproduction, is an optional documented run: it only executes when
SADP_FULL_RUN=1 and the MNIST IDX files are present in SADP_DATA_DIR.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from sadp.agreement import kappa_batch
from sadp.bench import ExperimentConfig, run_experiment, run_scaling_study
from sadp.classifier import Mlp, MlpConfig, macro_f1
from sadp.kernels import (
    IdealSadpKernel,
    LinearKernel,
    StdpParams,
    extract_updates,
    fit_spline_kernel,
    ideal_sadp_kernel,
    synthetic_saturation_trace,
)
from sadp.plasticity import SadpConfig, sadp_update
from sadp.spikes import SpikeTensor, WeightMatrix


def _report(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)
    assert ok, detail


def _kappa_dense_vectorized(x, y, eps=1e-8):
    """Independent dense reference: per-pair confusion counts over time."""
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    T = x.shape[-1]
    n11 = (x * y).sum(-1)
    px = x.sum(-1) / T
    py = y.sum(-1) / T
    p0 = (n11 + ((1 - x) * (1 - y)).sum(-1)) / T
    pe = px * py + (1 - px) * (1 - py)
    return (p0 - pe) / np.maximum(1 - pe, eps)


def test_criterion_1_kappa_oracle_equivalence(capsys):
    """Bit-packed kappa matches a dense reference to <= 1e-12 on 1e5 pairs."""
    rng = np.random.default_rng(2024)
    lengths = (4, 10, 63, 64, 65, 1000)
    per_bucket = 100_000 // len(lengths) + 1
    worst = 0.0
    total = 0
    for T in lengths:
        # bias densities toward the edges as well as the middle
        p_x = rng.uniform(0, 1, (per_bucket, 1))
        p_y = rng.uniform(0, 1, (per_bucket, 1))
        x = (rng.random((per_bucket, T)) < p_x).astype(np.uint8)
        y = (rng.random((per_bucket, T)) < p_y).astype(np.uint8)
        ref = _kappa_dense_vectorized(x, y)
        X = SpikeTensor.from_dense(x[:, None, :])
        Y = SpikeTensor.from_dense(y[:, None, :])
        got = kappa_batch(X, Y)[:, 0, 0]
        worst = max(worst, float(np.max(np.abs(got - ref))))
        total += per_bucket
    ok = worst <= 1e-12 and total >= 100_000
    _report(capsys, 1, ok,
            f"kappa vs dense oracle on {total} pairs, max |diff| = {worst:.2e} "
            f"(tolerance 1e-12)")


def test_criterion_2_scaling(capsys):
    """Update time is near-linear in T; pairwise op count is quadratic in S."""
    report = run_scaling_study()
    slope = report["sadp_time_slope"]
    ops = report["oracle_ops"]
    quadruples = all(b == 4 * a for a, b in zip(ops, ops[1:]))
    ok = 0.8 <= slope <= 1.2 and quadruples
    _report(capsys, 2, ok,
            f"SADP time slope vs T = {slope:.3f} (need [0.8, 1.2]); "
            f"pairwise ops {ops} quadruple exactly = {quadruples}")


def test_criterion_3_weight_bounds(capsys):
    """1e5 randomized updates never leave [-1,1] or cross the |w| >= eps floor."""
    rng = np.random.default_rng(7)
    n_calls = 100_000
    kernels = [
        LinearKernel(eta_pot=0.5, eta_dep=0.5),
        LinearKernel(eta_pot=2.0, eta_dep=0.1),
        IdealSadpKernel(params=StdpParams(A_plus=1.0, A_minus=1.0,
                                          tau_plus=0.2, tau_minus=0.2)),
    ]
    cfgs = [SadpConfig(kernel=k) for k in kernels]
    W = WeightMatrix(rng.uniform(-1, 1, (3, 2)))
    ok = True
    detail = ""
    for i in range(n_calls):
        K = rng.uniform(-1, 1, (2, 3, 2))
        sadp_update(W, K, cfgs[i % len(cfgs)])
        w = W.w
        if not (np.all(w >= -1.0) and np.all(w <= 1.0)
                and np.all(np.abs(w) >= 1e-8)):
            ok = False
            detail = f"violated at call {i}: {w!r}"
            break
    _report(capsys, 3, ok,
            detail or f"{n_calls} randomized updates stayed in [-1,1] with "
                      f"|w| >= 1e-8")


def test_criterion_4_kernel_fidelity(capsys):
    """Spline fits meet their budgets, reproduce a cubic, and the analytical
    kernel is odd and monotone."""
    trace = synthetic_saturation_trace(n_pulses=1000, noise=1e-8, seed=3)
    gp, up, gd, ud = extract_updates(trace)
    k1 = fit_spline_kernel(gp, up, gd, ud, s_pot=0.1, s_dep=0.01)
    budgets_ok = k1.residual_pot <= 0.1 and k1.residual_dep <= 0.01
    k2 = fit_spline_kernel(gp, up, gd, ud, s_pot=0.01, s_dep=0.01)
    budgets_ok = budgets_ok and k2.residual_pot <= 0.01

    xs_p = np.linspace(0.01, 1.0, 300)
    xs_d = np.linspace(-1.0, -0.01, 300)
    cubic = lambda x: 0.25 * x**3 - 0.1 * x**2 + 0.02 * x + 0.005
    kc = fit_spline_kernel(xs_p, cubic(xs_p), xs_d, cubic(xs_d),
                           s_pot=0.1, s_dep=0.1)
    grid = np.linspace(0.01, 1.0, 801)
    cubic_err = float(np.max(np.abs(kc.spline_pot(grid) - cubic(grid))))
    cubic_ok = cubic_err <= 1e-9

    p = StdpParams(A_plus=0.03, A_minus=0.03, tau_plus=0.25, tau_minus=0.25)
    d = np.linspace(-1, 1, 801)
    v = ideal_sadp_kernel(d, p)
    odd_ok = bool(np.allclose(v, -ideal_sadp_kernel(-d, p), atol=1e-15))
    mono_ok = bool(np.all(np.diff(v) >= 0))

    ok = budgets_ok and cubic_ok and odd_ok and mono_ok
    _report(capsys, 4, ok,
            f"spline residuals pot={k1.residual_pot:.3g}/dep={k1.residual_dep:.3g} "
            f"within budgets={budgets_ok}; cubic err={cubic_err:.1e} <= 1e-9="
            f"{cubic_ok}; analytical kernel odd={odd_ok}, monotone={mono_ok}")


# ---------------------------------------------------------------------------
# Desk-scale ordering
# ---------------------------------------------------------------------------


def _mnist_available():
    d = os.environ.get("SADP_DATA_DIR", "")
    if not d:
        return None
    needed = ["train-images-idx3-ubyte", "train-labels-idx1-ubyte",
              "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"]
    if all((Path(d) / n).exists() for n in needed):
        return d
    return None


def _desk_config(**kw):
    data_dir = _mnist_available()
    if data_dir:
        base = dict(dataset="mnist", data_dir=data_dir, n_train=2000, n_test=400)
    else:
        # bundled handwritten-digits fallback: 1797 samples total caps the
        # stratified subsets at 1400/340
        base = dict(dataset="digits", n_train=1400, n_test=340)
    base.update(n_features=64, sadp_epochs=10, classifier_epochs=50, T=10)
    base.update(kw)
    return ExperimentConfig(**base)


def test_criterion_5_desk_scale_ordering(capsys):
    """Accuracy orderings across rules/codings hold on a small real-digit
    benchmark, majority over 3 seeds."""
    seeds = (0, 1, 2)
    results = {"a": [], "b": [], "c": []}
    lines = []
    for seed in seeds:
        lin_rate = run_experiment(_desk_config(
            rule="sadp", kernel="linear", coding="rate", seed=seed))
        heb_rate = run_experiment(_desk_config(
            rule="hebbian", coding="rate", seed=seed))
        lin_ttfs = run_experiment(_desk_config(
            rule="sadp", kernel="linear", coding="ttfs", seed=seed))
        ideal_ttfs = run_experiment(_desk_config(
            rule="sadp", kernel="spline_ideal", coding="ttfs", seed=seed))
        a = lin_rate.validation_accuracy >= 0.55
        b = lin_rate.validation_accuracy - heb_rate.validation_accuracy >= 0.30
        c = ideal_ttfs.validation_accuracy - lin_ttfs.validation_accuracy >= 0.10
        results["a"].append(a)
        results["b"].append(b)
        results["c"].append(c)
        lines.append(
            f"seed {seed}: lin-rate={lin_rate.validation_accuracy:.3f} "
            f"hebb-rate={heb_rate.validation_accuracy:.3f} "
            f"lin-ttfs={lin_ttfs.validation_accuracy:.3f} "
            f"ideal-ttfs={ideal_ttfs.validation_accuracy:.3f}"
        )
    majority = {k: sum(v) >= 2 for k, v in results.items()}
    ok = all(majority.values())
    _report(capsys, 5, ok,
            f"majority over seeds {seeds}: (a) lin-rate>=0.55 {majority['a']}, "
            f"(b) lin-rate - hebbian >= 0.30 {majority['b']}, "
            f"(c) ideal-ttfs - lin-ttfs >= 0.10 {majority['c']} | "
            + "; ".join(lines))


def test_criterion_6_full_scale_optional(capsys):
    """Full-scale MNIST reproduction; opt-in (SADP_FULL_RUN=1), not CI."""
    data_dir = _mnist_available()
    if os.environ.get("SADP_FULL_RUN") != "1" or not data_dir:
        with capsys.disabled():
            print("ACCEPTANCE 6: SKIP - optional full-scale run "
                  "(set SADP_FULL_RUN=1 and SADP_DATA_DIR to the MNIST IDX "
                  "directory; see README)", flush=True)
        pytest.skip("optional full-scale run not requested")
    cfg = ExperimentConfig(
        dataset="mnist", data_dir=data_dir, rule="sadp", kernel="linear",
        coding="rate", n_features=400, n_train=60000, n_test=10000,
        sadp_epochs=10, classifier_epochs=50, T=10, seed=0,
    )
    metrics = run_experiment(cfg)
    ok = abs(metrics.validation_accuracy - 0.9068) <= 0.05
    _report(capsys, 6, ok,
            f"full-scale accuracy {metrics.validation_accuracy:.4f} "
            f"(reference 0.9068 +- 0.05)")


def test_criterion_7_classifier_numerics(capsys):
    """Backprop gradients match finite differences; degenerate macro-F1 is
    the closed-form 2/110."""
    rng = np.random.default_rng(11)
    model = Mlp(MlpConfig(layer_sizes=(6, 9, 5), seed=4))
    X = rng.normal(size=(8, 6))
    y = rng.integers(0, 5, size=8)
    _, gW, gb = model.loss_and_grads(X, y)
    h = 1e-6
    worst = 0.0
    for params, grads in ((model.weights, gW), (model.biases, gb)):
        for p, g in zip(params, grads):
            fp, fg = p.ravel(), g.ravel()
            for idx in rng.choice(fp.size, size=min(25, fp.size), replace=False):
                orig = fp[idx]
                fp[idx] = orig + h
                lp = model.loss_and_grads(X, y)[0]
                fp[idx] = orig - h
                lm = model.loss_and_grads(X, y)[0]
                fp[idx] = orig
                num = (lp - lm) / (2 * h)
                denom = max(abs(num), abs(fg[idx]), 1e-8)
                worst = max(worst, abs(num - fg[idx]) / denom)
    grad_ok = worst <= 1e-4

    confusion = np.zeros((10, 10), dtype=int)
    confusion[:, 0] = 10  # balanced truth, everything predicted class 0
    f1 = macro_f1(confusion)
    f1_ok = abs(f1 - 2 / 110) <= 1e-12

    ok = grad_ok and f1_ok
    _report(capsys, 7, ok,
            f"worst gradient rel-err {worst:.2e} <= 1e-4 = {grad_ok}; "
            f"all-one-class macro-F1 {f1:.6f} == 2/110 = {f1_ok}")


def test_criterion_8_determinism(capsys):
    """Identical seeds give byte-identical metrics (wall-clock excluded)."""
    import json

    cfg = ExperimentConfig(
        dataset="digits", rule="sadp", kernel="linear", coding="rate",
        n_features=24, sadp_epochs=2, classifier_epochs=5,
        n_train=200, n_test=80, T=6, seed=5,
    )
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    dump_a = json.dumps(a.deterministic_fields(), sort_keys=True)
    dump_b = json.dumps(b.deterministic_fields(), sort_keys=True)
    ok = dump_a == dump_b
    _report(capsys, 8, ok,
            "rerun with identical seed is byte-identical on deterministic "
            f"fields = {ok}")
