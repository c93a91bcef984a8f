"""Downstream feedforward classifier on accumulated spike-count features.

Plain numpy MLP (ReLU hidden layers, softmax output, categorical
cross-entropy) trained with Adam. Written from scratch so the gradients can
be checked against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError, ParseError, ShapeError, UnsupportedVersionError
from .spikes import SpikeTensor

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    layer_sizes: tuple = (64, 256, 10)
    epochs: int = 50
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 128
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise DomainError("need at least input and output layers")


def extract_features(S: SpikeTensor) -> np.ndarray:
    """(B, N) per-neuron spike counts summed over time; entries in [0, T]."""
    return S.counts().astype(np.float64)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class Mlp:
    """Feedforward net; parameters as lists of (W, b) per layer."""

    def __init__(self, cfg: MlpConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        sizes = cfg.layer_sizes
        self.weights = []
        self.biases = []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            scale = np.sqrt(2.0 / n_in)
            self.weights.append(rng.normal(0.0, scale, size=(n_in, n_out)))
            self.biases.append(np.zeros(n_out))

    def forward(self, X: np.ndarray):
        """Returns (probabilities, per-layer activations for backprop)."""
        acts = [X]
        h = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return softmax(acts[-1]), acts

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.forward(np.asarray(X, dtype=np.float64))[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        """Mean cross-entropy and gradients w.r.t. every W and b."""
        n = X.shape[0]
        probs, acts = self.forward(X)
        eps = 1e-12
        loss = -np.mean(np.log(probs[np.arange(n), y] + eps))
        delta = probs.copy()
        delta[np.arange(n), y] -= 1.0
        delta /= n
        gW = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            gW[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        return loss, gW, gb


@dataclass
class TrainedMlp:
    model: Mlp
    loss_curve: list = field(default_factory=list)
    val_accuracy_curve: list = field(default_factory=list)


def train_mlp(features: np.ndarray, labels: np.ndarray, cfg: MlpConfig) -> TrainedMlp:
    """Adam training with a seed-fixed validation split and accuracy trace."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"features {X.shape} / labels {y.shape} mismatch")
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite features")

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(X.shape[0])
    n_val = int(round(cfg.val_fraction * X.shape[0]))
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    X_tr, y_tr = X[tr_idx], y[tr_idx]
    X_val, y_val = X[val_idx], y[val_idx]

    model = Mlp(cfg)
    params = model.weights + model.biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    step = 0
    out = TrainedMlp(model=model)

    for epoch in range(cfg.epochs):
        order = rng.permutation(X_tr.shape[0])
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, X_tr.shape[0], cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, gW, gb = model.loss_and_grads(X_tr[idx], y_tr[idx])
            if not np.isfinite(loss):
                raise NumericError(f"NaN loss at epoch {epoch}")
            epoch_loss += loss
            n_batches += 1
            step += 1
            grads = gW + gb
            for i, (p, g) in enumerate(zip(params, grads)):
                m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g
                v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g
                m_hat = m[i] / (1 - cfg.beta1**step)
                v_hat = v[i] / (1 - cfg.beta2**step)
                p -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        out.loss_curve.append(epoch_loss / max(n_batches, 1))
        if X_val.shape[0]:
            val_acc = float(np.mean(model.predict(X_val) == y_val))
        else:
            val_acc = float("nan")
        out.val_accuracy_curve.append(val_acc)
    return out


def evaluate(model: Mlp, features: np.ndarray, labels: np.ndarray) -> dict:
    """Accuracy, macro-averaged F1, and the confusion matrix."""
    y = np.asarray(labels, dtype=np.int64)
    pred = model.predict(np.asarray(features, dtype=np.float64))
    n_classes = model.cfg.layer_sizes[-1]
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)
    return {
        "accuracy": float(np.mean(pred == y)),
        "macro_f1": macro_f1(confusion),
        "confusion": confusion,
    }


def macro_f1(confusion: np.ndarray) -> float:
    """Unweighted class mean of 2PR/(P+R); per-class F1 is 0 when P+R = 0."""
    tp = np.diag(confusion).astype(np.float64)
    pred_pos = confusion.sum(axis=0).astype(np.float64)
    true_pos = confusion.sum(axis=1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_pos > 0, tp / pred_pos, 0.0)
        recall = np.where(true_pos > 0, tp / true_pos, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / pr, 0.0)
    return float(f1.mean())


def save_checkpoint(trained: TrainedMlp, path) -> None:
    model = trained.model
    doc = {
        "version": CHECKPOINT_VERSION,
        "layer_sizes": list(model.cfg.layer_sizes),
        "seed": model.cfg.seed,
        "epoch": len(trained.loss_curve),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "loss_curve": trained.loss_curve,
        "val_accuracy_curve": trained.val_accuracy_curve,
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_checkpoint(path) -> TrainedMlp:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed checkpoint at line {e.lineno}: {e.msg}") from None
    if doc.get("version") != CHECKPOINT_VERSION:
        raise UnsupportedVersionError(
            f"checkpoint version {doc.get('version')} unsupported"
        )
    cfg = MlpConfig(layer_sizes=tuple(doc["layer_sizes"]), seed=doc["seed"])
    model = Mlp(cfg)
    model.weights = [np.array(w) for w in doc["weights"]]
    model.biases = [np.array(b) for b in doc["biases"]]
    return TrainedMlp(
        model=model,
        loss_curve=doc["loss_curve"],
        val_accuracy_curve=doc["val_accuracy_curve"],
    )
