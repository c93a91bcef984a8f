"""Sklearn-style feature-learning layers.

Each layer is a transformer over flat image batches: fit() runs unsupervised
plasticity epochs (encode -> LIF forward -> weight update), transform()
returns per-neuron spike-count features. Composable with sklearn pipelines
via BaseEstimator/TransformerMixin.
"""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from . import classifier as clf
from .encoding import EncoderConfig, encode_batch
from .errors import DomainError, ShapeError
from .kernels import IdealSadpKernel, LinearKernel, StdpParams
from .lif import LifConfig, forward
from .plasticity import (
    HebbianConfig,
    SadpConfig,
    StdpBaselineConfig,
    hebbian_update,
    sadp_update,
    stdp_postpre_update,
)
from .agreement import kappa_batch
from .spikes import SpikeTensor, init_rademacher, init_uniform


def _check_images(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected (n_samples, n_pixels) images, got {X.shape}")
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise DomainError("image intensities must lie in [0, 1]")
    return X


#: Agreement-decay constant used by the benchmark pipeline's analytical
#: kernel. Sharper than the StdpParams default so that potentiation stays
#: selective for near-perfect agreement under sparse (TTFS) coding.
PIPELINE_IDEAL_TAU = 0.15


def resolve_kernel(kernel):
    """Accept 'linear', 'spline_ideal', or any kernel object."""
    if kernel == "linear":
        return LinearKernel()
    if kernel == "spline_ideal":
        return IdealSadpKernel(
            StdpParams(tau_plus=PIPELINE_IDEAL_TAU, tau_minus=PIPELINE_IDEAL_TAU)
        )
    if hasattr(kernel, "evaluate"):
        return kernel
    raise DomainError(f"unknown kernel {kernel!r}")


class _SpikingLayerBase(BaseEstimator, TransformerMixin):
    """Shared encode/forward plumbing; subclasses own the weight update."""

    def _encoder_config(self) -> EncoderConfig:
        return EncoderConfig(scheme=self.coding, T=self.T, seed=self.seed)

    def _lif_config(self) -> LifConfig:
        return LifConfig(decay=self.decay, theta=self.theta)

    def _encode_all(self, X: np.ndarray) -> SpikeTensor:
        return encode_batch(X, self._encoder_config(), first_index=0)

    def _epoch_batches(self, n: int, rng: np.random.Generator):
        order = rng.permutation(n)
        for lo in range(0, n, self.batch_size):
            yield order[lo : lo + self.batch_size]

    def transform(self, X) -> np.ndarray:
        X = _check_images(X)
        spikes = self._encode_all(X)
        out = np.empty((X.shape[0], self.n_features))
        for lo in range(0, X.shape[0], self.batch_size):
            hi = min(lo + self.batch_size, X.shape[0])
            chunk = SpikeTensor(spikes.words[lo:hi], T=spikes.T)
            S = forward(chunk, self.W_, self._lif_config())
            out[lo:hi] = clf.extract_features(S)
        return out


class SadpLayer(_SpikingLayerBase):
    """Unsupervised agreement-driven feature layer (one batch = one update)."""

    def __init__(
        self,
        n_features: int = 64,
        kernel="linear",
        coding: str = "rate",
        T: int = 10,
        epochs: int = 10,
        batch_size: int = 64,
        decay: float = 0.9,
        theta: float = 0.5,
        eta: float = 50.0,
        seed: int = 0,
    ):
        self.n_features = n_features
        self.kernel = kernel
        self.coding = coding
        self.T = T
        self.epochs = epochs
        self.batch_size = batch_size
        self.decay = decay
        self.theta = theta
        self.eta = eta
        self.seed = seed

    def fit(self, X, y=None):
        X = _check_images(X)
        spikes = self._encode_all(X)
        rng = np.random.default_rng(self.seed)
        self.W_ = init_rademacher(X.shape[1], self.n_features, seed=self.seed)
        cfg = SadpConfig(
            kernel=resolve_kernel(self.kernel),
            eta_schedule=lambda epoch: self.eta,
        )
        lif_cfg = self._lif_config()
        self.weight_norms_ = []
        self.epoch_seconds_ = []
        for epoch in range(self.epochs):
            t0 = time.perf_counter()
            for idx in self._epoch_batches(X.shape[0], rng):
                batch = SpikeTensor(spikes.words[np.sort(idx)], T=spikes.T)
                S = forward(batch, self.W_, lif_cfg)
                K = kappa_batch(batch, S)
                sadp_update(self.W_, K, cfg, epoch=epoch)
            self.epoch_seconds_.append(time.perf_counter() - t0)
            self.weight_norms_.append(self.W_.frobenius_norm())
        return self


class StdpBaselineLayer(_SpikingLayerBase):
    """Trace-based PostPre STDP baseline over the same LIF dynamics."""

    def __init__(
        self,
        n_features: int = 400,
        coding: str = "rate",
        T: int = 10,
        epochs: int = 10,
        batch_size: int = 64,
        decay: float = 0.9,
        theta: float = 0.5,
        A_plus: float = 1e-4,
        A_minus: float = 1e-4,
        trace_tau: float = 5.0,
        seed: int = 0,
    ):
        self.n_features = n_features
        self.coding = coding
        self.T = T
        self.epochs = epochs
        self.batch_size = batch_size
        self.decay = decay
        self.theta = theta
        self.A_plus = A_plus
        self.A_minus = A_minus
        self.trace_tau = trace_tau
        self.seed = seed

    def fit(self, X, y=None):
        X = _check_images(X)
        spikes = self._encode_all(X)
        rng = np.random.default_rng(self.seed)
        cfg = StdpBaselineConfig(
            A_plus=self.A_plus, A_minus=self.A_minus, trace_tau=self.trace_tau
        )
        self.W_ = init_uniform(X.shape[1], self.n_features, *cfg.w_init_range,
                               seed=self.seed)
        lif_cfg = self._lif_config()
        self.weight_norms_ = []
        self.epoch_seconds_ = []
        for _ in range(self.epochs):
            t0 = time.perf_counter()
            for idx in self._epoch_batches(X.shape[0], rng):
                batch = SpikeTensor(spikes.words[np.sort(idx)], T=spikes.T)
                S = forward(batch, self.W_, lif_cfg)
                stdp_postpre_update(self.W_, batch, S, cfg)
            self.epoch_seconds_.append(time.perf_counter() - t0)
            self.weight_norms_.append(self.W_.frobenius_norm())
        return self


class HebbianLayer(_SpikingLayerBase):
    """Co-activation baseline with weight decay, online per sample."""

    def __init__(
        self,
        n_features: int = 400,
        coding: str = "rate",
        T: int = 10,
        epochs: int = 10,
        batch_size: int = 64,
        decay: float = 0.9,
        theta: float = 0.5,
        eta: float = 1e-3,
        decay_lambda: float = 1e-2,
        seed: int = 0,
    ):
        self.n_features = n_features
        self.coding = coding
        self.T = T
        self.epochs = epochs
        self.batch_size = batch_size
        self.decay = decay
        self.theta = theta
        self.eta = eta
        self.decay_lambda = decay_lambda
        self.seed = seed

    def fit(self, X, y=None):
        X = _check_images(X)
        spikes = self._encode_all(X)
        rng = np.random.default_rng(self.seed)
        cfg = HebbianConfig(eta=self.eta, decay_lambda=self.decay_lambda)
        self.W_ = init_uniform(X.shape[1], self.n_features, *cfg.w_init_range,
                               seed=self.seed)
        lif_cfg = self._lif_config()
        self.weight_norms_ = []
        self.epoch_seconds_ = []
        for _ in range(self.epochs):
            t0 = time.perf_counter()
            for idx in self._epoch_batches(X.shape[0], rng):
                batch = SpikeTensor(spikes.words[np.sort(idx)], T=spikes.T)
                S = forward(batch, self.W_, lif_cfg)
                hebbian_update(self.W_, batch, S, cfg)
            self.epoch_seconds_.append(time.perf_counter() - t0)
            self.weight_norms_.append(self.W_.frobenius_norm())
        return self


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Sklearn wrapper around the numpy MLP; scales count features by 1/T."""

    def __init__(
        self,
        hidden=(256,),
        n_classes: int = 10,
        epochs: int = 50,
        lr: float = 1e-3,
        batch_size: int = 128,
        feature_scale: float = 1.0,
        seed: int = 0,
    ):
        self.hidden = hidden
        self.n_classes = n_classes
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.feature_scale = feature_scale
        self.seed = seed

    def _cfg(self, n_features: int) -> clf.MlpConfig:
        return clf.MlpConfig(
            layer_sizes=(n_features, *self.hidden, self.n_classes),
            epochs=self.epochs,
            lr=self.lr,
            batch_size=self.batch_size,
            seed=self.seed,
        )

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64) / self.feature_scale
        self.trained_ = clf.train_mlp(X, y, self._cfg(X.shape[1]))
        self.classes_ = np.arange(self.n_classes)
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64) / self.feature_scale
        return self.trained_.model.predict(X)

    def predict_proba(self, X):
        X = np.asarray(X, dtype=np.float64) / self.feature_scale
        return self.trained_.model.predict_proba(X)

    def score_metrics(self, X, y) -> dict:
        X = np.asarray(X, dtype=np.float64) / self.feature_scale
        return clf.evaluate(self.trained_.model, X, y)
