"""Image-to-spike encoders: rate coding, time-to-first-spike, label trains.

Rate coding draws one Bernoulli(intensity) per (neuron, timestep) from a
counter-based Philox stream keyed on (seed, sample index), so encodings are
byte-identical regardless of batch order or parallel scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .spikes import SpikeTensor

RATE = "rate"
TTFS = "ttfs"


@dataclass(frozen=True)
class EncoderConfig:
    scheme: str = RATE
    T: int = 10
    seed: int = 0
    ttfs_floor: float = 0.0

    def __post_init__(self):
        if self.scheme not in (RATE, TTFS):
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.T < 1:
            raise DomainError(f"T must be >= 1, got {self.T}")
        if not (0.0 <= self.ttfs_floor < 1.0):
            raise DomainError(f"ttfs_floor must be in [0,1), got {self.ttfs_floor}")


def _check_intensities(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 1:
        raise ShapeError(f"image must be a flat vector, got shape {image.shape}")
    if image.size and (image.min() < 0.0 or image.max() > 1.0):
        raise DomainError("intensities must lie in [0, 1]")
    return image


def _sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    # Philox keyed per sample: stream depends only on (seed, sample_index).
    return np.random.Generator(np.random.Philox(key=(seed, sample_index)))


def encode_rate(image, cfg: EncoderConfig, sample_index: int = 0) -> SpikeTensor:
    """Bernoulli rate coding of one image -> 1 x N x T spike tensor."""
    if cfg.scheme != RATE:
        raise DomainError(f"encode_rate called with scheme {cfg.scheme!r}")
    image = _check_intensities(image)
    u = _sample_rng(cfg.seed, sample_index).random((image.size, cfg.T))
    dense = (u < image[:, None]).astype(np.uint8)
    return SpikeTensor.from_dense(dense[None, :, :])


def encode_ttfs(image, cfg: EncoderConfig, sample_index: int = 0) -> SpikeTensor:
    """Single spike at latency floor((1-p)(T-1)); no spike for p <= floor."""
    if cfg.scheme != TTFS:
        raise DomainError(f"encode_ttfs called with scheme {cfg.scheme!r}")
    image = _check_intensities(image)
    dense = np.zeros((image.size, cfg.T), dtype=np.uint8)
    fires = image > cfg.ttfs_floor
    t = np.floor((1.0 - image[fires]) * (cfg.T - 1)).astype(np.int64)
    dense[np.flatnonzero(fires), t] = 1
    return SpikeTensor.from_dense(dense[None, :, :])


def encode_image(image, cfg: EncoderConfig, sample_index: int = 0) -> SpikeTensor:
    if cfg.scheme == RATE:
        return encode_rate(image, cfg, sample_index)
    return encode_ttfs(image, cfg, sample_index)


def encode_batch(images: np.ndarray, cfg: EncoderConfig, first_index: int = 0) -> SpikeTensor:
    """Encode a (B, N) image batch; sample k uses stream first_index + k."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 2:
        raise ShapeError(f"images must be (B, N), got {images.shape}")
    slices = [
        encode_image(images[b], cfg, sample_index=first_index + b).words
        for b in range(images.shape[0])
    ]
    return SpikeTensor(np.concatenate(slices, axis=0), T=cfg.T)


def encode_labels(label: int, num_classes: int, cfg: EncoderConfig) -> SpikeTensor:
    """One-hot label train: all-ones under rate coding, a t=0 spike under TTFS.

    Produced for completeness; the default pipeline never consumes it.
    """
    if not (0 <= label < num_classes):
        raise DomainError(f"label {label} out of range [0, {num_classes})")
    dense = np.zeros((1, num_classes, cfg.T), dtype=np.uint8)
    if cfg.scheme == RATE:
        dense[0, label, :] = 1
    else:
        dense[0, label, 0] = 1
    return SpikeTensor.from_dense(dense)
