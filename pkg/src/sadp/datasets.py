"""MNIST/Fashion-MNIST ingestion (IDX format), normalization, and subsetting.

No downloader lives here: files are user-supplied and can be verified
against a SHA-256 manifest. A bundled real-handwritten-digits fallback
(scikit-learn's digits, upsampled to 28x28) supports desk-scale runs in
offline environments.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError, ShapeError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass
class ImageDataset:
    images: np.ndarray   # (M, D) intensities in [0, 1]
    labels: np.ndarray   # (M,) class indices
    name: str = "mnist"
    split: str = "train"

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ShapeError("image/label count mismatch")
        if self.images.size and (
            self.images.min() < 0.0 or self.images.max() > 1.0
        ):
            raise DomainError("intensities must lie in [0, 1]")

    def __len__(self) -> int:
        return self.images.shape[0]


def _read_idx(path, expected_magic: int):
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 4:
        raise ParseError(f"{path}: truncated before magic (offset 0)")
    magic = struct.unpack(">I", blob[:4])[0]
    if magic != expected_magic:
        raise ParseError(
            f"{path}: bad magic 0x{magic:08x} at offset 0, expected "
            f"0x{expected_magic:08x}"
        )
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise ParseError(f"{path}: truncated header (offset {len(blob)})")
    dims = struct.unpack(f">{ndim}I", blob[4:header])
    count = int(np.prod(dims))
    if len(blob) != header + count:
        raise ParseError(
            f"{path}: expected {header + count} bytes, got {len(blob)} "
            f"(offset {min(len(blob), header + count)})"
        )
    data = np.frombuffer(blob, dtype=np.uint8, offset=header)
    return data.reshape(dims)


def load_idx(images_path, labels_path, name: str = "mnist", split: str = "train") -> ImageDataset:
    """Parse big-endian IDX image/label pair; pixels normalized by 255."""
    raw_images = _read_idx(images_path, IMAGE_MAGIC)
    raw_labels = _read_idx(labels_path, LABEL_MAGIC)
    if raw_images.shape[0] != raw_labels.shape[0]:
        raise ParseError(
            f"count mismatch: {raw_images.shape[0]} images vs "
            f"{raw_labels.shape[0]} labels"
        )
    M = raw_images.shape[0]
    images = raw_images.reshape(M, -1).astype(np.float64) / 255.0
    return ImageDataset(images=images, labels=raw_labels.astype(np.int64),
                        name=name, split=split)


def save_idx(ds: ImageDataset, images_path, labels_path, side: int = 28) -> None:
    """Serialize a dataset back to the IDX pair (inverse of load_idx)."""
    M = len(ds)
    pixels = np.round(ds.images * 255.0).astype(np.uint8).reshape(M, side, side)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, M, side, side))
        f.write(pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, M))
        f.write(ds.labels.astype(np.uint8).tobytes())


def subset(
    ds: ImageDataset, n: int, seed: int, stratified: bool = True
) -> ImageDataset:
    """Deterministic (optionally class-stratified) sample of n items."""
    if n > len(ds):
        raise ShapeError(f"requested {n} of {len(ds)} samples")
    rng = np.random.default_rng(seed)
    if stratified:
        classes = np.unique(ds.labels)
        per = n // len(classes)
        extra = n - per * len(classes)
        chosen = []
        for k, c in enumerate(classes):
            idx = np.flatnonzero(ds.labels == c)
            take = per + (1 if k < extra else 0)
            if take > idx.size:
                raise ShapeError(f"class {c} has only {idx.size} samples, need {take}")
            chosen.append(rng.choice(idx, size=take, replace=False))
        indices = np.sort(np.concatenate(chosen))
    else:
        indices = np.sort(rng.choice(len(ds), size=n, replace=False))
    return ImageDataset(
        images=ds.images[indices],
        labels=ds.labels[indices],
        name=ds.name,
        split=ds.split,
    )


def train_test_subsets(
    train: ImageDataset, test: ImageDataset, n_train: int, n_test: int,
    seed: int, stratified: bool = True
):
    return (
        subset(train, n_train, seed, stratified),
        subset(test, n_test, seed + 1, stratified),
    )


# -- SHA-256 manifest -------------------------------------------------------


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def verify_manifest(manifest_path) -> dict:
    """Check every (path, sha256) entry; returns {path: ok} and raises on
    malformed manifests."""
    try:
        with open(manifest_path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed manifest at line {e.lineno}: {e.msg}") from None
    if not isinstance(doc, dict) or "files" not in doc:
        raise ParseError("manifest missing 'files' mapping")
    return {p: sha256_of(p) == h for p, h in doc["files"].items()}


# -- offline fallback: real handwritten digits at 28x28 ---------------------


def digits_fallback(seed: int = 0) -> tuple:
    """Real 8x8 handwritten digits upsampled to 28x28, split 80/20 stratified.

    Stand-in for MNIST when IDX files are unavailable; same interface and
    value range, 1797 samples total.
    """
    from sklearn.datasets import load_digits

    raw = load_digits()
    images = raw.images / 16.0                      # (M, 8, 8) in [0,1]
    M = images.shape[0]
    # nearest-neighbor upsample 8 -> 28 via index mapping
    src = np.minimum((np.arange(28) * 8) // 28, 7)
    up = images[:, src][:, :, src].reshape(M, 784)
    labels = raw.target.astype(np.int64)

    rng = np.random.default_rng(seed)
    test_idx = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        test_idx.append(rng.choice(idx, size=max(1, idx.size // 5), replace=False))
    test_mask = np.zeros(M, dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    train = ImageDataset(up[~test_mask], labels[~test_mask], "digits", "train")
    test = ImageDataset(up[test_mask], labels[test_mask], "digits", "test")
    return train, test
