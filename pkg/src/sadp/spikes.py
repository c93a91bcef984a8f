"""Bit-packed spike trains, spike tensors, and bounded weight matrices.

Packing layout: 64-bit words, least-significant bit first within each word,
so timestep ``t`` lives at bit ``t % 64`` of word ``t // 64``. Pad bits past
T are forced to zero at construction, which keeps popcount mask-free on the
hot paths.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ShapeError

WORD_BITS = 64
MAGIC = b"SADPSPK1"

#: Global numerical floor used for weight magnitudes and kappa denominators.
EPS = 1e-8


def words_for(T: int) -> int:
    return (T + WORD_BITS - 1) // WORD_BITS


def _pack_bits(dense: np.ndarray) -> np.ndarray:
    """Pack a (..., T) binary array into (..., W) uint64 words, LSB-first."""
    T = dense.shape[-1]
    W = words_for(T)
    pad = W * WORD_BITS - T
    if pad:
        dense = np.concatenate(
            [dense, np.zeros(dense.shape[:-1] + (pad,), dtype=dense.dtype)], axis=-1
        )
    packed = np.packbits(dense.astype(np.uint8), axis=-1, bitorder="little")
    return packed.view(np.uint64).reshape(dense.shape[:-1] + (W,))


def _unpack_bits(words: np.ndarray, T: int) -> np.ndarray:
    """Inverse of _pack_bits: (..., W) uint64 -> (..., T) uint8."""
    as_bytes = words.view(np.uint8).reshape(words.shape[:-1] + (-1,))
    dense = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return dense[..., :T]


def popcount(words: np.ndarray) -> np.ndarray:
    """Per-word set-bit counts summed over the word axis."""
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


@dataclass(frozen=True)
class SpikeTrain:
    """A binary spike sequence of length T, bit-packed into uint64 words."""

    T: int
    words: np.ndarray  # shape (W,), uint64, pad bits zero

    def popcount(self) -> int:
        return int(popcount(self.words))

    def unpack(self) -> np.ndarray:
        return _unpack_bits(self.words, self.T)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpikeTrain)
            and self.T == other.T
            and np.array_equal(self.words, other.words)
        )


def pack_train(dense, T: int) -> SpikeTrain:
    """Pack a dense {0,1} sequence of exactly T entries into a SpikeTrain."""
    dense = np.asarray(dense)
    if dense.ndim != 1 or dense.shape[0] != T:
        raise ShapeError(f"expected {T} entries, got shape {dense.shape}")
    words = _pack_bits(dense)
    words.setflags(write=False)
    return SpikeTrain(T=T, words=words)


class SpikeTensor:
    """B x N x T binary spike record, stored as (B, N, W) packed words."""

    def __init__(self, words: np.ndarray, T: int):
        if words.ndim != 3:
            raise ShapeError(f"words must be (B, N, W), got {words.shape}")
        if words.shape[2] != words_for(T):
            raise ShapeError(
                f"word count {words.shape[2]} inconsistent with T={T}"
            )
        self.words = words.astype(np.uint64, copy=False)
        self.B, self.N = words.shape[:2]
        self.T = T

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SpikeTensor":
        """Build from a (B, N, T) array of {0,1}."""
        dense = np.asarray(dense)
        if dense.ndim != 3:
            raise ShapeError(f"dense must be (B, N, T), got {dense.shape}")
        return cls(_pack_bits(dense), T=dense.shape[2])

    def to_dense(self) -> np.ndarray:
        return _unpack_bits(self.words, self.T)

    def train(self, b: int, n: int) -> SpikeTrain:
        return SpikeTrain(T=self.T, words=self.words[b, n].copy())

    def counts(self) -> np.ndarray:
        """(B, N) spike counts per train."""
        return popcount(self.words)

    def concat_time(self, other: "SpikeTensor") -> "SpikeTensor":
        if (self.B, self.N) != (other.B, other.N):
            raise ShapeError("batch/neuron shape mismatch in time concat")
        return SpikeTensor.from_dense(
            np.concatenate([self.to_dense(), other.to_dense()], axis=2)
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpikeTensor)
            and self.T == other.T
            and np.array_equal(self.words, other.words)
        )

    # -- binary dump format: magic, B/N/T as u32 LE, words row-major --

    def dump(self, path) -> None:
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<III", self.B, self.N, self.T))
            f.write(self.words.astype("<u8").tobytes())

    @classmethod
    def load(cls, path) -> "SpikeTensor":
        with open(path, "rb") as f:
            blob = f.read()
        if blob[:8] != MAGIC:
            raise ParseError(f"bad magic {blob[:8]!r} at offset 0")
        if len(blob) < 20:
            raise ParseError("truncated header")
        B, N, T = struct.unpack("<III", blob[8:20])
        W = words_for(T)
        expected = 20 + B * N * W * 8
        if len(blob) != expected:
            raise ParseError(
                f"expected {expected} bytes for B={B} N={N} T={T}, got {len(blob)}"
            )
        words = np.frombuffer(blob[20:], dtype="<u8").reshape(B, N, W)
        return cls(words.astype(np.uint64), T=T)


class WeightMatrix:
    """N_in x N_out real synaptic weights.

    Plasticity rules are the only mutators; SADP keeps every entry inside
    [-1, 1] with magnitude >= eps, the baselines keep theirs in [0, 1].
    """

    def __init__(self, w: np.ndarray):
        w = np.asarray(w, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got {w.shape}")
        self.w = w
        self.N_in, self.N_out = w.shape

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.w))

    def copy(self) -> "WeightMatrix":
        return WeightMatrix(self.w.copy())


def init_rademacher(N_in: int, N_out: int, seed: int) -> WeightMatrix:
    """Weights drawn uniformly from {-1, +1}, deterministic under seed."""
    if N_in < 1 or N_out < 1:
        raise ShapeError(f"need positive dimensions, got ({N_in}, {N_out})")
    rng = np.random.default_rng(seed)
    w = rng.integers(0, 2, size=(N_in, N_out)).astype(np.float64) * 2.0 - 1.0
    return WeightMatrix(w)


def init_uniform(N_in: int, N_out: int, lo: float, hi: float, seed: int) -> WeightMatrix:
    """Uniform init on [lo, hi] for the STDP/Hebbian baselines."""
    if N_in < 1 or N_out < 1:
        raise ShapeError(f"need positive dimensions, got ({N_in}, {N_out})")
    rng = np.random.default_rng(seed)
    return WeightMatrix(rng.uniform(lo, hi, size=(N_in, N_out)))
