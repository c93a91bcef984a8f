"""Leaky integrate-and-fire layer with per-step min-max normalization.

The normalization min/max are taken over the entire B x N_out potential
slice at each step, which couples samples within a batch (a documented
consequence of the model definition). The threshold comparison is >=, so a
normalized potential exactly at theta spikes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError, ShapeError
from .spikes import SpikeTensor, WeightMatrix


@dataclass(frozen=True)
class LifConfig:
    decay: float = 0.9      # membrane decay lambda in (0,1)
    theta: float = 0.5      # spike threshold in (0,1)
    eps: float = 1e-8       # normalization floor

    def __post_init__(self):
        if not (0.0 < self.decay < 1.0):
            raise DomainError(f"decay must be in (0,1), got {self.decay}")
        if not (0.0 < self.theta < 1.0):
            raise DomainError(f"theta must be in (0,1), got {self.theta}")
        if self.eps <= 0.0:
            raise DomainError(f"eps must be > 0, got {self.eps}")


@dataclass
class LayerState:
    V: np.ndarray  # (B, N_out) membrane potentials
    step: int = 0


def init_state(B: int, N_out: int) -> LayerState:
    return LayerState(V=np.zeros((B, N_out)), step=0)


def step(state: LayerState, X_t: np.ndarray, W: WeightMatrix, cfg: LifConfig):
    """Advance one timestep; returns (new state, binary spike slice S_t)."""
    X_t = np.asarray(X_t, dtype=np.float64)
    if X_t.ndim != 2 or X_t.shape != (state.V.shape[0], W.N_in):
        raise ShapeError(
            f"X_t shape {X_t.shape} incompatible with V {state.V.shape}, "
            f"W ({W.N_in}, {W.N_out})"
        )
    if not np.all(np.isfinite(state.V)):
        raise NumericError(f"non-finite membrane potential at step {state.step}")

    V = cfg.decay * state.V + X_t @ W.w
    vmin = V.min()
    vmax = V.max()
    V_norm = (V - vmin) / (vmax - vmin + cfg.eps)
    S_t = (V_norm >= cfg.theta).astype(np.uint8)
    V = V * (1.0 - S_t)
    return LayerState(V=V, step=state.step + 1), S_t


def forward(X: SpikeTensor, W: WeightMatrix, cfg: LifConfig) -> SpikeTensor:
    """Run all T steps from a zero initial potential; returns the spike record."""
    dense = X.to_dense()
    state = init_state(X.B, W.N_out)
    out = np.empty((X.B, W.N_out, X.T), dtype=np.uint8)
    for t in range(X.T):
        state, S_t = step(state, dense[:, :, t], W, cfg)
        out[:, :, t] = S_t
    return SpikeTensor.from_dense(out)
