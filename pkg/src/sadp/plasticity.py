"""Weight-update rules: agreement-driven SADP, trace-based PostPre STDP,
Hebbian-with-decay, and the quadratic pairwise-STDP reference used by the
complexity experiments.

SADP applies one update per batch; the baselines are online (per sample)
but vectorized over synapses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numba import njit, prange

from .agreement import _popcount64
from .errors import DomainError, NumericError, ShapeError
from .kernels import StdpParams, eval_kernel, stdp_kernel
from .spikes import EPS, SpikeTensor, WeightMatrix
from .spikes import popcount as npop


@dataclass
class SadpConfig:
    kernel: object = None                 # any kernels.* object with .evaluate
    eta_schedule: Callable[[int], float] = lambda epoch: 1.0
    eps: float = EPS
    l_max: float = 1.0


@dataclass(frozen=True)
class StdpBaselineConfig:
    A_plus: float = 1e-4
    A_minus: float = 1e-4
    trace_tau: float = 5.0       # timesteps
    w_init_range: tuple = (0.0, 0.3)
    w_bounds: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.A_plus <= 0 or self.A_minus <= 0:
            raise DomainError("amplitudes must be > 0")
        if self.w_bounds[0] >= self.w_bounds[1]:
            raise DomainError("w_bounds must be ordered")


@dataclass(frozen=True)
class HebbianConfig:
    eta: float = 1e-3
    decay_lambda: float = 1e-2
    w_init_range: tuple = (0.0, 0.3)
    w_bounds: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.eta <= 0 or self.decay_lambda <= 0:
            raise DomainError("eta and decay_lambda must be > 0")


def sadp_update(
    W: WeightMatrix, K: np.ndarray, cfg: SadpConfig, epoch: int = 0
) -> WeightMatrix:
    """Apply the batch-averaged kernel update with clip and silencing floor.

    dw_ij = eta(epoch)/B * sum_b L(kappa_ij^(b))
    w'    = clip(sign(w + dw) * max(|w + dw|, eps), -1, 1), sign(0) := +1
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 3 or K.shape[1:] != (W.N_in, W.N_out):
        raise ShapeError(
            f"agreement matrix {K.shape} incompatible with weights "
            f"({W.N_in}, {W.N_out})"
        )
    B = K.shape[0]
    L = eval_kernel(cfg.kernel, K, l_max=cfg.l_max)
    dw = (cfg.eta_schedule(epoch) / B) * L.sum(axis=0)
    if not np.all(np.isfinite(dw)):
        raise NumericError("non-finite weight update")
    v = W.w + dw
    sign = np.where(v < 0, -1.0, 1.0)   # sign(0) := +1
    W.w = np.clip(sign * np.maximum(np.abs(v), cfg.eps), -1.0, 1.0)
    return W


def _decayed_traces(dense: np.ndarray, tau: float) -> np.ndarray:
    """Exponential spike traces, set to 1 on each spike, per timestep.

    dense: (B, N, T) binary. Returns traces with the same shape, where the
    value at t already includes a spike occurring at t.
    """
    B, N, T = dense.shape
    decay = np.exp(-1.0 / tau)
    traces = np.empty((B, N, T))
    x = np.zeros((B, N))
    for t in range(T):
        x = x * decay
        x = np.where(dense[:, :, t] > 0, 1.0, x)
        traces[:, :, t] = x
    return traces


def stdp_postpre_update(
    W: WeightMatrix, pre: SpikeTensor, post: SpikeTensor, cfg: StdpBaselineConfig
) -> WeightMatrix:
    """PostPre trace rule: potentiate on post spikes by the pre trace,
    depress on pre spikes by the post trace; accumulate over the batch."""
    if pre.B != post.B or pre.T != post.T:
        raise ShapeError("pre/post tensor mismatch")
    pre_d = pre.to_dense().astype(np.float64)
    post_d = post.to_dense().astype(np.float64)
    x_pre = _decayed_traces(pre_d, cfg.trace_tau)
    x_post = _decayed_traces(post_d, cfg.trace_tau)
    # sum over batch and time of rank-1 events
    dw = cfg.A_plus * np.einsum("bit,bjt->ij", x_pre, post_d)
    dw -= cfg.A_minus * np.einsum("bit,bjt->ij", pre_d, x_post)
    W.w = np.clip(W.w + dw, cfg.w_bounds[0], cfg.w_bounds[1])
    return W


def hebbian_update(
    W: WeightMatrix, pre: SpikeTensor, post: SpikeTensor, cfg: HebbianConfig
) -> WeightMatrix:
    """Co-activation rule with plain weight decay, online in batch order."""
    if pre.B != post.B or pre.T != post.T:
        raise ShapeError("pre/post tensor mismatch")
    pre_d = pre.to_dense().astype(np.float64)
    post_d = post.to_dense().astype(np.float64)
    for b in range(pre.B):
        coact = pre_d[b] @ post_d[b].T        # (N_in, N_out) co-spike counts
        dw = cfg.eta * coact - cfg.decay_lambda * W.w
        W.w = np.clip(W.w + dw, cfg.w_bounds[0], cfg.w_bounds[1])
    return W


@njit(parallel=True, cache=True)
def _linear_dw_packed(Xw, Sw, cx, cs, T, eps, eta_pot, eta_dep, l_max):
    """Batch-mean linear-kernel update straight from packed words."""
    B, N_in, W = Xw.shape
    N_out = Sw.shape[1]
    dw = np.empty((N_in, N_out))
    invT = 1.0 / T
    # Per-(sample, output-neuron) spike means, hoisted out of the pair loop.
    my = cs * invT
    a = 1.0 - 2.0 * my
    for i in prange(N_in):
        h = np.empty(N_out, dtype=np.int64)
        acc = np.zeros(N_out)
        for b in range(B):
            # Word loop outside the neuron loop so both the popcount and the
            # kappa arithmetic vectorize across output neurons.  The first
            # word assigns, sparing a separate zeroing pass over h.
            x0 = Xw[b, i, 0]
            for j in range(N_out):
                h[j] = np.int64(_popcount64(x0 ^ Sw[b, j, 0]))
            for w in range(1, W):
                x = Xw[b, i, w]
                for j in range(N_out):
                    h[j] += np.int64(_popcount64(x ^ Sw[b, j, w]))
            mx = cx[b, i] * invT
            for j in range(N_out):
                # 1 - pe == mx + my - 2 mx my; p0 - pe == (1 - pe) - h / T.
                d0 = my[b, j] + mx * a[b, j]
                denom = d0
                if denom < eps:
                    denom = eps
                k = (d0 - h[j] * invT) / denom
                L = eta_pot * k if k > 0.0 else eta_dep * k
                if L > l_max:
                    L = l_max
                elif L < -l_max:
                    L = -l_max
                acc[j] += L
        for j in range(N_out):
            dw[i, j] = acc[j] / B
    return dw


@njit(cache=True)
def _apply_dw(w, dw, eta_t, eps):
    """One-pass weight apply: scale, add, sign floor, clip, finiteness check."""
    out = np.empty_like(w)
    ok = True
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            d = eta_t * dw[i, j]
            if not np.isfinite(d):
                ok = False
            v = w[i, j] + d
            s = -1.0 if v < 0 else 1.0
            a = abs(v)
            if a < eps:
                a = eps
            x = s * a
            if x > 1.0:
                x = 1.0
            elif x < -1.0:
                x = -1.0
            out[i, j] = x
    return out, ok


def sadp_linear_update_packed(
    W: WeightMatrix,
    X: SpikeTensor,
    S: SpikeTensor,
    kernel,
    eta_t: float = 1.0,
    eps: float = EPS,
    l_max: float = 1.0,
) -> WeightMatrix:
    """Fused linear-kernel SADP step over packed trains, for hot paths.

    Equivalent to kappa_batch + sadp_update with the same linear kernel (the
    equivalence is asserted in the test suite); keeps the per-synapse work
    proportional to T for the scaling experiments.
    """
    if X.B != S.B or X.T != S.T:
        raise ShapeError("pre/post tensor mismatch")
    if X.N != W.N_in or S.N != W.N_out:
        raise ShapeError("tensor/weight shape mismatch")
    cx = npop(X.words).astype(np.float64)
    cs = npop(S.words).astype(np.float64)
    dw = _linear_dw_packed(
        X.words, S.words, cx, cs, float(X.T), eps,
        kernel.eta_pot, kernel.eta_dep, l_max,
    )
    new_w, ok = _apply_dw(W.w, dw, eta_t, eps)
    if not ok:
        raise NumericError("non-finite weight update")
    W.w = new_w
    return W


@dataclass
class OpCounter:
    """Instrumented operation counter for the complexity experiments."""

    ops: int = 0


def stdp_pairwise_oracle(
    pre_times, post_times, p: StdpParams, counter: Optional[OpCounter] = None
) -> float:
    """Sum of K_STDP over all (t_pre, t_post) pairs; quadratic on purpose.

    Used only in tests and the scaling study as the classical-STDP cost model.
    """
    total = 0.0
    for tp in pre_times:
        for tq in post_times:
            dt = tq - tp
            if counter is not None:
                counter.ops += 1
            if dt != 0:
                total += stdp_kernel(dt, p)
    return total
