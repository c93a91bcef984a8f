"""Cohen's-kappa agreement between spike trains, on the bit-packed fast path.

kappa = (p0 - pe) / max(1 - pe, eps) with
  p0 = (T - popcount(x XOR y)) / T
  pe = mean(x) mean(y) + (1 - mean(x)) (1 - mean(y))

Pad bits are zero by construction, so whole-word XOR/popcount needs no
masking. The batch path fuses the word loop and the kappa arithmetic in a
jitted kernel so runtime stays proportional to T. The naive dense-loop
reference lives in the test suite.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .errors import ShapeError
from .spikes import EPS, SpikeTensor, SpikeTrain, popcount

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)


@njit(inline="always")
def _popcount64(x):
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    return (x * _H01) >> _S56


@njit(parallel=True, cache=True)
def _kappa_packed(Xw, Sw, cx, cs, T, eps):
    B, N_in, W = Xw.shape
    N_out = Sw.shape[1]
    K = np.empty((B, N_in, N_out))
    invT = 1.0 / T
    # Per-(sample, neuron) spike means, hoisted out of the pair loop.
    my = cs * invT
    a = 1.0 - 2.0 * my
    for bi in prange(B * N_in):
        b = bi // N_in
        i = bi % N_in
        h = np.empty(N_out, dtype=np.int64)
        # Word loop outside the neuron loop so the popcount and the kappa
        # arithmetic below both vectorize across output neurons.  The first
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
            # 1 - pe == mx + my - 2 mx my, and p0 - pe == (1 - pe) - h / T.
            d0 = my[b, j] + mx * a[b, j]
            denom = d0
            if denom < eps:
                denom = eps
            K[b, i, j] = (d0 - h[j] * invT) / denom
    return K


def kappa(x: SpikeTrain, y: SpikeTrain, eps: float = EPS) -> float:
    """Agreement score of two equal-length trains, in [-1, 1]."""
    if x.T != y.T:
        raise ShapeError(f"train length mismatch: {x.T} != {y.T}")
    T = float(x.T)
    hamming = int(popcount(x.words ^ y.words))
    p0 = (T - hamming) / T
    mx = x.popcount() / T
    my = y.popcount() / T
    pe = mx * my + (1.0 - mx) * (1.0 - my)
    return (p0 - pe) / max(1.0 - pe, eps)


def kappa_batch(X: SpikeTensor, S: SpikeTensor, eps: float = EPS) -> np.ndarray:
    """(B, N_in, N_out) agreement matrix via packed XOR/popcount."""
    if X.B != S.B or X.T != S.T:
        raise ShapeError(
            f"tensor mismatch: X is B={X.B} T={X.T}, S is B={S.B} T={S.T}"
        )
    cx = popcount(X.words).astype(np.float64)
    cs = popcount(S.words).astype(np.float64)
    return _kappa_packed(X.words, S.words, cx, cs, float(X.T), eps)
