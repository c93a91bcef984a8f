"""Independent, deliberately-naive reference implementations used to check
the optimized code paths. Everything here works on dense 0/1 arrays with
plain Python loops so it shares no code with the package internals.
"""

import numpy as np


def kappa_dense(x, y, eps=1e-8):
    """Cohen's kappa of two equal-length binary sequences, via the explicit
    2x2 confusion-matrix definition."""
    x = np.asarray(x, dtype=int)
    y = np.asarray(y, dtype=int)
    assert x.shape == y.shape
    T = len(x)
    n11 = n00 = n10 = n01 = 0
    for a, b in zip(x, y):
        if a == 1 and b == 1:
            n11 += 1
        elif a == 0 and b == 0:
            n00 += 1
        elif a == 1 and b == 0:
            n10 += 1
        else:
            n01 += 1
    p0 = (n11 + n00) / T
    px = (n11 + n10) / T
    py = (n11 + n01) / T
    pe = px * py + (1 - px) * (1 - py)
    return (p0 - pe) / max(1 - pe, eps)


def lif_forward_dense(X, W, decay=0.9, theta=0.5, eps=1e-8):
    """Scalar-loop leaky integrate-and-fire layer with per-step min-max
    normalization over the whole (B, N_out) slice and reset-on-spike."""
    B, N_in, T = X.shape
    N_out = W.shape[1]
    V = np.zeros((B, N_out))
    out = np.zeros((B, N_out, T), dtype=np.uint8)
    for t in range(T):
        V = decay * V + np.asarray(X[:, :, t], dtype=float) @ W
        lo, hi = V.min(), V.max()
        Vn = (V - lo) / (hi - lo + eps)
        S = (Vn >= theta).astype(np.uint8)
        out[:, :, t] = S
        V = V * (1.0 - S)
    return out


def popcount_int(words):
    """Population count via Python integer bit_count."""
    return sum(int(w).bit_count() for w in np.asarray(words).ravel())


def macro_f1_from_counts(confusion):
    """Macro-F1 from a confusion matrix (rows: true, cols: predicted),
    scoring 0 for classes whose precision+recall denominator is zero."""
    C = np.asarray(confusion, dtype=float)
    n = C.shape[0]
    scores = []
    for k in range(n):
        tp = C[k, k]
        fp = C[:, k].sum() - tp
        fn = C[k, :].sum() - tp
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
    return float(np.mean(scores))
