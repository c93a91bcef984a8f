import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sadp.agreement import kappa_batch
from sadp.errors import DomainError, ShapeError
from sadp.kernels import IdealSadpKernel, LinearKernel, StdpParams
from sadp.plasticity import (
    HebbianConfig,
    OpCounter,
    SadpConfig,
    StdpBaselineConfig,
    hebbian_update,
    sadp_linear_update_packed,
    sadp_update,
    stdp_pairwise_oracle,
    stdp_postpre_update,
)
from sadp.spikes import SpikeTensor, WeightMatrix, init_rademacher, init_uniform


def test_sadp_update_hand_value():
    # B=2, single synapse, kappa = 1 and 0 with eta_pot = 0.01:
    # dw = (0.01 + 0) / 2 = 0.005
    W = WeightMatrix(np.array([[0.1]]))
    K = np.array([1.0, 0.0]).reshape(2, 1, 1)
    sadp_update(W, K, SadpConfig(kernel=LinearKernel(eta_pot=0.01, eta_dep=0.01)))
    assert W.w[0, 0] == pytest.approx(0.105)


def test_sadp_update_eta_schedule():
    W = WeightMatrix(np.array([[0.0]]))
    K = np.ones((1, 1, 1))
    cfg = SadpConfig(kernel=LinearKernel(eta_pot=0.01, eta_dep=0.01),
                     eta_schedule=lambda epoch: 0.5 ** epoch)
    sadp_update(W, K, cfg, epoch=2)
    assert W.w[0, 0] == pytest.approx(0.0025)


def test_sadp_update_clip_and_floor():
    kernel = LinearKernel(eta_pot=1.0, eta_dep=1.0)
    # clip at +1
    W = WeightMatrix(np.array([[0.9]]))
    sadp_update(W, np.ones((1, 1, 1)), SadpConfig(kernel=kernel))
    assert W.w[0, 0] == 1.0
    # anti-silencing floor: an update landing exactly on 0 is pushed to +eps
    W = WeightMatrix(np.array([[0.5]]))
    K = np.full((1, 1, 1), -0.5)  # L = -0.5, w + dw = 0
    sadp_update(W, K, SadpConfig(kernel=kernel))
    assert W.w[0, 0] == 1e-8  # sign(0) := +1
    # small negative stays negative at the floor
    W = WeightMatrix(np.array([[0.5 - 1e-12]]))
    sadp_update(W, K, SadpConfig(kernel=kernel))
    assert W.w[0, 0] == pytest.approx(-1e-8)


def test_sadp_update_shape_error():
    W = init_rademacher(4, 3, seed=0)
    with pytest.raises(ShapeError):
        sadp_update(W, np.zeros((2, 4, 5)), SadpConfig(kernel=LinearKernel()))


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_sadp_update_bounds_property(seed):
    rng = np.random.default_rng(seed)
    W = WeightMatrix(rng.uniform(-1, 1, (6, 4)))
    K = rng.uniform(-1, 1, (3, 6, 4))
    kernel = LinearKernel(eta_pot=rng.uniform(0.01, 2.0),
                          eta_dep=rng.uniform(0.01, 2.0))
    sadp_update(W, K, SadpConfig(kernel=kernel))
    assert np.all(W.w <= 1.0) and np.all(W.w >= -1.0)
    assert np.all(np.abs(W.w) >= 1e-8)


def test_fused_linear_update_matches_general_path(rng):
    X = SpikeTensor.from_dense((rng.random((5, 17, 130)) < 0.35).astype(np.uint8))
    S = SpikeTensor.from_dense((rng.random((5, 9, 130)) < 0.55).astype(np.uint8))
    kernel = LinearKernel(eta_pot=0.7, eta_dep=0.4)
    W1 = init_rademacher(17, 9, seed=1)
    W2 = W1.copy()
    K = kappa_batch(X, S)
    sadp_update(W1, K, SadpConfig(kernel=kernel))
    sadp_linear_update_packed(W2, X, S, kernel)
    assert np.max(np.abs(W1.w - W2.w)) <= 1e-12


def test_fused_linear_update_eta_t(rng):
    X = SpikeTensor.from_dense((rng.random((2, 6, 64)) < 0.5).astype(np.uint8))
    S = SpikeTensor.from_dense((rng.random((2, 4, 64)) < 0.5).astype(np.uint8))
    kernel = LinearKernel()
    W1 = init_rademacher(6, 4, seed=2)
    W2 = W1.copy()
    sadp_update(W1, kappa_batch(X, S),
                SadpConfig(kernel=kernel, eta_schedule=lambda e: 0.25))
    sadp_linear_update_packed(W2, X, S, kernel, eta_t=0.25)
    assert np.max(np.abs(W1.w - W2.w)) <= 1e-12


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def _tensor_from_times(T, spike_times):
    dense = np.zeros((1, 1, T), dtype=np.uint8)
    for t in spike_times:
        dense[0, 0, t] = 1
    return SpikeTensor.from_dense(dense)


def test_stdp_postpre_hand_value():
    # pre spike at t=0, post spike at t=3, tau=5:
    # potentiation = A+ * exp(-3/5); the post trace is 0 at the pre spike,
    # so there is no depression term.
    cfg = StdpBaselineConfig(A_plus=1e-4, A_minus=1e-4, trace_tau=5.0)
    W = WeightMatrix(np.array([[0.1]]))
    stdp_postpre_update(W, _tensor_from_times(6, [0]), _tensor_from_times(6, [3]), cfg)
    assert W.w[0, 0] == pytest.approx(0.1 + 1e-4 * np.exp(-0.6))


def test_stdp_postpre_depression():
    # post spike at t=0, pre spike at t=3: anti-causal, depression A- e^{-3/5}
    cfg = StdpBaselineConfig(A_plus=1e-4, A_minus=1e-4, trace_tau=5.0)
    W = WeightMatrix(np.array([[0.1]]))
    stdp_postpre_update(W, _tensor_from_times(6, [3]), _tensor_from_times(6, [0]), cfg)
    assert W.w[0, 0] == pytest.approx(0.1 - 1e-4 * np.exp(-0.6))


def test_stdp_postpre_bounds(rng):
    cfg = StdpBaselineConfig(A_plus=0.5, A_minus=0.5)
    W = init_uniform(8, 5, 0.0, 0.3, seed=0)
    pre = SpikeTensor.from_dense((rng.random((4, 8, 20)) < 0.5).astype(np.uint8))
    post = SpikeTensor.from_dense((rng.random((4, 5, 20)) < 0.5).astype(np.uint8))
    for _ in range(5):
        stdp_postpre_update(W, pre, post, cfg)
    assert np.all(W.w >= 0.0) and np.all(W.w <= 1.0)


def test_hebbian_hand_value():
    # one sample, coactivation count 2, w0 = 0.1:
    # dw = eta * 2 - lambda * w0 = 0.002 - 0.001
    cfg = HebbianConfig(eta=1e-3, decay_lambda=1e-2)
    W = WeightMatrix(np.array([[0.1]]))
    dense = np.zeros((1, 1, 5), dtype=np.uint8)
    dense[0, 0, [1, 3]] = 1
    X = SpikeTensor.from_dense(dense)
    hebbian_update(W, X, X, cfg)
    assert W.w[0, 0] == pytest.approx(0.101)


def test_hebbian_is_online_over_batch():
    # two identical samples applied sequentially, not averaged
    cfg = HebbianConfig(eta=1e-3, decay_lambda=1e-2)
    W = WeightMatrix(np.array([[0.1]]))
    dense = np.zeros((2, 1, 5), dtype=np.uint8)
    dense[:, 0, [1, 3]] = 1
    X = SpikeTensor.from_dense(dense)
    hebbian_update(W, X, X, cfg)
    w1 = 0.1 + 1e-3 * 2 - 1e-2 * 0.1
    w2 = w1 + 1e-3 * 2 - 1e-2 * w1
    assert W.w[0, 0] == pytest.approx(w2)


def test_hebbian_decay_only_without_spikes():
    cfg = HebbianConfig(eta=1e-3, decay_lambda=1e-2)
    W = WeightMatrix(np.array([[0.5]]))
    Z = SpikeTensor.from_dense(np.zeros((1, 1, 4), dtype=np.uint8))
    hebbian_update(W, Z, Z, cfg)
    assert W.w[0, 0] == pytest.approx(0.5 * (1 - 1e-2))


def test_baseline_config_validation():
    with pytest.raises(DomainError):
        StdpBaselineConfig(A_plus=0.0)
    with pytest.raises(DomainError):
        StdpBaselineConfig(w_bounds=(1.0, 0.0))
    with pytest.raises(DomainError):
        HebbianConfig(eta=0.0)


# ---------------------------------------------------------------------------
# Pairwise oracle
# ---------------------------------------------------------------------------


def test_pairwise_oracle_op_count():
    p = StdpParams(A_plus=1e-4, A_minus=1e-4, tau_plus=5.0, tau_minus=5.0)
    counter = OpCounter()
    stdp_pairwise_oracle(np.arange(8), np.arange(8) + 0.5, p, counter)
    assert counter.ops == 64
    counter = OpCounter()
    stdp_pairwise_oracle(np.arange(16), np.arange(16) + 0.5, p, counter)
    assert counter.ops == 256


def test_pairwise_oracle_value():
    p = StdpParams(A_plus=1e-4, A_minus=1e-4, tau_plus=5.0, tau_minus=5.0)
    # pre at 0, post at 2 and -3 (relative): contributions A+e^{-2/5} and
    # -A-e^{-3/5}
    total = stdp_pairwise_oracle([0.0], [2.0, -3.0], p)
    assert total == pytest.approx(1e-4 * (np.exp(-0.4) - np.exp(-0.6)))


def test_pairwise_oracle_skips_zero_lag():
    p = StdpParams()
    counter = OpCounter()
    total = stdp_pairwise_oracle([1.0], [1.0], p, counter)
    assert total == 0.0
    assert counter.ops == 1  # the pair is still counted as visited
