import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ssmsim.core import (
    SsmConfig,
    SsmNetwork,
    activation_probability,
    cd_step,
    expected_preactivation,
    forward_mean_field,
    forward_reference,
    init_network,
    reconstruct,
    sample_mask,
    sample_states,
    stochastic_preactivation,
    train,
)
from ssmsim.datasets import bars_and_stripes
from ssmsim.exceptions import DimensionError, DivergedTrainingError, NumericError, ParameterError

from oracles import act, cd_trace, erf_taylor, mask_mean_preactivation

finite = st.floats(-6, 6, allow_nan=False)


def small_net(n_v=2, n_h=1, n_o=2, p=1.0, W=None):
    W = np.zeros((n_v, n_h)) if W is None else np.asarray(W, dtype=float)
    return SsmNetwork(W, np.zeros(W.shape[1]), np.zeros(W.shape[0]), np.zeros((W.shape[1], n_o)), p)


# -- sample_mask -------------------------------------------------------------

def test_mask_degenerate_probabilities():
    rng = np.random.default_rng(0)
    assert np.array_equal(sample_mask((3, 2), 1.0, rng), np.ones((3, 2)))
    assert np.array_equal(sample_mask((3, 2), 0.0, rng), np.zeros((3, 2)))


def test_mask_half_concentration():
    m = sample_mask((100, 100), 0.5, np.random.default_rng(1))
    assert set(np.unique(m)) <= {0, 1}
    # 3 sigma for 10^4 fair draws is 0.015
    assert abs(m.mean() - 0.5) <= 0.015


def test_mask_deterministic_given_rng():
    a = sample_mask((5, 4), 0.3, np.random.default_rng(7))
    b = sample_mask((5, 4), 0.3, np.random.default_rng(7))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
def test_mask_rejects_bad_p(p):
    with pytest.raises(ParameterError):
        sample_mask((2, 2), p, np.random.default_rng(0))


# -- stochastic_preactivation -------------------------------------------------

def test_preactivation_all_ones_is_affine():
    rng = np.random.default_rng(2)
    u, W, b = rng.random(4), rng.normal(size=(4, 3)), rng.normal(size=3)
    np.testing.assert_allclose(stochastic_preactivation(u, W, np.ones((4, 3)), b), u @ W + b, rtol=0, atol=1e-15)


def test_preactivation_all_zeros_is_bias():
    b = np.array([0.3, -0.2])
    z = stochastic_preactivation(np.ones(3), np.ones((3, 2)), np.zeros((3, 2)), b)
    assert np.array_equal(z, b)


def test_preactivation_hand_example():
    z = stochastic_preactivation([1, 1], [[0.5], [-0.25]], np.array([[1], [0]]), [0.1])
    np.testing.assert_allclose(z, [0.6], atol=1e-15)


def test_preactivation_per_example_masks():
    rng = np.random.default_rng(3)
    U, W, b = rng.random((5, 4)), rng.normal(size=(4, 3)), rng.normal(size=3)
    M = rng.integers(0, 2, size=(5, 4, 3))
    z = stochastic_preactivation(U, W, M, b)
    for k in range(5):
        np.testing.assert_allclose(z[k], stochastic_preactivation(U[k], W, M[k], b), atol=1e-14)


def test_preactivation_shape_mismatch():
    with pytest.raises(DimensionError):
        stochastic_preactivation(np.ones(3), np.ones((2, 2)), np.ones((2, 2)), np.zeros(2))
    with pytest.raises(DimensionError):
        stochastic_preactivation(np.ones(2), np.ones((2, 2)), np.ones((3, 2)), np.zeros(2))


# -- activation_probability --------------------------------------------------

def test_activation_values():
    assert activation_probability(0.0) == 0.5
    assert abs(activation_probability(8.0) - 1.0) <= 1e-12
    assert abs(activation_probability(-8.0)) <= 1e-12
    # frozen from the Taylor-series oracle
    assert abs(activation_probability(1.0) - 0.9213503964748574) <= 1e-12


@pytest.mark.parametrize("z", [-2.5, -1.0, -0.3, 0.0, 0.7, 1.0, 2.0, 3.0])
def test_activation_matches_taylor_oracle(z):
    assert abs(activation_probability(z) - act(z)) <= 1e-12


def test_activation_rejects_nonfinite():
    with pytest.raises(NumericError):
        activation_probability([0.0, np.inf])


@given(arrays(np.float64, 20, elements=finite))
def test_activation_symmetry_and_range(z):
    a, b = activation_probability(z), activation_probability(-z)
    np.testing.assert_allclose(a + b, 1.0, atol=1e-12)
    assert np.all((a >= 0) & (a <= 1))


@given(finite, finite)
def test_activation_monotone(x, y):
    lo, hi = sorted((x, y))
    assert activation_probability(lo) <= activation_probability(hi)


# -- sample_states ----------------------------------------------------------

def test_states_degenerate():
    rng = np.random.default_rng(0)
    assert np.array_equal(sample_states(np.ones(50), rng), np.ones(50))
    assert np.array_equal(sample_states(np.zeros(50), rng), np.zeros(50))


def test_states_frequency_point_seven():
    s = sample_states(np.full(10_000, 0.7), np.random.default_rng(4))
    assert abs(s.mean() - 0.7) <= 0.014


@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_states_three_sigma(q):
    n = 100_000
    s = sample_states(np.full(n, q), np.random.default_rng(int(q * 10)))
    assert abs(s.mean() - q) <= 3 * math.sqrt(q * (1 - q) / n)


def test_states_strict_comparison():
    class Fixed:
        def random(self, shape):
            return np.full(shape, 0.25)
    assert sample_states(np.array([0.25, 0.2500001]), Fixed()).tolist() == [0.0, 1.0]


def test_states_reject_bad_probability():
    with pytest.raises(ParameterError):
        sample_states([0.2, 1.2], np.random.default_rng(0))


# -- expected_preactivation --------------------------------------------------

def test_expected_degenerate():
    rng = np.random.default_rng(5)
    u, W, b = rng.random(4), rng.normal(size=(4, 3)), rng.normal(size=3)
    np.testing.assert_allclose(expected_preactivation(u, W, b, 1.0), u @ W + b, atol=1e-15)
    np.testing.assert_array_equal(expected_preactivation(u, W, b, 0.0), b)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_mask_mean_law(n, m, p, seed):
    rng = np.random.default_rng(seed)
    u, W, b = rng.random(n), rng.normal(size=(n, m)), rng.normal(size=m)
    mean = mask_mean_preactivation(u.tolist(), W.tolist(), b.tolist(), p)
    np.testing.assert_allclose(expected_preactivation(u, W, b, p), mean, rtol=0, atol=1e-12)


# -- cd_step ---------------------------------------------------------------

def test_cd_step_zero_fixed_point():
    B, lr = 6, 0.1
    net = small_net(4, 3)
    res = cd_step(np.zeros((B, 4)), net, np.ones((4, 3)), np.random.default_rng(0), lr)
    np.testing.assert_array_equal(res.data_exp, np.zeros((4, 3)))
    np.testing.assert_allclose(res.rec_exp, 0.25 * B * np.ones((4, 3)), atol=1e-15)
    np.testing.assert_allclose(res.weight_delta, -lr * 0.25 * np.ones((4, 3)), atol=1e-15)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_cd_step_matches_scalar_trace(seed):
    rng = np.random.default_rng(100 + seed)
    W = rng.normal(size=(2, 1))
    net = SsmNetwork(W, rng.normal(size=1) * 0.1, np.zeros(2), np.zeros((1, 2)), 1.0)
    batch = rng.random((1, 2))
    mask = np.ones((2, 1), dtype=np.uint8)
    draws = np.random.default_rng(seed).random((1, 1))
    res = cd_step(batch, net, mask, np.random.default_rng(seed), 0.05)
    delta, d_exp, r_exp = cd_trace(batch.tolist(), W.tolist(), mask.tolist(),
                                   net.b_hidden.tolist(), draws.tolist(), 0.05)
    np.testing.assert_allclose(res.weight_delta, delta, rtol=0, atol=1e-12)
    np.testing.assert_allclose(res.data_exp, d_exp, rtol=0, atol=1e-12)
    np.testing.assert_allclose(res.rec_exp, r_exp, rtol=0, atol=1e-12)


def test_cd_step_trace_with_partial_mask_and_batch():
    rng = np.random.default_rng(11)
    W = rng.normal(size=(3, 2))
    net = SsmNetwork(W, np.array([0.1, -0.2]), np.zeros(3), np.zeros((2, 2)), 0.5)
    batch = rng.random((4, 3))
    mask = np.array([[1, 0], [1, 1], [0, 1]], dtype=np.uint8)
    res = cd_step(batch, net, mask, np.random.default_rng(9), 0.2)
    draws = np.random.default_rng(9).random((4, 2))
    delta, _, _ = cd_trace(batch.tolist(), W.tolist(), mask.tolist(), [0.1, -0.2], draws.tolist(), 0.2)
    np.testing.assert_allclose(res.weight_delta, delta, rtol=0, atol=1e-12)


def test_cd_step_equal_expectations_give_zero():
    # zero data and a saturated-off visible layer: both expectations vanish
    net = small_net(2, 2, W=[[0.3, -0.1], [0.2, 0.4]])
    net.b_visible[:] = -50.0
    res = cd_step(np.zeros((3, 2)), net, np.ones((2, 2)), np.random.default_rng(0), 0.3)
    np.testing.assert_array_equal(res.data_exp, res.rec_exp)
    np.testing.assert_array_equal(res.weight_delta, np.zeros((2, 2)))


def test_cd_step_leaves_biases():
    net = small_net(3, 2, W=np.full((3, 2), 0.2))
    before = (net.b_hidden.copy(), net.b_visible.copy())
    cd_step(np.ones((2, 3)), net, np.ones((3, 2)), np.random.default_rng(0), 0.1)
    assert np.array_equal(before[0], net.b_hidden) and np.array_equal(before[1], net.b_visible)


def test_cd_step_errors():
    net = small_net(2, 1)
    with pytest.raises(ParameterError):
        cd_step(np.zeros((0, 2)), net, np.ones((2, 1)), np.random.default_rng(0), 0.1)
    with pytest.raises(DimensionError):
        cd_step(np.zeros((1, 3)), net, np.ones((2, 1)), np.random.default_rng(0), 0.1)


# -- reconstruct -------------------------------------------------------------

def test_reconstruct_zero_weights():
    net = small_net(5, 3)
    out = reconstruct(net, np.ones(5), np.ones((5, 3)), np.random.default_rng(0))
    np.testing.assert_array_equal(out, np.full(5, 0.5))


def test_reconstruct_masked_out_uses_visible_bias():
    net = small_net(3, 2, W=np.ones((3, 2)))
    net.b_visible[:] = [0.2, -0.4, 1.0]
    out = reconstruct(net, np.ones(3), np.zeros((3, 2)), np.random.default_rng(0))
    np.testing.assert_allclose(out, activation_probability(net.b_visible), atol=0)


def test_reconstruct_forced_hidden():
    net = small_net(1, 1, W=[[2.0]])
    out = reconstruct(net, np.ones(1), np.ones((1, 1)), hidden=np.ones(1))
    # 0.5 (1 + erf 2) from the Taylor oracle
    assert abs(out[0] - 0.9976611325094765) <= 1e-6
    assert abs(out[0] - act(2.0)) <= 1e-12


# -- train -------------------------------------------------------------------

def test_train_zero_epochs_returns_init():
    X, y = bars_and_stripes()
    cfg = SsmConfig(num_epochs=0, seed=3)
    net, metrics = train(X, y, cfg)
    assert metrics == []
    np.testing.assert_array_equal(net.W, init_network(cfg).W)


def test_train_zero_learning_rate():
    X, _ = bars_and_stripes()
    cfg = SsmConfig(num_epochs=5, learn_rate=0.0, seed=1)
    net, _ = train(X, None, cfg)
    np.testing.assert_array_equal(net.W, init_network(cfg).W)


@pytest.mark.parametrize("policy", ["per-epoch", "per-phase", "per-example"])
def test_train_deterministic(policy):
    X, y = bars_and_stripes()
    cfg = SsmConfig(num_epochs=8, mask_refresh=policy, seed=42, update_biases=True)
    a, ma = train(X, y, cfg)
    b, mb = train(X, y, cfg)
    for name in ("W", "b_hidden", "b_visible", "W_out"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert ma == mb


def test_train_bias_flag():
    X, _ = bars_and_stripes()
    net, _ = train(X, None, SsmConfig(num_epochs=3))
    assert not net.b_hidden.any() and not net.b_visible.any()
    net, _ = train(X, None, SsmConfig(num_epochs=3, update_biases=True))
    assert net.b_hidden.any() and net.b_visible.any()


def test_train_p_one_sampling_only_randomness():
    # with p = 1 every mask is all ones regardless of the mask stream
    X, _ = bars_and_stripes()
    cfg = SsmConfig(num_epochs=3, p=1.0, mask_refresh="per-phase")

    class Ones:
        p = 1.0

        def draw(self, shape):
            return np.ones(shape, dtype=np.uint8)

    a, _ = train(X, None, cfg)
    b, _ = train(X, None, cfg, mask_source=Ones())
    assert np.array_equal(a.W, b.W)


def test_train_metrics_shape():
    X, _ = bars_and_stripes()
    _, metrics = train(X, None, SsmConfig(num_epochs=4))
    assert [m.epoch for m in metrics] == [0, 1, 2, 3]
    assert all(m.reconstruction_error >= 0 and m.mean_abs_weight_delta >= 0 for m in metrics)


def test_train_divergence_names_epoch():
    X = np.ones((4, 2))
    cfg = SsmConfig(num_visible=2, num_hidden=1, num_epochs=3, learn_rate=1e308, batch_size=4)
    with pytest.raises(DivergedTrainingError) as exc:
        train(X, None, cfg)
    assert exc.value.epoch in (0, 1, 2)
    assert f"epoch {exc.value.epoch}" in str(exc.value)


def test_train_rejects_bad_labels():
    X, y = bars_and_stripes()
    with pytest.raises(ParameterError):
        train(X, y + 5, SsmConfig(num_epochs=1))


def test_config_validation():
    with pytest.raises(ParameterError):
        SsmConfig(p=1.2)
    with pytest.raises(ParameterError):
        SsmConfig(num_hidden=0)
    with pytest.raises(ParameterError):
        SsmConfig(mask_refresh="sometimes")
    with pytest.raises(ParameterError):
        SsmConfig(learn_rate=float("inf"))


def test_forward_reference_all_ones_equals_mean_field_at_p1():
    rng = np.random.default_rng(0)
    net = SsmNetwork(rng.normal(size=(4, 3)), rng.normal(size=3), np.zeros(4), rng.normal(size=(3, 2)), 1.0)
    v = rng.random((6, 4))
    a = forward_reference(net, v, (np.ones((4, 3)), np.ones((3, 2))))
    b = forward_mean_field(net, v)
    np.testing.assert_allclose(a.scores, b.scores, atol=1e-15)
