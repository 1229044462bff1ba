"""Software-reference Synaptic Sampling Machine.

Synapses (not neurons) are unreliable: every weight is gated by a Bernoulli
mask before the weighted sum, and unit probabilities come from an erf
transfer curve. Learning is the two-phase contrastive rule that compares
data-driven and reconstruction-driven visible/hidden co-activations.

Masks are plain ``uint8`` arrays of zeros and ones. A mask either has the
shape of the weight matrix it gates, or carries a leading batch axis so that
each example in a batch sees its own synapse realization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import erf

from ._validation import check_count, check_finite, check_probability, check_unit_interval
from .exceptions import DimensionError, DivergedTrainingError, NumericError, ParameterError

MASK_REFRESH_POLICIES = ("per-epoch", "per-phase", "per-example")

MaskTensor = np.ndarray


@dataclass(frozen=True)
class SsmConfig:
    num_visible: int = 16
    num_hidden: int = 8
    num_outputs: int = 2
    p: float = 0.5
    learn_rate: float = 0.05
    num_epochs: int = 200
    batch_size: int = 10
    seed: int = 0
    weight_init_scale: float = 0.1
    mask_refresh: str = "per-epoch"
    update_biases: bool = False

    def __post_init__(self):
        for name in ("num_visible", "num_hidden", "num_outputs", "batch_size"):
            check_count(getattr(self, name), name)
        check_count(self.num_epochs, "num_epochs", minimum=0)
        check_probability(self.p)
        if not math.isfinite(self.learn_rate) or self.learn_rate < 0:
            raise ParameterError(f"learn_rate must be finite and >= 0, got {self.learn_rate}")
        if not math.isfinite(self.weight_init_scale) or self.weight_init_scale < 0:
            raise ParameterError("weight_init_scale must be finite and >= 0")
        if self.mask_refresh not in MASK_REFRESH_POLICIES:
            raise ParameterError(
                f"mask_refresh must be one of {MASK_REFRESH_POLICIES}, got {self.mask_refresh!r}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")


@dataclass
class SsmNetwork:
    """Weights and biases of the two-crossbar stochastic network.

    ``W`` is visible x hidden, ``W_out`` is hidden x outputs (the readout
    layer that feeds the winner-take-all stage).
    """

    W: np.ndarray
    b_hidden: np.ndarray
    b_visible: np.ndarray
    W_out: np.ndarray
    p: float

    def __post_init__(self):
        self.W = check_finite(self.W, "W")
        self.b_hidden = check_finite(self.b_hidden, "b_hidden")
        self.b_visible = check_finite(self.b_visible, "b_visible")
        self.W_out = check_finite(self.W_out, "W_out")
        self.p = check_probability(self.p)
        n_v, n_h = self.W.shape
        if self.b_hidden.shape != (n_h,) or self.b_visible.shape != (n_v,):
            raise DimensionError("bias vectors do not match W")
        if self.W_out.ndim != 2 or self.W_out.shape[0] != n_h:
            raise DimensionError("W_out must have one row per hidden unit")

    @property
    def num_visible(self):
        return self.W.shape[0]

    @property
    def num_hidden(self):
        return self.W.shape[1]

    @property
    def num_outputs(self):
        return self.W_out.shape[1]

    def copy(self):
        return SsmNetwork(self.W.copy(), self.b_hidden.copy(), self.b_visible.copy(),
                          self.W_out.copy(), self.p)

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in (self.W, self.b_hidden, self.b_visible, self.W_out))


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    reconstruction_error: float
    mean_abs_weight_delta: float


class CDResult(NamedTuple):
    weight_delta: np.ndarray
    data_exp: np.ndarray
    rec_exp: np.ndarray


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------

def sample_mask(shape, p, rng) -> MaskTensor:
    """Draw one Bernoulli(p) gate per synapse."""
    p = check_probability(p)
    return (rng.random(shape) < p).astype(np.uint8)


def _masked(W, mask):
    if mask.shape[-2:] != W.shape:
        raise DimensionError(f"mask shape {mask.shape} does not match weights {W.shape}")
    return W * mask


def _up(u, W_eff):
    """Weighted sum from the row side of ``W_eff`` to its column side."""
    if W_eff.ndim == 3:
        if u.ndim != 2 or u.shape[0] != W_eff.shape[0]:
            raise DimensionError("per-example masks need one input row per mask")
        return np.einsum("bn,bnm->bm", u, W_eff)
    return u @ W_eff


def _down(h, W_eff):
    if W_eff.ndim == 3:
        return np.einsum("bm,bnm->bn", h, W_eff)
    return h @ W_eff.T


def stochastic_preactivation(u, W, mask, bias):
    """``z_j = sum_i mask_ij * u_i * W_ij + bias_j``.

    ``u`` may be a single vector or a batch of rows.
    """
    u = check_finite(u, "u")
    W = check_finite(W, "W")
    bias = check_finite(bias, "bias")
    mask = np.asarray(mask)
    if W.ndim != 2 or u.shape[-1] != W.shape[0] or bias.shape != (W.shape[1],):
        raise DimensionError(f"incompatible shapes u={u.shape}, W={W.shape}, bias={bias.shape}")
    return _up(u, _masked(W, mask)) + bias


def expected_preactivation(u, W, bias, p):
    """Mean of :func:`stochastic_preactivation` over all Bernoulli(p) masks."""
    u = check_finite(u, "u")
    W = check_finite(W, "W")
    bias = check_finite(bias, "bias")
    p = check_probability(p)
    if W.ndim != 2 or u.shape[-1] != W.shape[0] or bias.shape != (W.shape[1],):
        raise DimensionError(f"incompatible shapes u={u.shape}, W={W.shape}, bias={bias.shape}")
    return p * (u @ W) + bias


def activation_probability(z):
    """Probability that a unit fires, ``0.5 * (1 + erf(z))``."""
    z = check_finite(z, "z")
    return 0.5 * (1.0 + erf(z))


def sample_states(probs, rng):
    """Binary unit states: 1 where ``probs`` strictly exceeds a uniform [0, 1) draw."""
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(~((probs >= 0.0) & (probs <= 1.0))):
        raise ParameterError("probabilities must lie in [0, 1]")
    return (probs > rng.random(probs.shape)).astype(np.float64)


# ---------------------------------------------------------------------------
# Learning rule
# ---------------------------------------------------------------------------

def _check_batch(batch, net):
    batch = check_unit_interval(batch, "batch")
    if batch.ndim != 2:
        raise DimensionError("batch must be a 2-D array of examples")
    if batch.shape[0] == 0:
        raise ParameterError("empty batch")
    if batch.shape[1] != net.num_visible:
        raise DimensionError(f"batch has {batch.shape[1]} columns, network expects {net.num_visible}")
    return batch


def _contrastive_phases(batch, net, mask, rng, rec_mask=None, rec_hidden_bias=False):
    if rec_mask is None:
        rec_mask = mask
    mask = np.asarray(mask)
    rec_mask = np.asarray(rec_mask)
    for m in (mask, rec_mask):
        if m.ndim == 3 and m.shape[0] != batch.shape[0]:
            raise DimensionError("per-example masks need one mask per batch row")
    W_data = _masked(net.W, mask)
    W_rec = _masked(net.W, rec_mask)

    # data phase
    hid_prob = activation_probability(_up(batch, W_data) + net.b_hidden)
    hid_state = sample_states(hid_prob, rng)
    data_exp = batch.T @ hid_prob

    # reconstruction phase: down from sampled hidden states, up again from
    # the visible probabilities (not from sampled visible states)
    vis_prob = activation_probability(_down(hid_state, W_rec) + net.b_visible)
    z_rec = _up(vis_prob, W_rec)
    if rec_hidden_bias:
        z_rec = z_rec + net.b_hidden
    hid_prob_rec = activation_probability(z_rec)
    rec_exp = vis_prob.T @ hid_prob_rec
    return {
        "hid_prob": hid_prob,
        "hid_state": hid_state,
        "vis_prob": vis_prob,
        "hid_prob_rec": hid_prob_rec,
        "data_exp": data_exp,
        "rec_exp": rec_exp,
    }


def cd_step(batch, net, mask, rng, learn_rate, rec_mask=None) -> CDResult:
    """One contrastive update for the visible-hidden weights.

    ``rec_mask`` defaults to ``mask``; passing a separate mask resamples the
    synapses for the reconstruction phase. Biases are never touched here.
    """
    batch = _check_batch(batch, net)
    ph = _contrastive_phases(batch, net, mask, rng, rec_mask)
    delta = learn_rate * (ph["data_exp"] - ph["rec_exp"]) / batch.shape[0]
    return CDResult(delta, ph["data_exp"], ph["rec_exp"])


def reconstruct(net, v, mask, rng=None, hidden=None):
    """Visible probabilities after one up/down pass.

    The hidden state is sampled from ``v`` with ``rng`` unless given
    explicitly via ``hidden``.
    """
    v = check_finite(v, "v")
    mask = np.asarray(mask)
    if hidden is None:
        if rng is None:
            raise ParameterError("rng is required when the hidden state is not given")
        hid_prob = activation_probability(stochastic_preactivation(v, net.W, mask, net.b_hidden))
        hidden = sample_states(hid_prob, rng)
    hidden = np.asarray(hidden, dtype=np.float64)
    if hidden.shape[-1] != net.num_hidden:
        raise DimensionError("hidden state does not match network")
    if v.shape[-1] != net.num_visible:
        raise DimensionError("visible vector does not match network")
    return activation_probability(_down(hidden, _masked(net.W, mask)) + net.b_visible)


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

class ForwardResult(NamedTuple):
    preactivation: np.ndarray
    hidden: np.ndarray
    scores: np.ndarray


def forward_reference(net, v, masks):
    """Two-layer forward pass under explicit masks ``(hidden_mask, readout_mask)``.

    The readout layer has no bias; its scores are erf probabilities of the
    masked weighted sum of hidden activation probabilities.
    """
    m1, m2 = masks
    z = stochastic_preactivation(v, net.W, m1, net.b_hidden)
    hidden = activation_probability(z)
    scores = activation_probability(
        stochastic_preactivation(hidden, net.W_out, m2, np.zeros(net.num_outputs))
    )
    return ForwardResult(z, hidden, scores)


def forward_mean_field(net, v):
    """Forward pass with every mask replaced by its expectation ``p``."""
    z = expected_preactivation(v, net.W, net.b_hidden, net.p)
    hidden = activation_probability(z)
    scores = activation_probability(
        expected_preactivation(hidden, net.W_out, np.zeros(net.num_outputs), net.p)
    )
    return ForwardResult(z, hidden, scores)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

class BernoulliMasks:
    """Ideal mask source: independent Bernoulli(p) gates from a numpy Generator."""

    def __init__(self, p, rng):
        self.p = check_probability(p)
        self.rng = rng

    def draw(self, shape):
        return sample_mask(shape, self.p, self.rng)


def _streams(seed):
    init, masks, sampling, shuffle = np.random.SeedSequence(int(seed)).spawn(4)
    return (np.random.default_rng(init), np.random.default_rng(masks),
            np.random.default_rng(sampling), np.random.default_rng(shuffle))


def init_network(cfg: SsmConfig, p=None) -> SsmNetwork:
    """Seeded uniform initialization in ``[-scale, scale]``; biases start at zero."""
    rng = _streams(cfg.seed)[0]
    s = cfg.weight_init_scale
    W = rng.uniform(-s, s, size=(cfg.num_visible, cfg.num_hidden))
    W_out = rng.uniform(-s, s, size=(cfg.num_hidden, cfg.num_outputs))
    return SsmNetwork(W, np.zeros(cfg.num_hidden), np.zeros(cfg.num_visible), W_out,
                      cfg.p if p is None else p)


@dataclass
class _EpochMasks:
    source: object
    policy: str
    shape: tuple
    shape_out: tuple
    _epoch: dict = field(default_factory=dict)

    def new_epoch(self):
        if self.policy == "per-epoch":
            self._epoch = {"w": self.source.draw(self.shape), "out": self.source.draw(self.shape_out)}

    def for_batch(self, n):
        """Returns (data_mask, rec_mask, readout_mask) for a batch of ``n`` rows."""
        if self.policy == "per-epoch":
            return self._epoch["w"], self._epoch["w"], self._epoch["out"]
        if self.policy == "per-phase":
            return self.source.draw(self.shape), self.source.draw(self.shape), self.source.draw(self.shape_out)
        w = np.stack([self.source.draw(self.shape) for _ in range(n)])
        out = np.stack([self.source.draw(self.shape_out) for _ in range(n)])
        return w, w, out


def train(dataset, labels, cfg: SsmConfig, mask_source=None, callback=None):
    """Fit an :class:`SsmNetwork` to ``dataset``.

    Returns ``(network, metrics)`` where ``metrics`` holds one
    :class:`EpochMetrics` per epoch. ``mask_source`` is any object with a
    ``draw(shape)`` method and a ``p`` attribute; by default synapse gates are
    ideal Bernoulli draws. The network records the source's ``p``, which for
    a shift-register source is the realized, quantized value.

    When ``labels`` are given the readout layer is trained with a delta rule
    on hidden activation probabilities toward one-hot targets. With
    ``cfg.update_biases`` the reconstruction up-pass also includes the hidden
    bias, as in standard contrastive divergence.
    """
    X = check_unit_interval(dataset, "dataset")
    if X.ndim != 2 or X.shape[1] != cfg.num_visible:
        raise DimensionError(f"dataset must have {cfg.num_visible} columns")
    if X.shape[0] == 0 and cfg.num_epochs:
        raise ParameterError("cannot train on an empty dataset")
    targets = None
    if labels is not None:
        y = np.asarray(labels)
        if y.shape != (X.shape[0],):
            raise DimensionError("labels must have one entry per example")
        if np.any((y < 0) | (y >= cfg.num_outputs)) or np.any(y != np.round(y)):
            raise ParameterError(f"labels must be integers in [0, {cfg.num_outputs})")
        targets = np.eye(cfg.num_outputs)[y.astype(int)]

    _, mask_rng, sample_rng, shuffle_rng = _streams(cfg.seed)
    if mask_source is None:
        mask_source = BernoulliMasks(cfg.p, mask_rng)
    net = init_network(cfg, p=getattr(mask_source, "p", cfg.p))
    masks = _EpochMasks(mask_source, cfg.mask_refresh, net.W.shape, net.W_out.shape)
    history = []
    for epoch in range(cfg.num_epochs):
        W_start = net.W.copy()
        masks.new_epoch()
        order = shuffle_rng.permutation(X.shape[0])
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                sq_err = _run_epoch(X, targets, net, masks, cfg, sample_rng, order)
        except NumericError:
            raise DivergedTrainingError(epoch) from None
        if not net.is_finite():
            raise DivergedTrainingError(epoch)
        m = EpochMetrics(epoch, sq_err / X.size, float(np.mean(np.abs(net.W - W_start))))
        history.append(m)
        if callback is not None:
            callback(m)
    return net, history


def _run_epoch(X, targets, net, masks, cfg, sample_rng, order):
    """One pass over ``X`` in ``order``; updates ``net`` in place, returns summed squared error."""
    lr = cfg.learn_rate
    sq_err = 0.0
    for start in range(0, len(order), cfg.batch_size):
        idx = order[start:start + cfg.batch_size]
        batch = X[idx]
        B = batch.shape[0]
        m_data, m_rec, m_out = masks.for_batch(B)
        ph = _contrastive_phases(batch, net, m_data, sample_rng, m_rec,
                                 rec_hidden_bias=cfg.update_biases)
        sq_err += float(np.sum((batch - ph["vis_prob"]) ** 2))

        if targets is not None:
            scores = activation_probability(_up(ph["hid_prob"], _masked(net.W_out, m_out)))
            net.W_out += lr * ph["hid_prob"].T @ (targets[idx] - scores) / B
        net.W += lr * (ph["data_exp"] - ph["rec_exp"]) / B
        if cfg.update_biases:
            net.b_hidden += lr * np.mean(ph["hid_prob"] - ph["hid_prob_rec"], axis=0)
            net.b_visible += lr * np.mean(batch - ph["vis_prob"], axis=0)
    return sq_err
