"""scikit-learn estimators around the reference model and the crossbar model."""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin, clone
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_unit_interval
from .core import SsmConfig, forward_mean_field, sample_mask, train
from .crossbar import MemristorDevice, equivalence_report, forward_hw, map_weights
from .csr import CsrMasks, csr_new, quantize_p


class SynapticSamplingMachine(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Synaptic Sampling Machine with a winner-take-all readout.

    Unsupervised contrastive learning shapes the visible-hidden weights while
    every synapse is gated by a Bernoulli(``p``) mask; when ``y`` is given a
    readout layer is trained on the hidden activation probabilities.

    Parameters
    ----------
    n_hidden : int, default=8
        Number of hidden units.

    p : float, default=0.5
        Probability that a synapse transmits on a given use.

    learning_rate : float, default=0.05
        Step size shared by the contrastive rule and the readout delta rule.

    n_epochs : int, default=200
        Passes over the training set.

    batch_size : int, default=10
        Examples per update.

    mask_refresh : {"per-epoch", "per-phase", "per-example"}, default="per-epoch"
        How often synapse masks are redrawn during training.

    weight_init_scale : float, default=0.1
        Weights start uniform in ``[-weight_init_scale, weight_init_scale]``.

    update_biases : bool, default=False
        Also adapt the visible and hidden biases with the contrastive rule.

    n_outputs : int or None, default=None
        Readout width. Defaults to the number of classes, or 2 without labels.

    random_state : int, default=0
        Seed for initialization, masks, unit sampling and shuffling.

    Attributes
    ----------
    network_ : SsmNetwork
        Trained weights and biases.

    metrics_ : list of EpochMetrics
        Per-epoch reconstruction error and mean weight change.

    classes_ : ndarray of shape (n_classes,)
        Class labels seen in ``fit``; absent for unsupervised fits.

    n_features_in_ : int
        Number of visible units.

    Notes
    -----
    ``transform``, ``predict`` and ``decision_function`` use mean-field
    inference: every mask is replaced by its expectation ``p``.
    """

    def __init__(self, n_hidden=8, p=0.5, learning_rate=0.05, n_epochs=200, batch_size=10,
                 mask_refresh="per-epoch", weight_init_scale=0.1, update_biases=False,
                 n_outputs=None, random_state=0):
        self.n_hidden = n_hidden
        self.p = p
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.batch_size = batch_size
        self.mask_refresh = mask_refresh
        self.weight_init_scale = weight_init_scale
        self.update_biases = update_biases
        self.n_outputs = n_outputs
        self.random_state = random_state

    def _config(self, n_features, n_outputs):
        return SsmConfig(
            num_visible=n_features, num_hidden=self.n_hidden, num_outputs=n_outputs,
            p=self.p, learn_rate=self.learning_rate, num_epochs=self.n_epochs,
            batch_size=self.batch_size, seed=self.random_state,
            weight_init_scale=self.weight_init_scale, mask_refresh=self.mask_refresh,
            update_biases=self.update_biases,
        )

    def fit(self, X, y=None, mask_source=None):
        X = check_unit_interval(check_array(X, dtype=np.float64), "X")
        labels = None
        n_outputs = self.n_outputs
        if y is not None:
            enc = LabelEncoder().fit(y)
            self.classes_ = enc.classes_
            labels = enc.transform(y)
            n_outputs = n_outputs or len(self.classes_)
        self.n_features_in_ = X.shape[1]
        self.config_ = self._config(X.shape[1], n_outputs or 2)
        self.network_, self.metrics_ = train(X, labels, self.config_, mask_source=mask_source)
        return self

    def _validate(self, X):
        check_is_fitted(self, "network_")
        X = check_unit_interval(check_array(X, dtype=np.float64), "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def transform(self, X):
        """Hidden activation probabilities."""
        X = self._validate(X)
        return forward_mean_field(self.network_, X).hidden

    def decision_function(self, X):
        """Readout scores fed to the winner-take-all stage."""
        X = self._validate(X)
        return forward_mean_field(self.network_, X).scores

    def predict(self, X):
        winner = np.argmax(self.decision_function(X), axis=1)
        if hasattr(self, "classes_"):
            return self.classes_[winner]
        return winner


def _mask_pairs(net, n, rng_source, p, seed, csr_bits=10, ticks_per_sample=1, csr_ones=None):
    """One ``(hidden_mask, readout_mask)`` pair per example, in input order."""
    if rng_source == "csr":
        k = csr_ones if csr_ones is not None else quantize_p(p, csr_bits)[0]
        src = CsrMasks(csr_new(csr_bits, k, seed), ticks_per_sample)
        return [(src.draw(net.W.shape), src.draw(net.W_out.shape)) for _ in range(n)]
    rng = np.random.default_rng(seed)
    return [(sample_mask(net.W.shape, p, rng), sample_mask(net.W_out.shape, p, rng))
            for _ in range(n)]


class CrossbarSSM(ClassifierMixin, BaseEstimator):
    """Hardware-level inference for a trained :class:`SynapticSamplingMachine`.

    ``fit`` trains (a clone of) ``estimator`` in software, then maps its
    weights onto memristor crossbars. ``predict`` runs every example through
    the crossbars with freshly drawn synapse masks and reads the WTA winner.

    Parameters
    ----------
    estimator : SynapticSamplingMachine or None
        Software model to train; a default instance when None.
    quant_levels : int, default=0
        Conductance levels per device, 0 for continuous.
    rng_source : {"ideal", "csr"}, default="ideal"
        Independent Bernoulli masks, or masks read from a circular shift register.
    csr_bits, ticks_per_sample : int
        Ring length and clock ticks between successive mask reads.
    device : MemristorDevice or None
    random_state : int, default=0
        Seed for inference-time masks.
    """

    def __init__(self, estimator=None, quant_levels=0, rng_source="ideal", csr_bits=10,
                 ticks_per_sample=1, device=None, random_state=0):
        self.estimator = estimator
        self.quant_levels = quant_levels
        self.rng_source = rng_source
        self.csr_bits = csr_bits
        self.ticks_per_sample = ticks_per_sample
        self.device = device
        self.random_state = random_state

    def fit(self, X, y=None):
        est = clone(self.estimator) if self.estimator is not None else SynapticSamplingMachine()
        self.estimator_ = est.fit(X, y)
        self.program_ = map_weights(self.estimator_.network_, self.device or MemristorDevice(),
                                    self.quant_levels)
        if hasattr(self.estimator_, "classes_"):
            self.classes_ = self.estimator_.classes_
        self.n_features_in_ = self.estimator_.n_features_in_
        return self

    def _masks(self, n):
        net = self.estimator_.network_
        return _mask_pairs(net, n, self.rng_source, net.p, self.random_state,
                           self.csr_bits, self.ticks_per_sample)

    def forward(self, X):
        check_is_fitted(self, "program_")
        X = check_array(X, dtype=np.float64)
        masks = self._masks(X.shape[0])
        m1 = np.stack([m[0] for m in masks])
        m2 = np.stack([m[1] for m in masks])
        return forward_hw(self.program_, X, (m1, m2))

    def decision_function(self, X):
        return self.forward(X).output_scores

    def predict(self, X):
        winner = self.forward(X).winner
        if hasattr(self, "classes_"):
            return self.classes_[winner]
        return winner

    def equivalence(self, X):
        """Software/hardware agreement under the masks ``predict`` would use."""
        check_is_fitted(self, "program_")
        X = check_array(X, dtype=np.float64)
        return equivalence_report(self.estimator_.network_, self.program_, X,
                                  self._masks(X.shape[0]))
