"""Quantum circuit classifiers with exact simulation and shift-rule gradients.

The model runs a data-encoding feature map followed by a trainable
variational form, measures all qubits and reads the class from the parity
of the outcome bit string: class 0 <-> even parity, class 1 <-> odd.

Gradients of log p(y|x; theta) are computed with the parameter-shift rule,
which is exact for RY generators: dp/dtheta_j = [p(theta_j + pi/2) -
p(theta_j - pi/2)] / 2.  Shifted evaluations reuse cached per-layer states,
and all circuit kernels run batched over the input samples.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import _fastpath, training
from .circuits import QnnSpec, build_feature_circuit, build_var_circuit, dump_gates
from .errors import ValidationError
from .rng import RngStream
from .statevec import (
    MAX_QUBITS,
    apply_ry,
    cnot_layer_perm,
    parity_even_array,
    run_gates,
    zero_amps,
)
from .validation import as_features, as_labels, as_theta, check_fitted

PROB_FLOOR = 1e-12  # guards division by p in the log-derivative


class QuantumClassifier(BaseEstimator, ClassifierMixin):
    """Binary classifier backed by an exactly-simulated parameterised circuit.

    Parameters mirror the circuit structure: ``feature_map`` is one of
    ``hard_zz`` / ``easy_angle`` / ``hard_zz_linear``; ``var_depth`` fixes
    the trainable parameter count at (var_depth + 1) * n_qubits.  Inputs
    must already be normalized to [-1, 1] per feature.
    """

    n_classes = 2

    def __init__(
        self,
        n_qubits: int = 4,
        feature_map: str = "hard_zz",
        feature_depth: int = 2,
        var_depth: int = 1,
        entanglement: str = "all_to_all",
        learning_rate: float = 0.1,
        n_iter: int = 100,
        random_state: int = 0,
    ):
        self.n_qubits = n_qubits
        self.feature_map = feature_map
        self.feature_depth = feature_depth
        self.var_depth = var_depth
        self.entanglement = entanglement
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.random_state = random_state

    # -- structure ---------------------------------------------------------

    @property
    def spec(self) -> QnnSpec:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValidationError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        return QnnSpec(
            n_qubits=self.n_qubits,
            feature_map=self.feature_map,
            feature_depth=self.feature_depth,
            var_depth=self.var_depth,
            entanglement=self.entanglement,
        )

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    @property
    def n_inputs(self) -> int:
        return self.n_qubits

    def sample_prior(self, rng: RngStream, k: int) -> np.ndarray:
        """Standard Gaussian prior draws, fed to the feature map as angles.

        Prior samples are not rescaled onto [-1, 1]: both model families see
        the same raw draws, and compressing the angles collapses the angle
        encoding's Fisher spectrum badly enough to invert the capacity
        ordering against the classical comparator.
        """
        return rng.standard_normal((k, self.n_qubits))

    # -- circuit evaluation --------------------------------------------------

    def encode_inputs(self, X) -> np.ndarray:
        """Feature-map statevectors for a batch, shape (m, 2^S)."""
        spec = self.spec
        X = as_features(X, spec.n_qubits)
        amps = zero_amps(spec.n_qubits, (X.shape[0],))
        return run_gates(amps, spec.n_qubits, build_feature_circuit(spec, X))

    def _entangler_perm(self):
        spec = self.spec
        return cnot_layer_perm(
            spec.n_qubits, tuple(spec.pairs(spec.entanglement == "linear"))
        )

    def _apply_var_layers(self, amps, theta, start, stop):
        """Apply variational layers [start, stop) in place.

        Layer 0 is the first RY layer; every later layer is the entangling
        permutation followed by its RY layer.
        """
        if stop <= start:
            return amps
        spec = self.spec
        s = spec.n_qubits
        if _fastpath.AVAILABLE:
            half = theta.reshape(spec.var_depth + 1, s)[start:stop] / 2.0
            do_perm = np.arange(start, stop) > 0
            flat = amps.reshape(-1, amps.shape[-1])
            _fastpath.apply_var_layers(
                flat, self._entangler_perm(), np.cos(half), np.sin(half), do_perm
            )
            return amps
        for layer in range(start, stop):
            if layer > 0:
                amps[...] = np.take(amps, self._entangler_perm(), axis=-1)
            for q in range(s):
                apply_ry(amps, s, q, theta[layer * s + q])
        return amps

    def _var_layer_states(self, feat, theta):
        """States after variational layer 0..D, each shape like ``feat``."""
        spec = self.spec
        state = feat.copy()
        states = []
        for layer in range(spec.var_depth + 1):
            self._apply_var_layers(state, theta, layer, layer + 1)
            states.append(state.copy())
        return states

    def _prob_even(self, feat, theta):
        state = self._apply_var_layers(feat.copy(), theta, 0, self.spec.var_depth + 1)
        return parity_even_array(state, self.spec.n_qubits)

    def _prob_even_and_grad(self, feat, theta):
        """p_even and its full shift-rule gradient, shapes (m,), (m, d).

        All 2S shifted evaluations of one layer share the identical suffix
        circuit, so they evolve as a single batch.  RY(theta + s) =
        RY(s) RY(theta) on the same qubit, so one extra rotation on the
        cached post-layer state realises each shifted circuit.
        """
        spec = self.spec
        s = spec.n_qubits
        states = self._var_layer_states(feat, theta)
        p_even = parity_even_array(states[-1], s)
        grad = np.empty((feat.shape[0], spec.n_params))
        for layer in range(spec.var_depth + 1):
            batch = np.broadcast_to(
                states[layer], (2 * s,) + states[layer].shape
            ).copy()
            for q in range(s):
                apply_ry(batch[2 * q], s, q, math.pi / 2.0)
                apply_ry(batch[2 * q + 1], s, q, -math.pi / 2.0)
            self._apply_var_layers(batch, theta, layer + 1, spec.var_depth + 1)
            shifted = parity_even_array(batch, s)
            for q in range(s):
                grad[:, layer * s + q] = (shifted[2 * q] - shifted[2 * q + 1]) / 2.0
        return p_even, grad

    # -- probabilistic model interface --------------------------------------

    def probs_at(self, X, theta) -> np.ndarray:
        """Conditional class probabilities at explicit parameters, (m, 2)."""
        theta = as_theta(theta, self.n_params)
        p_even = np.atleast_1d(self._prob_even(self.encode_inputs(X), theta))
        return np.stack([p_even, 1.0 - p_even], axis=1)

    def conditional_prob(self, x, theta=None) -> tuple[float, float]:
        theta = self._resolve_theta(theta)
        p = self.probs_at(np.asarray(x, dtype=np.float64).reshape(1, -1), theta)
        return float(p[0, 0]), float(p[0, 1])

    def dump_circuit(self, x, theta=None) -> str:
        """Textual gate listing of the full circuit, one gate per line."""
        theta = self._resolve_theta(theta)
        spec = self.spec
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        gates = build_feature_circuit(spec, x) + build_var_circuit(spec, theta)
        return dump_gates(gates)

    def log_prob_and_grad(self, X, y, theta):
        """log p(y|x), its parameter gradient, and the clamp count.

        Returns (logp (m,), G (m, d), n_clamped); rows with p(y|x) below
        the probability floor get a clamped denominator.
        """
        theta = as_theta(theta, self.n_params)
        X = as_features(X, self.n_qubits)
        y = as_labels(y, X.shape[0], self.n_classes)
        p_even, dp_even = self._prob_even_and_grad(self.encode_inputs(X), theta)
        sign = np.where(y == 0, 1.0, -1.0)
        p_y = np.where(y == 0, p_even, 1.0 - p_even)
        clamped = p_y < PROB_FLOOR
        p_safe = np.maximum(p_y, PROB_FLOOR)
        grads = (sign / p_safe)[:, None] * dp_even
        return np.log(p_safe), grads, int(np.count_nonzero(clamped))

    def grad_log_prob(self, x, y, theta=None) -> np.ndarray:
        theta = self._resolve_theta(theta)
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        _, grads, _ = self.log_prob_and_grad(x, np.asarray([y]), theta)
        return grads[0]

    def make_loss_grad_fn(self, X, y):
        """Cross-entropy loss/gradient closure reusing encoded inputs."""
        X = as_features(X, self.n_qubits)
        y = as_labels(y, X.shape[0], self.n_classes)
        feat = self.encode_inputs(X)
        sign = np.where(y == 0, 1.0, -1.0)

        def loss_grad(theta):
            p_even, dp_even = self._prob_even_and_grad(feat, theta)
            p_y = np.maximum(np.where(y == 0, p_even, 1.0 - p_even), PROB_FLOOR)
            loss = -float(np.mean(np.log(p_y)))
            grad = -np.mean((sign / p_y)[:, None] * dp_even, axis=0)
            return loss, grad

        return loss_grad

    def _resolve_theta(self, theta):
        if theta is None:
            check_fitted(self)
            return self.theta_
        return as_theta(theta, self.n_params)

    # -- sklearn surface -----------------------------------------------------

    def fit(self, X, y):
        X = as_features(X, self.n_qubits)
        y = as_labels(y, X.shape[0], self.n_classes)
        record = training.train_model(
            self,
            X,
            y,
            training.TrainConfig(learning_rate=self.learning_rate, n_iter=self.n_iter),
            RngStream(self.random_state),
        )
        self.classes_ = np.arange(self.n_classes)
        self.theta_ = record.final_theta
        self.loss_curve_ = record.loss_trace
        self.train_record_ = record
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_fitted(self)
        return self.probs_at(X, self.theta_)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)
