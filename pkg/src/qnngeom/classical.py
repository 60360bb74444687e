"""Fully-connected feedforward classifiers with exact backpropagation.

Weights live in a single flat parameter vector (per-layer weight matrix,
then bias if enabled), so the same Fisher-information machinery drives the
quantum and classical models.  ``enumerate_topologies`` lists every layer
layout that realises an exact trainable-parameter budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import training
from .errors import ValidationError
from .rng import RngStream
from .validation import as_features, as_labels, as_theta, check_fitted

LEAKY_SLOPE = 0.01

DEFAULT_ACTIVATION = "relu"


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_deriv(z):
    return (z > 0.0).astype(np.float64)


def _leaky_relu(z):
    return np.where(z > 0.0, z, LEAKY_SLOPE * z)


def _leaky_relu_deriv(z):
    return np.where(z > 0.0, 1.0, LEAKY_SLOPE)


def _tanh_deriv(z):
    return 1.0 - np.tanh(z) ** 2


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _sigmoid_deriv(z):
    s = _sigmoid(z)
    return s * (1.0 - s)


ACTIVATIONS = {
    "relu": (_relu, _relu_deriv),
    "leaky_relu": (_leaky_relu, _leaky_relu_deriv),
    "tanh": (np.tanh, _tanh_deriv),
    "sigmoid": (_sigmoid, _sigmoid_deriv),
}


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class MlpTopology:
    """Layer layout of a feedforward network, input through output."""

    layer_sizes: tuple[int, ...]
    use_bias: bool = False
    activation: str = DEFAULT_ACTIVATION

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValidationError("topology needs at least input and output sizes")
        if any(s < 1 for s in self.layer_sizes):
            raise ValidationError("layer sizes must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")

    @property
    def param_count(self) -> int:
        sizes = self.layer_sizes
        count = sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))
        if self.use_bias:
            count += sum(sizes[1:])
        return count

    def spec_string(self) -> str:
        text = "-".join(str(s) for s in self.layer_sizes)
        if self.use_bias:
            text += ":bias"
        return f"{text}:{self.activation}"


def parse_topology(text: str) -> MlpTopology:
    """Parse ``s_in-h1-...-s_out[:bias][:activation]``."""
    parts = text.strip().split(":")
    try:
        sizes = tuple(int(tok) for tok in parts[0].split("-"))
    except ValueError:
        raise ValidationError(f"bad topology sizes in {text!r}") from None
    use_bias = False
    activation = DEFAULT_ACTIVATION
    for opt in parts[1:]:
        if opt == "bias":
            use_bias = True
        elif opt == "nobias":
            use_bias = False
        elif opt in ACTIVATIONS:
            activation = opt
        else:
            raise ValidationError(f"unknown topology option {opt!r} in {text!r}")
    return MlpTopology(sizes, use_bias, activation)


def enumerate_topologies(
    d: int,
    s_in: int,
    s_out: int,
    max_layers: int = 3,
    max_width: int = 256,
) -> list[MlpTopology]:
    """All layouts with <= max_layers hidden layers and exactly d parameters.

    Covers bias and no-bias variants; activation is left at the default and
    is not part of the structural search.  The list is ordered
    lexicographically by (depth, layer sizes, bias).
    """
    found = []
    for use_bias in (False, True):
        bias = int(use_bias)
        direct = s_in * s_out + bias * s_out
        if direct == d:
            found.append(MlpTopology((s_in, s_out), use_bias))
        for n_hidden in range(1, max_layers + 1):
            for prefix in _prefixes(n_hidden - 1, max_width):
                sizes = (s_in,) + prefix
                fixed = sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))
                fixed += bias * (sum(prefix) + s_out)
                coeff = sizes[-1] + s_out + bias
                rem = d - fixed
                if rem <= 0 or rem % coeff:
                    continue
                last = rem // coeff
                if 1 <= last <= max_width:
                    found.append(
                        MlpTopology(sizes + (last, s_out), use_bias)
                    )
    found.sort(key=lambda t: (len(t.layer_sizes), t.layer_sizes, t.use_bias))
    return found


def _prefixes(length: int, max_width: int):
    if length == 0:
        yield ()
        return
    for w in range(1, max_width + 1):
        for rest in _prefixes(length - 1, max_width):
            yield (w,) + rest


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Softmax-output feedforward network over a flat parameter vector."""

    def __init__(
        self,
        layer_sizes: tuple[int, ...] = (4, 2),
        use_bias: bool = False,
        activation: str = DEFAULT_ACTIVATION,
        learning_rate: float = 0.1,
        n_iter: int = 100,
        random_state: int = 0,
    ):
        self.layer_sizes = layer_sizes
        self.use_bias = use_bias
        self.activation = activation
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.random_state = random_state

    @classmethod
    def from_topology(cls, topology: MlpTopology, **kwargs) -> "MlpClassifier":
        return cls(
            layer_sizes=topology.layer_sizes,
            use_bias=topology.use_bias,
            activation=topology.activation,
            **kwargs,
        )

    # -- structure ---------------------------------------------------------

    @property
    def topology(self) -> MlpTopology:
        return MlpTopology(tuple(self.layer_sizes), self.use_bias, self.activation)

    @property
    def n_params(self) -> int:
        return self.topology.param_count

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    def sample_prior(self, rng: RngStream, k: int) -> np.ndarray:
        return rng.standard_normal((k, self.n_inputs))

    def _unpack(self, theta):
        sizes = self.layer_sizes
        weights = []
        pos = 0
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = theta[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
            pos += fan_in * fan_out
            b = None
            if self.use_bias:
                b = theta[pos : pos + fan_out]
                pos += fan_out
            weights.append((w, b))
        return weights

    # -- evaluation ----------------------------------------------------------

    def _forward_cached(self, X, theta):
        weights = self._unpack(as_theta(theta, self.n_params))
        act, _ = ACTIVATIONS[self.activation]
        acts = [X]
        zs = []
        a = X
        for i, (w, b) in enumerate(weights):
            z = a @ w
            if b is not None:
                z = z + b
            zs.append(z)
            a = act(z) if i < len(weights) - 1 else z
            acts.append(a)
        return weights, acts, zs, softmax(zs[-1])

    def probs_at(self, X, theta) -> np.ndarray:
        X = as_features(X, self.n_inputs)
        _, _, _, probs = self._forward_cached(X, theta)
        return probs

    def conditional_prob(self, x, theta=None):
        theta = self._resolve_theta(theta)
        p = self.probs_at(np.asarray(x, dtype=np.float64).reshape(1, -1), theta)
        return tuple(float(v) for v in p[0])

    def log_prob_and_grad(self, X, y, theta):
        """Per-sample log p(y|x) and its gradient via backprop, (m,), (m, d)."""
        X = as_features(X, self.n_inputs)
        y = as_labels(y, X.shape[0], self.n_classes)
        weights, acts, zs, probs = self._forward_cached(X, theta)
        _, act_deriv = ACTIVATIONS[self.activation]
        m = X.shape[0]
        logp = np.log(probs[np.arange(m), y])

        delta = -probs
        delta[np.arange(m), y] += 1.0  # d log p_y / d logits
        pieces = [None] * len(weights)
        for i in range(len(weights) - 1, -1, -1):
            w, b = weights[i]
            grad_w = acts[i][:, :, None] * delta[:, None, :]
            chunk = [grad_w.reshape(m, -1)]
            if b is not None:
                chunk.append(delta)
            pieces[i] = np.concatenate(chunk, axis=1)
            if i > 0:
                delta = (delta @ w.T) * act_deriv(zs[i - 1])
        return logp, np.concatenate(pieces, axis=1), 0

    def grad_log_prob(self, x, y, theta=None) -> np.ndarray:
        theta = self._resolve_theta(theta)
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        _, grads, _ = self.log_prob_and_grad(x, np.asarray([y]), theta)
        return grads[0]

    def make_loss_grad_fn(self, X, y):
        """Mean cross-entropy and its gradient via aggregated backprop."""
        X = as_features(X, self.n_inputs)
        y = as_labels(y, X.shape[0], self.n_classes)
        m = X.shape[0]
        onehot = np.zeros((m, self.n_classes))
        onehot[np.arange(m), y] = 1.0

        def loss_grad(theta):
            weights, acts, zs, probs = self._forward_cached(X, theta)
            _, act_deriv = ACTIVATIONS[self.activation]
            loss = -float(np.mean(np.log(probs[np.arange(m), y])))
            delta = (probs - onehot) / m  # d loss / d logits
            pieces = [None] * len(weights)
            for i in range(len(weights) - 1, -1, -1):
                w, b = weights[i]
                chunk = [(acts[i].T @ delta).reshape(-1)]
                if b is not None:
                    chunk.append(delta.sum(axis=0))
                pieces[i] = np.concatenate(chunk)
                if i > 0:
                    delta = (delta @ w.T) * act_deriv(zs[i - 1])
            return loss, np.concatenate(pieces)

        return loss_grad

    def _resolve_theta(self, theta):
        if theta is None:
            check_fitted(self)
            return self.theta_
        return as_theta(theta, self.n_params)

    # -- sklearn surface -----------------------------------------------------

    def fit(self, X, y):
        X = as_features(X, self.n_inputs)
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
