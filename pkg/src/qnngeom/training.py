"""Full-batch ADAM training on cross-entropy, and the confusion-set study.

Works against any model exposing ``n_params``, ``make_loss_grad_fn``,
``probs_at``, ``log_prob_and_grad`` and ``sample_prior`` (both classifier
families do).  Initial parameters are drawn uniformly from [-1, 1]^d.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import effdim, fisher
from .datasets import Dataset, randomise_labels
from .errors import NumericalError, ValidationError
from .rng import RngStream


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    n_iter: int = 100
    n_trials: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.n_iter < 0 or self.n_trials < 1:
            raise ValidationError("n_iter must be >= 0 and n_trials >= 1")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n_params: int) -> "AdamState":
        return cls(np.zeros(n_params), np.zeros(n_params))


def adam_step(theta, grad, state: AdamState, config: TrainConfig):
    """One ADAM update; returns (new theta, new state) without mutating."""
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient in ADAM step")
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grad
    v = config.beta2 * state.v + (1.0 - config.beta2) * grad**2
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    theta_new = theta - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    return theta_new, AdamState(m, v, t)


@dataclass
class TrainRecord:
    loss_trace: np.ndarray  # length n_iter + 1 (initial loss included)
    final_theta: np.ndarray
    final_loss: float
    wall_time: float
    fisher_rao: float | None = None
    converged: bool = True
    aborted: bool = False


def train_model(
    model,
    X,
    y,
    config: TrainConfig,
    rng: RngStream,
    theta0: np.ndarray | None = None,
    stop_loss: float | None = None,
    compute_fisher_rao: bool = False,
    fisher_k: int = 100,
) -> TrainRecord:
    """Minimise full-batch cross-entropy for ``config.n_iter`` ADAM steps.

    With ``stop_loss`` set, training ends early once the loss reaches it and
    the record's ``converged`` flag reports whether it ever did.
    """
    start = time.perf_counter()
    d = model.n_params
    theta = rng.child(0).uniform(-1.0, 1.0, d) if theta0 is None else np.array(theta0, dtype=np.float64)
    loss_grad = model.make_loss_grad_fn(X, y)
    state = AdamState.zeros(d)
    trace = []
    converged = stop_loss is None
    aborted = False
    hit_stop = False
    for _ in range(config.n_iter):
        loss, grad = loss_grad(theta)
        trace.append(loss)
        if stop_loss is not None and loss <= stop_loss:
            converged = True
            hit_stop = True
            break
        try:
            theta, state = adam_step(theta, grad, state, config)
        except NumericalError:
            aborted = True
            break
    if not aborted and not hit_stop:
        final_loss, _ = loss_grad(theta)
        trace.append(final_loss)
        if stop_loss is not None and final_loss <= stop_loss:
            converged = True
    record = TrainRecord(
        loss_trace=np.asarray(trace),
        final_theta=theta,
        final_loss=float(trace[-1]),
        wall_time=time.perf_counter() - start,
        converged=converged,
        aborted=aborted,
    )
    if compute_fisher_rao and not aborted:
        estimate = fisher.estimate_fisher(model, theta, fisher_k, rng.child(1))
        record.fisher_rao = fisher.fisher_rao_norm(theta, estimate.matrix)
    return record


@dataclass
class TrialsSummary:
    records: list[TrainRecord]
    mean_final_loss: float
    std_final_loss: float
    mean_fisher_rao: float | None
    n_aborted: int

    def as_dict(self) -> dict:
        out = {
            "trials": len(self.records),
            "aborted": self.n_aborted,
            "mean_final_loss": self.mean_final_loss,
            "std_final_loss": self.std_final_loss,
            "mean_final_loss_pct": 100.0 * self.mean_final_loss,
        }
        if self.mean_fisher_rao is not None:
            out["mean_fisher_rao"] = self.mean_fisher_rao
        return out


def run_trials(
    model,
    X,
    y,
    config: TrainConfig,
    rng: RngStream,
    compute_fisher_rao: bool = False,
    fisher_k: int = 100,
) -> TrialsSummary:
    """Independent training trials with derived per-trial streams."""
    records = []
    for trial in range(config.n_trials):
        records.append(
            train_model(
                model,
                X,
                y,
                config,
                rng.child(trial),
                compute_fisher_rao=compute_fisher_rao,
                fisher_k=fisher_k,
            )
        )
    finals = np.array([r.final_loss for r in records if not r.aborted])
    if finals.size == 0:
        raise NumericalError("every training trial aborted")
    norms = [r.fisher_rao for r in records if r.fisher_rao is not None]
    return TrialsSummary(
        records=records,
        mean_final_loss=float(finals.mean()),
        std_final_loss=float(finals.std()),
        mean_fisher_rao=float(np.mean(norms)) if norms else None,
        n_aborted=sum(r.aborted for r in records),
    )


# ---------------------------------------------------------------------------
# confusion-set generalisation experiment

#: "zero training loss": the loss level at which the 880-parameter blob net
#: sits at zero 0/1 training error on every confusion set it can represent.
#: Stricter targets (1e-3) are unreachable past ~20% label noise: a width-110
#: relu layer cannot memorise 1000 six-feature points with arbitrary labels.
CONFUSION_LOSS_THRESHOLD = 0.03
CONFUSION_MAX_ITER = 6000
CONFUSION_LEARNING_RATE = 0.05
LOCAL_BALL_RADIUS = 0.05


def empirical_prior(features: np.ndarray):
    """Input sampler resampling rows of a feature matrix with replacement."""

    def sample(rng: RngStream, k: int) -> np.ndarray:
        idx = rng.generator().integers(0, features.shape[0], k)
        return features[idx]

    return sample


def local_effective_dimension(
    model,
    theta_star: np.ndarray,
    rng: RngStream,
    n_local: int = 100,
    k: int = 100,
    gamma: float = 1.0,
    n_data: int = 1000,
    ball_radius: float = LOCAL_BALL_RADIUS,
    prior=None,
) -> float:
    """Effective dimension from a parameter ball around a trained point.

    Draws ``n_local`` parameter sets uniformly from an l-inf ball, estimates
    the empirical Fisher at each, and evaluates the effective dimension on
    the normalised eigenvalue ensemble.  Eigenvalues come from the k x k
    Gram matrix of the gradient samples, which shares the nonzero spectrum
    of the d x d outer-product Fisher.
    """
    d = model.n_params
    sampler = prior if prior is not None else model.sample_prior
    eig_rows = np.zeros((n_local, k))
    for i in range(n_local):
        stream = rng.child(i)
        theta = theta_star + stream.child(0).uniform(-ball_radius, ball_radius, d)
        X = sampler(stream.child(1), k)
        probs = model.probs_at(X, theta)
        y = fisher.sample_conditional_labels(probs, stream.child(2))
        _, grads, _ = model.log_prob_and_grad(X, y, theta)
        gram = grads @ grads.T / grads.shape[0]
        eig_rows[i] = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    trace_mean = float(eig_rows.sum(axis=1).mean())
    if trace_mean <= 0.0:
        raise NumericalError("degenerate local Fisher ensemble (zero mean trace)")
    return effdim.effective_dimension(eig_rows * (d / trace_mean), gamma, n_data)


@dataclass
class ConfusionRow:
    fraction: float
    mean_effdim_norm: float
    std_effdim_norm: float
    n_converged: int
    n_runs: int


def confusion_experiment(
    model_factory,
    dataset: Dataset,
    fractions,
    runs: int,
    config: TrainConfig,
    rng: RngStream,
    gamma: float = 1.0,
    n_data: int = 1000,
    n_local: int = 100,
    k: int = 100,
    loss_threshold: float = CONFUSION_LOSS_THRESHOLD,
    max_iter: int = CONFUSION_MAX_ITER,
) -> list[ConfusionRow]:
    """Train on label-randomised copies of ``dataset`` and track capacity.

    For each randomisation fraction, ``runs`` fresh networks are trained to
    the loss threshold; non-converged runs are excluded and counted.  The
    post-training Fisher draws its inputs from the training features (the
    capacity being probed is the one spent fitting that data).
    """
    fractions = list(fractions)
    for rho in fractions:
        if not 0.0 <= rho <= 1.0:
            raise ValidationError(f"randomisation fraction {rho} outside [0, 1]")
    train_config = replace(config, n_iter=max_iter)
    rows = []
    for gi, rho in enumerate(fractions):
        values = []
        n_converged = 0
        for run in range(runs):
            stream = rng.child(gi, run)
            shuffled = randomise_labels(dataset, rho, stream.child(0))
            model = model_factory()
            record = train_model(
                model,
                shuffled.features,
                shuffled.labels,
                train_config,
                stream.child(1),
                stop_loss=loss_threshold,
            )
            if not record.converged or record.aborted:
                continue
            n_converged += 1
            ed = local_effective_dimension(
                model,
                record.final_theta,
                stream.child(2),
                n_local=n_local,
                k=k,
                gamma=gamma,
                n_data=n_data,
                prior=empirical_prior(dataset.features),
            )
            values.append(ed / model.n_params)
        if not values:
            raise NumericalError(
                f"no run converged at randomisation fraction {rho}"
            )
        arr = np.asarray(values)
        rows.append(
            ConfusionRow(
                fraction=float(rho),
                mean_effdim_norm=float(arr.mean()),
                std_effdim_norm=float(arr.std()),
                n_converged=n_converged,
                n_runs=runs,
            )
        )
    return rows
