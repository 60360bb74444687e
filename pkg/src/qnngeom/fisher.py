"""Empirical Fisher information estimation and derived capacity quantities.

The estimator draws inputs from a prior, labels from the model's own
conditional distribution (required for the sample average of gradient outer
products to converge to the Fisher matrix), and averages g g^T over the
samples.  Ensembles collect estimates at independently sampled parameter
points; normalisation rescales them so the mean trace equals the parameter
count, which is the convention the effective dimension expects.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .rng import RngStream

MAX_SKIP_FRACTION = 0.1


def sample_conditional_labels(probs: np.ndarray, rng: RngStream) -> np.ndarray:
    """Draw one label per row of a (m, n_classes) probability matrix."""
    u = rng.generator().random(probs.shape[0])
    cumulative = np.cumsum(probs, axis=1)
    return (u[:, None] > cumulative).sum(axis=1).astype(np.int64)


@dataclass
class FisherEstimate:
    """One empirical Fisher matrix with its sampling metadata."""

    matrix: np.ndarray  # (d, d) symmetric PSD
    k: int
    theta: np.ndarray
    stream: RngStream
    clamp_events: int = 0
    skipped: int = 0

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


def estimate_fisher(
    model,
    theta,
    k: int,
    rng: RngStream,
    prior=None,
) -> FisherEstimate:
    """Empirical Fisher (1/k) sum of gradient outer products at ``theta``.

    ``prior`` maps (rng, k) to a (k, s_in) input batch; the model's own
    Gaussian prior is used by default.  Samples with non-finite gradients
    are skipped; more than 10% skips is an error.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    theta = np.asarray(theta, dtype=np.float64)
    sampler = prior if prior is not None else model.sample_prior
    X = sampler(rng.child(0), k)
    probs = model.probs_at(X, theta)
    y = sample_conditional_labels(probs, rng.child(1))
    _, grads, clamp_events = model.log_prob_and_grad(X, y, theta)
    finite = np.all(np.isfinite(grads), axis=1)
    skipped = int(np.count_nonzero(~finite))
    if skipped > MAX_SKIP_FRACTION * k:
        raise NumericalError(
            f"{skipped}/{k} Fisher samples had non-finite gradients"
        )
    kept = grads[finite]
    matrix = kept.T @ kept / kept.shape[0]
    matrix = (matrix + matrix.T) / 2.0
    return FisherEstimate(
        matrix=matrix,
        k=k,
        theta=theta,
        stream=rng,
        clamp_events=clamp_events,
        skipped=skipped,
    )


@dataclass
class FisherEnsemble:
    """Fisher estimates at independently sampled parameter points."""

    estimates: list[FisherEstimate]
    normalised: bool = False
    scale: float = 1.0

    @property
    def d(self) -> int:
        return self.estimates[0].d

    @property
    def k(self) -> int:
        return self.estimates[0].k

    @property
    def trace_mean(self) -> float:
        return float(np.mean([e.trace for e in self.estimates]))

    def matrices(self) -> np.ndarray:
        return np.stack([e.matrix for e in self.estimates])

    def thetas(self) -> np.ndarray:
        return np.stack([e.theta for e in self.estimates])


def build_ensemble(
    model,
    n_theta: int,
    k: int,
    rng: RngStream,
    prior=None,
    jobs: int = 1,
) -> FisherEnsemble:
    """Fisher estimates at ``n_theta`` parameters uniform on [-1, 1]^d.

    Per-sample streams derive from (rng, sample index), so the result is
    identical for any ``jobs`` level.
    """
    if n_theta < 1:
        raise ValidationError("n_theta must be >= 1")
    d = model.n_params

    def one(i: int) -> FisherEstimate:
        stream = rng.child(i)
        theta = stream.child(0).uniform(-1.0, 1.0, d)
        return estimate_fisher(model, theta, k, stream.child(1), prior=prior)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            estimates = list(pool.map(one, range(n_theta)))
    else:
        estimates = [one(i) for i in range(n_theta)]
    return FisherEnsemble(estimates=estimates)


def normalise_ensemble(ensemble: FisherEnsemble) -> FisherEnsemble:
    """Rescale so the ensemble-average trace equals d (Monte Carlo form of
    the d * V / integral-of-trace normalisation)."""
    trace_mean = ensemble.trace_mean
    if trace_mean <= 0.0:
        raise NumericalError(
            "fully degenerate Fisher ensemble (mean trace is zero); "
            "effective dimension is undefined"
        )
    scale = ensemble.d / trace_mean
    estimates = [
        FisherEstimate(
            matrix=e.matrix * scale,
            k=e.k,
            theta=e.theta,
            stream=e.stream,
            clamp_events=e.clamp_events,
            skipped=e.skipped,
        )
        for e in ensemble.estimates
    ]
    return FisherEnsemble(estimates=estimates, normalised=True, scale=scale)


def fisher_rao_norm(theta, matrix) -> float:
    """The quadratic form theta^T F theta."""
    theta = np.asarray(theta, dtype=np.float64)
    return float(theta @ np.asarray(matrix) @ theta)


# ---------------------------------------------------------------------------
# barren-plateau trace diagnostic

@dataclass
class TraceDiagnostic:
    qubit_grid: list[int]
    d_values: list[int]
    mean_traces: list[float]  # mean over theta of tr(F)/d, per qubit count
    decay_rate: float  # slope of log mean-trace against qubit count
    decay_stderr: float
    degenerate: bool
    barren_flag: bool

    def rows(self):
        return list(zip(self.qubit_grid, self.d_values, self.mean_traces))


def trace_diagnostic(
    models_by_qubits: dict[int, object],
    n_theta: int,
    k: int,
    rng: RngStream,
    prior=None,
    jobs: int = 1,
) -> TraceDiagnostic:
    """Mean normalised Fisher trace per system size, with a decay fit.

    An exponential decay of tr(F)/d in the qubit count is the spectral
    signature of a barren plateau; the fitted rate is flagged when it is
    significantly below zero.
    """
    if n_theta < 10:
        raise ValidationError("trace diagnostic needs >= 10 parameter samples")
    grid = sorted(models_by_qubits)
    if not grid:
        raise ValidationError("empty qubit grid")
    means = []
    d_values = []
    for idx, s in enumerate(grid):
        model = models_by_qubits[s]
        ens = build_ensemble(model, n_theta, k, rng.child(idx), prior=prior, jobs=jobs)
        d = model.n_params
        d_values.append(d)
        means.append(float(np.mean([e.trace / d for e in ens.estimates])))
    degenerate = any(m <= 0.0 for m in means)
    if degenerate or len(grid) < 2:
        return TraceDiagnostic(grid, d_values, means, float("nan"), float("nan"),
                               degenerate=True, barren_flag=False)
    x = np.asarray(grid, dtype=np.float64)
    logm = np.log(means)
    slope, intercept = np.polyfit(x, logm, 1)
    resid = logm - (slope * x + intercept)
    dof = max(len(grid) - 2, 1)
    denom = float(np.sum((x - x.mean()) ** 2))
    stderr = float(np.sqrt(np.sum(resid**2) / dof / denom)) if denom > 0 else float("inf")
    barren = bool(slope + 2.0 * stderr < 0.0)
    return TraceDiagnostic(grid, d_values, means, float(slope), stderr,
                           degenerate=False, barren_flag=barren)


# ---------------------------------------------------------------------------
# portable ensemble persistence: JSON header + CSV of row-major matrices

FORMAT_VERSION = 1


def save_ensemble(ensemble: FisherEnsemble, header_path, matrices_path,
                  model_params: dict | None = None, config_hash: str = ""):
    header = {
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash,
        "d": ensemble.d,
        "k": ensemble.k,
        "n_estimates": len(ensemble.estimates),
        "normalised": ensemble.normalised,
        "scale": ensemble.scale,
        "seeds": [
            {"seed": e.stream.seed, "path": list(e.stream.path)}
            for e in ensemble.estimates
        ],
        "clamp_events": [e.clamp_events for e in ensemble.estimates],
        "model": model_params or {},
    }
    with open(header_path, "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(matrices_path, "w") as fh:
        fh.write(f"# config={config_hash} fisher-ensemble-format={FORMAT_VERSION}\n")
        for e in ensemble.estimates:
            row = np.concatenate([e.theta, e.matrix.reshape(-1)])
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_ensemble(header_path, matrices_path) -> FisherEnsemble:
    with open(header_path) as fh:
        header = json.load(fh)
    d = header["d"]
    estimates = []
    with open(matrices_path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            values = np.array([float(tok) for tok in line.split(",")])
            if values.size != d + d * d:
                raise ValidationError(
                    f"matrix row holds {values.size} values, expected {d + d * d}"
                )
            estimates.append((values[:d], values[d:].reshape(d, d)))
    if len(estimates) != header["n_estimates"]:
        raise ValidationError("ensemble CSV row count does not match header")
    wrapped = [
        FisherEstimate(
            matrix=matrix,
            k=header["k"],
            theta=theta,
            stream=RngStream(seed_info["seed"], tuple(seed_info["path"])),
            clamp_events=clamp,
        )
        for (theta, matrix), seed_info, clamp in zip(
            estimates, header["seeds"], header["clamp_events"]
        )
    ]
    return FisherEnsemble(
        estimates=wrapped,
        normalised=header["normalised"],
        scale=header["scale"],
    )
