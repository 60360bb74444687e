"""End-to-end experiment pipelines shared by the CLI and the test suite.

Model spec strings: ``qnn`` (hard ZZ feature map), ``easy-qnn`` (angle
encoding), ``qnn-linear`` (nearest-neighbour hardware variant), or a
classical topology string like ``4-2-8-2:bias:tanh``.  Quantum parameter
budgets resolve through d = (var_depth + 1) * n_qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import effdim, fisher, spectra, training
from .classical import MlpClassifier, enumerate_topologies, parse_topology
from .datasets import Dataset, load_iris_binary, make_blobs, normalize_features
from .errors import ValidationError
from .quantum import QuantumClassifier
from .rng import RngStream

QUANTUM_SPECS = {
    "qnn": dict(feature_map="hard_zz", entanglement="all_to_all"),
    "easy-qnn": dict(feature_map="easy_angle", entanglement="all_to_all"),
    "qnn-linear": dict(feature_map="hard_zz_linear", entanglement="linear"),
}

DEFAULT_VAR_DEPTH = 9  # gives the d = 10 S family used in the size sweeps


def resolve_var_depth(n_qubits: int, d: int | None, var_depth: int | None) -> int:
    if d is None and var_depth is None:
        return DEFAULT_VAR_DEPTH
    if var_depth is not None:
        if d is not None and d != (var_depth + 1) * n_qubits:
            raise ValidationError(
                f"d={d} conflicts with var_depth={var_depth} at {n_qubits} qubits"
            )
        return var_depth
    if d % n_qubits or d // n_qubits < 2:
        raise ValidationError(
            f"d={d} is not reachable with {n_qubits} qubits: "
            "need d = (var_depth + 1) * n_qubits with var_depth >= 1"
        )
    return d // n_qubits - 1


def build_model(
    spec: str,
    n_qubits: int | None = None,
    d: int | None = None,
    var_depth: int | None = None,
    **estimator_kwargs,
):
    """Instantiate the model a CLI spec string describes."""
    if spec in QUANTUM_SPECS:
        if n_qubits is None:
            raise ValidationError(f"model {spec!r} needs a qubit count")
        depth = resolve_var_depth(n_qubits, d, var_depth)
        return QuantumClassifier(
            n_qubits=n_qubits,
            var_depth=depth,
            **QUANTUM_SPECS[spec],
            **estimator_kwargs,
        )
    if spec[:1].isdigit():
        topology = parse_topology(spec)
        if d is not None and topology.param_count != d:
            raise ValidationError(
                f"topology {spec!r} has {topology.param_count} parameters, not {d}"
            )
        return MlpClassifier.from_topology(topology, **estimator_kwargs)
    raise ValidationError(
        f"unknown model spec {spec!r}: expected qnn, easy-qnn, qnn-linear or a "
        "topology string like 4-2-8-2:bias:tanh"
    )


# ---------------------------------------------------------------------------
# classical comparator selection

@dataclass
class TopologyRank:
    spec: str
    d: int
    mean_rank: float


def rank_topologies(
    d: int,
    s_in: int,
    s_out: int,
    rng: RngStream,
    n_theta: int = 10,
    k: int = 50,
    max_layers: int = 3,
    max_width: int = 256,
) -> list[TopologyRank]:
    """Average Fisher numeric rank for every candidate topology/activation."""
    from .classical import ACTIVATIONS

    structures = enumerate_topologies(d, s_in, s_out, max_layers, max_width)
    table = []
    for structure in structures:
        for activation in sorted(ACTIVATIONS):
            topology = replace(structure, activation=activation)
            model = MlpClassifier.from_topology(topology)
            ens = fisher.build_ensemble(model, n_theta, k, rng.child(len(table)))
            ranks = [
                spectra.spectrum_stats(spectra.eigenvalues_sym(e.matrix)).numeric_rank
                for e in ens.estimates
            ]
            table.append(TopologyRank(topology.spec_string(), d, float(np.mean(ranks))))
    table.sort(key=lambda r: (-r.mean_rank, r.spec))
    return table


def best_classical_topology(d: int, s_in: int, s_out: int, rng: RngStream, **kwargs):
    """The comparator: the topology with the highest average Fisher rank."""
    table = rank_topologies(d, s_in, s_out, rng, **kwargs)
    if not table:
        raise ValidationError(
            f"no classical topology realises d={d} with s_in={s_in}, s_out={s_out}"
        )
    return parse_topology(table[0].spec), table


# ---------------------------------------------------------------------------
# pipelines

def spectrum_pipeline(model, n_theta: int, k: int, bins: int, rng: RngStream, jobs: int = 1):
    """Fisher ensemble -> eigenvalues -> stats + pooled histograms."""
    ensemble = fisher.build_ensemble(model, n_theta, k, rng, jobs=jobs)
    eigenvalues = spectra.ensemble_eigenvalues(ensemble)
    stats = spectra.ensemble_stats(eigenvalues)
    hist, zoom = spectra.spectrum_histogram(eigenvalues, bins=bins, zoom_first_bin=True)
    return ensemble, eigenvalues, stats, hist, zoom


def effdim_pipeline(
    model,
    gamma: float,
    n_grid,
    n_theta: int,
    k: int,
    rng: RngStream,
    jobs: int = 1,
) -> effdim.EffDimResult:
    """Normalised-ensemble effective dimension over a data-count grid."""
    ensemble = fisher.normalise_ensemble(
        fisher.build_ensemble(model, n_theta, k, rng, jobs=jobs)
    )
    eigenvalues = spectra.ensemble_eigenvalues(ensemble)
    return effdim.effdim_curve(eigenvalues, gamma, n_grid, d=ensemble.d)


def identity_effdim_curve(d: int, gamma: float, n_grid, n_theta: int = 1):
    """Synthetic identity-Fisher curve (analytic test hook)."""
    return effdim.effdim_curve(np.ones((n_theta, d)), gamma, n_grid, d=d)


def barren_pipeline(
    spec: str,
    qubit_grid,
    n_theta: int,
    k: int,
    rng: RngStream,
    var_depth: int | None = None,
    jobs: int = 1,
) -> fisher.TraceDiagnostic:
    """Mean normalised Fisher trace across system sizes for one family."""
    qubit_grid = list(qubit_grid)
    if not qubit_grid:
        raise ValidationError("empty qubit grid")
    if spec not in QUANTUM_SPECS:
        raise ValidationError(f"barren diagnostic expects a quantum model, got {spec!r}")
    depth = DEFAULT_VAR_DEPTH if var_depth is None else var_depth
    models = {
        s: build_model(spec, n_qubits=s, var_depth=depth) for s in qubit_grid
    }
    return fisher.trace_diagnostic(models, n_theta, k, rng, jobs=jobs)


@dataclass
class SensitivityRow:
    n_samples: int
    mean_effdim_norm: float
    std_effdim_norm: float


def sensitivity_pipeline(
    model,
    sample_grid,
    repeats: int,
    gamma: float,
    n_data: float,
    rng: RngStream,
    jobs: int = 1,
) -> list[SensitivityRow]:
    """Effective-dimension stability against the Monte Carlo sample counts.

    Each grid entry is used for both the data-sample and parameter-sample
    counts; repeats differ only in their stream.
    """
    sample_grid = list(sample_grid)
    if not sample_grid or any(m < 1 for m in sample_grid):
        raise ValidationError("sample grid must hold positive counts")
    rows = []
    for gi, m in enumerate(sample_grid):
        values = []
        for rep in range(repeats):
            result = effdim_pipeline(
                model, gamma, [n_data], m, m, rng.child(gi, rep), jobs=jobs
            )
            values.append(result.normalised[0])
        arr = np.asarray(values)
        rows.append(SensitivityRow(m, float(arr.mean()), float(arr.std())))
    return rows


CONFUSION_NET = "6-110-2:relu"


def confusion_pipeline(
    fractions,
    runs: int,
    rng: RngStream,
    net_spec: str = CONFUSION_NET,
    n_points: int = 1000,
    spread: float = 1.0,
    gamma: float = 1.0,
    learning_rate: float = training.CONFUSION_LEARNING_RATE,
    n_local: int = 100,
    k: int = 100,
):
    """The label-randomisation study on blob data."""
    topology = parse_topology(net_spec)
    dataset = make_blobs(n_points, topology.layer_sizes[0], spread, rng.child(0))
    config = training.TrainConfig(learning_rate=learning_rate, n_trials=max(runs, 1))
    rows = training.confusion_experiment(
        lambda: MlpClassifier.from_topology(topology),
        dataset,
        fractions,
        runs,
        config,
        rng.child(1),
        gamma=gamma,
        n_data=n_points,
        n_local=n_local,
        k=k,
    )
    return rows


def load_named_dataset(name: str, normalize: bool = False, blob_n: int = 1000,
                       blob_features: int = 6, blob_spread: float = 1.0,
                       seed: int = 0) -> Dataset:
    if name == "iris2":
        return normalize_features(load_iris_binary())
    if name == "blobs":
        ds = make_blobs(blob_n, blob_features, blob_spread, RngStream(seed, (90,)))
        return normalize_features(ds) if normalize else ds
    raise ValidationError(
        f"unknown dataset {name!r}; available: iris2, blobs (or a CSV path)"
    )
