"""Fisher-information geometry of quantum and classical neural networks.

Simulates parameterised quantum circuit classifiers exactly, trains them
and comparable feedforward networks, estimates empirical Fisher matrices,
and derives capacity measures: spectra, Fisher-Rao norms, the effective
dimension and its generalisation bound, and barren-plateau diagnostics.
"""

from .circuits import QnnSpec, build_feature_circuit, build_var_circuit, dump_gates
from .classical import (
    MlpClassifier,
    MlpTopology,
    enumerate_topologies,
    parse_topology,
)
from .datasets import (
    Dataset,
    gaussian_prior_sample,
    load_iris_binary,
    make_blobs,
    normalize_features,
    randomise_labels,
)
from .effdim import (
    BoundInputs,
    EffDimResult,
    effdim_curve,
    effective_dimension,
    generalisation_bound_rhs,
    identity_effdim,
    kappa,
)
from .errors import InternalError, NumericalError, QnngeomError, ValidationError
from .fisher import (
    FisherEnsemble,
    FisherEstimate,
    build_ensemble,
    estimate_fisher,
    fisher_rao_norm,
    normalise_ensemble,
    trace_diagnostic,
)
from .quantum import QuantumClassifier
from .rng import RngStream
from .spectra import eigen_sym, spectrum_histogram, spectrum_stats
from .statevec import Gate, Statevector, apply_gate, init_zero, parity_probability
from .training import TrainConfig, TrainRecord, adam_step, confusion_experiment, train_model

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "Dataset",
    "EffDimResult",
    "FisherEnsemble",
    "FisherEstimate",
    "Gate",
    "InternalError",
    "MlpClassifier",
    "MlpTopology",
    "NumericalError",
    "QnnSpec",
    "QnngeomError",
    "QuantumClassifier",
    "RngStream",
    "Statevector",
    "TrainConfig",
    "TrainRecord",
    "ValidationError",
    "adam_step",
    "apply_gate",
    "build_ensemble",
    "build_feature_circuit",
    "build_var_circuit",
    "confusion_experiment",
    "dump_gates",
    "effdim_curve",
    "effective_dimension",
    "eigen_sym",
    "enumerate_topologies",
    "estimate_fisher",
    "fisher_rao_norm",
    "gaussian_prior_sample",
    "generalisation_bound_rhs",
    "identity_effdim",
    "init_zero",
    "kappa",
    "load_iris_binary",
    "make_blobs",
    "normalise_ensemble",
    "normalize_features",
    "parity_probability",
    "parse_topology",
    "randomise_labels",
    "spectrum_histogram",
    "spectrum_stats",
    "trace_diagnostic",
    "train_model",
]
