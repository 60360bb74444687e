"""Circuit builders for the quantum classifiers.

Three feature maps:

* ``hard_zz`` -- Hadamards, then ``depth`` repetitions of [RZ(x_i) on every
  qubit, then for each pair i<j a CNOT / RZ((pi-x_i)(pi-x_j)) / CNOT block].
  The Hadamard layer is not repeated.
* ``hard_zz_linear`` -- same, with pairs restricted to nearest neighbours
  (the reduced-connectivity hardware variant).
* ``easy_angle`` -- RY(x_i) on each qubit, no entanglement, single layer.

The variational form is an RY layer followed by ``var_depth`` repetitions of
[CNOT entangling layer, RY layer], giving (var_depth + 1) * n_qubits
trainable parameters.  Feature values are expected pre-normalized to
[-1, 1]; the builders do not wrap or rescale angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .statevec import Gate, cnot, h, ry, rz

FEATURE_MAPS = ("hard_zz", "easy_angle", "hard_zz_linear")
ENTANGLEMENTS = ("all_to_all", "linear")


@dataclass(frozen=True)
class QnnSpec:
    """Structure of a quantum classifier circuit (no parameter values)."""

    n_qubits: int
    feature_map: str = "hard_zz"
    feature_depth: int = 2
    var_depth: int = 1
    entanglement: str = "all_to_all"

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        if self.feature_map not in FEATURE_MAPS:
            raise ValidationError(f"unknown feature map {self.feature_map!r}")
        if self.entanglement not in ENTANGLEMENTS:
            raise ValidationError(f"unknown entanglement {self.entanglement!r}")
        if self.feature_depth < 1:
            raise ValidationError("feature_depth must be >= 1")
        if self.var_depth < 1:
            raise ValidationError("var_depth must be >= 1")

    @property
    def n_params(self) -> int:
        return (self.var_depth + 1) * self.n_qubits

    def pairs(self, linear: bool) -> list[tuple[int, int]]:
        s = self.n_qubits
        if linear:
            return [(i, i + 1) for i in range(s - 1)]
        return [(i, j) for i in range(s) for j in range(i + 1, s)]


def build_feature_circuit(spec: QnnSpec, x) -> list[Gate]:
    """Data-encoding gates for one input (or a batch: ``x`` of shape (m, S))."""
    x = np.asarray(x, dtype=np.float64)
    s = spec.n_qubits
    if x.shape[-1] != s:
        raise ValidationError(f"expected {s} features, got {x.shape[-1]}")

    def feat(i):
        val = x[..., i]
        return val if val.ndim else float(val)

    gates: list[Gate] = []
    if spec.feature_map == "easy_angle":
        for i in range(s):
            gates.append(ry(i, feat(i)))
        return gates

    linear = spec.feature_map == "hard_zz_linear"
    for i in range(s):
        gates.append(h(i))
    for _ in range(spec.feature_depth):
        for i in range(s):
            gates.append(rz(i, feat(i)))
        for i, j in spec.pairs(linear):
            angle = (math.pi - x[..., i]) * (math.pi - x[..., j])
            gates.append(cnot(i, j))
            gates.append(rz(j, angle if angle.ndim else float(angle)))
            gates.append(cnot(i, j))
    return gates


def build_var_circuit(spec: QnnSpec, theta) -> list[Gate]:
    """Trainable gates; ``theta`` has (var_depth + 1) * n_qubits entries."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (spec.n_params,):
        raise ValidationError(
            f"expected {spec.n_params} parameters, got shape {theta.shape}"
        )
    s = spec.n_qubits
    linear = spec.entanglement == "linear"
    gates: list[Gate] = [ry(q, float(theta[q])) for q in range(s)]
    for layer in range(1, spec.var_depth + 1):
        for i, j in spec.pairs(linear):
            gates.append(cnot(i, j))
        for q in range(s):
            gates.append(ry(q, float(theta[layer * s + q])))
    return gates


def feature_gate_count(spec: QnnSpec) -> int:
    s = spec.n_qubits
    if spec.feature_map == "easy_angle":
        return s
    n_pairs = len(spec.pairs(spec.feature_map == "hard_zz_linear"))
    return s + spec.feature_depth * (s + 3 * n_pairs)


def var_gate_count(spec: QnnSpec) -> int:
    s = spec.n_qubits
    n_pairs = len(spec.pairs(spec.entanglement == "linear"))
    return s + spec.var_depth * (n_pairs + s)


def dump_gates(gates) -> str:
    """Debug listing, one gate per line: ``KIND q[args] angle``."""
    return "\n".join(repr(g) for g in gates)
