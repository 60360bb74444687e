"""Exact dense statevector simulation.

Gate set: H, RY, RZ, CNOT.  Qubit 0 is the least-significant bit of the
basis-state index.  Kernels update amplitude pairs in place and accept any
leading batch shape, with rotation angles broadcast over the batch, which
is what makes the Fisher sampling loops cheap.

Conventions:
    H      = (1/sqrt 2) [[1, 1], [1, -1]]
    RY(a)  = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]
    RZ(a)  = diag(exp(-i a/2), exp(+i a/2))
    CNOT   flips the target bit when the control bit is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InternalError, ValidationError

MAX_QUBITS = 16  # memory guard: 2^16 amplitudes = 1 MiB per state

GATE_KINDS = ("H", "RY", "RZ", "CNOT")


@dataclass(frozen=True, eq=False)
class Gate:
    """One circuit operation.  ``angle`` may be a scalar or a batch array."""

    kind: str
    qubits: tuple[int, ...]
    angle: float | np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if self.kind == "CNOT":
            control, target = self.qubits
            if control == target:
                raise ValidationError("CNOT control and target must differ")

    def __repr__(self):
        qubits = ",".join(str(q) for q in self.qubits)
        if self.angle is None:
            return f"{self.kind} q[{qubits}]"
        if np.ndim(self.angle):
            return f"{self.kind} q[{qubits}] <batched>"
        return f"{self.kind} q[{qubits}] {float(self.angle)!r}"


def h(qubit: int) -> Gate:
    return Gate("H", (qubit,))


def ry(qubit: int, angle) -> Gate:
    return Gate("RY", (qubit,), angle)


def rz(qubit: int, angle) -> Gate:
    return Gate("RZ", (qubit,), angle)


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


# ---------------------------------------------------------------------------
# array kernels

def _pair_view(amps: np.ndarray, qubit: int) -> np.ndarray:
    """View of a (..., 2^n) array as (..., upper, 2, 2^qubit).

    The middle axis is the chosen qubit's bit.  Raises rather than copy, so
    in-place updates through the view always reach the caller's array.
    """
    dim = amps.shape[-1]
    lower = 1 << qubit
    if lower >= dim:
        raise ValidationError(f"qubit index {qubit} out of range for dim {dim}")
    view = amps.view()
    view.shape = amps.shape[:-1] + (dim >> (qubit + 1), 2, lower)
    return view


def _broadcast_angle(angle, batch_shape: tuple[int, ...], extra_dims: int):
    a = np.asarray(angle, dtype=np.float64)
    if a.ndim:
        if a.shape != batch_shape:
            raise ValidationError(
                f"angle batch shape {a.shape} does not match state batch {batch_shape}"
            )
        a = a.reshape(a.shape + (1,) * extra_dims)
    return a


def apply_h(amps: np.ndarray, n_qubits: int, qubit: int):
    arr = _pair_view(amps, qubit)
    a0 = arr[..., 0, :]
    a1 = arr[..., 1, :]
    inv = 1.0 / np.sqrt(2.0)
    t0 = a0.copy()
    a0 += a1
    a0 *= inv
    a1 *= -inv
    a1 += inv * t0


def apply_ry(amps: np.ndarray, n_qubits: int, qubit: int, angle):
    arr = _pair_view(amps, qubit)
    half = _broadcast_angle(angle, amps.shape[:-1], 2) / 2.0
    c, s = np.cos(half), np.sin(half)
    a0 = arr[..., 0, :]
    a1 = arr[..., 1, :]
    t0 = a0.copy()
    a0 *= c
    a0 -= s * a1
    a1 *= c
    a1 += s * t0


def apply_rz(amps: np.ndarray, n_qubits: int, qubit: int, angle):
    arr = _pair_view(amps, qubit)
    half = _broadcast_angle(angle, amps.shape[:-1], 2) / 2.0
    phase = np.exp(1j * half)
    arr[..., 0, :] *= phase.conj()
    arr[..., 1, :] *= phase


def apply_cnot(amps: np.ndarray, n_qubits: int, control: int, target: int):
    hi, lo = (control, target) if control > target else (target, control)
    dim = amps.shape[-1]
    view = amps.view()
    view.shape = amps.shape[:-1] + (
        dim >> (hi + 1),
        2,
        (1 << hi) >> (lo + 1),
        2,
        1 << lo,
    )
    if control > target:
        sub = view[..., :, 1, :, :, :]  # control bit set; target axis at -2
        t0 = sub[..., 0, :].copy()
        sub[..., 0, :] = sub[..., 1, :]
        sub[..., 1, :] = t0
    else:
        sub = view[..., :, :, :, 1, :]  # control bit set; target axis at -4
        t0 = sub[..., 0, :, :].copy()
        sub[..., 0, :, :] = sub[..., 1, :, :]
        sub[..., 1, :, :] = t0


def apply_gate_array(amps: np.ndarray, n_qubits: int, gate: Gate):
    """Apply ``gate`` in place to a (..., 2^n) amplitude array."""
    for q in gate.qubits:
        if not 0 <= q < n_qubits:
            raise ValidationError(f"qubit index {q} out of range for {n_qubits} qubits")
    if gate.kind == "H":
        apply_h(amps, n_qubits, gate.qubits[0])
    elif gate.kind == "RY":
        apply_ry(amps, n_qubits, gate.qubits[0], gate.angle)
    elif gate.kind == "RZ":
        apply_rz(amps, n_qubits, gate.qubits[0], gate.angle)
    else:
        apply_cnot(amps, n_qubits, *gate.qubits)


def run_gates(amps: np.ndarray, n_qubits: int, gates) -> np.ndarray:
    for gate in gates:
        apply_gate_array(amps, n_qubits, gate)
    return amps


def zero_amps(n_qubits: int, batch_shape: tuple[int, ...] = ()) -> np.ndarray:
    """|0...0> amplitudes, optionally replicated over a batch."""
    amps = np.zeros(batch_shape + (2**n_qubits,), dtype=np.complex128)
    amps[..., 0] = 1.0
    return amps


@lru_cache(maxsize=None)
def cnot_layer_perm(n_qubits: int, pairs: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Index permutation equivalent to applying the CNOT sequence in order.

    ``state[..., perm]`` equals the state after every listed CNOT; composing
    the layer into one gather is much cheaper than per-gate pair swaps.
    """
    index = np.arange(2**n_qubits)
    perm = index.copy()
    for control, target in pairs:
        sigma = index ^ (((index >> control) & 1) << target)
        perm = perm[sigma]
    return perm


@lru_cache(maxsize=None)
def parity_vector(n_qubits: int) -> np.ndarray:
    """parity_vector[i] = popcount(i) mod 2 for all 2^n basis indices."""
    bits = np.arange(2**n_qubits, dtype=np.uint32)
    parity = np.zeros(2**n_qubits, dtype=np.float64)
    for b in range(n_qubits):
        parity += (bits >> b) & 1
    return parity % 2


@lru_cache(maxsize=None)
def _even_vector(n_qubits: int) -> np.ndarray:
    return 1.0 - parity_vector(n_qubits)


def parity_even_array(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """p_even for each state in a (..., 2^n) array."""
    if not amps.flags.c_contiguous:
        amps = np.ascontiguousarray(amps)
    floats = amps.view(np.float64)
    re = floats[..., 0::2]
    im = floats[..., 1::2]
    probs = re * re
    probs += im * im
    return probs @ _even_vector(n_qubits)


def parity_probs_array(amps: np.ndarray, n_qubits: int):
    """(p_even, p_odd) for each state in a (..., 2^n) array."""
    probs = np.abs(amps) ** 2
    p_odd = probs @ parity_vector(n_qubits)
    return probs.sum(axis=-1) - p_odd, p_odd


# ---------------------------------------------------------------------------
# single-state interface

class Statevector:
    """A normalized pure state of ``n_qubits`` qubits."""

    def __init__(self, n_qubits: int, amps: np.ndarray | None = None):
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValidationError(
                f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}"
            )
        self.n_qubits = n_qubits
        if amps is None:
            amps = zero_amps(n_qubits)
        else:
            amps = np.asarray(amps, dtype=np.complex128)
            if amps.shape != (2**n_qubits,):
                raise ValidationError(
                    f"expected {2**n_qubits} amplitudes, got shape {amps.shape}"
                )
        self.amps = amps

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amps.copy())

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def apply(self, gate: Gate) -> "Statevector":
        apply_gate_array(self.amps, self.n_qubits, gate)
        return self

    def run(self, gates) -> "Statevector":
        for gate in gates:
            self.apply(gate)
        return self


def init_zero(n_qubits: int) -> Statevector:
    return Statevector(n_qubits)


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    return state.apply(gate)


def parity_probability(state: Statevector) -> tuple[float, float]:
    """(p_even, p_odd); class 0 reads out even parity, class 1 odd parity."""
    norm = state.norm_sq()
    if abs(norm - 1.0) > 1e-8:
        raise InternalError(f"state norm drifted to {norm!r}")
    p_even, p_odd = parity_probs_array(state.amps, state.n_qubits)
    return float(p_even), float(p_odd)
