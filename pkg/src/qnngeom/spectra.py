"""Symmetric eigendecomposition and Fisher-spectrum statistics.

The solver is a cyclic Jacobi sweep: at the matrix sizes used here
(d <= 120) it is fast, simple to verify against reconstruction, and has no
external dependency.  Spectrum statistics feed the barren-plateau and
capacity analyses; histograms mirror the pooled-eigenvalue plots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .fisher import FisherEnsemble

OFF_DIAGONAL_TOL = 1e-12  # relative to the input Frobenius norm
MAX_SWEEPS = 30
RANK_EPS = 1e-10  # relative to the largest eigenvalue


def _off_diagonal_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off**2)))


def eigen_sym(matrix: np.ndarray, max_sweeps: int = MAX_SWEEPS):
    """Eigenvalues (ascending) and orthogonal eigenbasis of a symmetric matrix.

    Cyclic Jacobi rotations run until the off-diagonal Frobenius mass drops
    below 1e-12 of the input norm; failing to converge within ``max_sweeps``
    sweeps raises, loudly.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > 1e-10 * scale:
        raise ValidationError("matrix is not symmetric within 1e-10")
    n = a.shape[0]
    a = (a + a.T) / 2.0
    q = np.eye(n)
    fro = float(np.sqrt(np.sum(a**2)))
    if fro == 0.0 or n == 1:
        values = np.diag(a).copy()
        order = np.argsort(values, kind="stable")
        return values[order], q[:, order]
    threshold = OFF_DIAGONAL_TOL * fro
    sweeps = 0
    while _off_diagonal_norm(a) >= threshold:
        if sweeps >= max_sweeps:
            raise NumericalError(
                f"Jacobi failed to converge within {max_sweeps} sweeps "
                f"(off-diagonal mass {_off_diagonal_norm(a):.3e}, "
                f"need < {threshold:.3e})"
            )
        sweeps += 1
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                diff = a[r, r] - a[p, p]
                if abs(apr) < 1e-36 * abs(diff):
                    t = apr / diff
                else:
                    phi = diff / (2.0 * apr)
                    t = 1.0 / (abs(phi) + math.sqrt(phi * phi + 1.0))
                    if phi < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app, arr_ = a[p, p], a[r, r]
                col_p = a[:, p].copy()
                col_r = a[:, r].copy()
                a[:, p] = c * col_p - s * col_r
                a[:, r] = s * col_p + c * col_r
                row_p = a[p, :].copy()
                row_r = a[r, :].copy()
                a[p, :] = c * row_p - s * row_r
                a[r, :] = s * row_p + c * row_r
                a[p, p] = app - t * apr
                a[r, r] = arr_ + t * apr
                a[p, r] = 0.0
                a[r, p] = 0.0
                qp = q[:, p].copy()
                q[:, p] = c * qp - s * q[:, r]
                q[:, r] = s * qp + c * q[:, r]
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], q[:, order]


def eigenvalues_sym(matrix: np.ndarray) -> np.ndarray:
    return eigen_sym(matrix)[0]


@dataclass
class SpectrumStats:
    """Summary of one Fisher matrix's eigenvalue spectrum."""

    eigenvalues: np.ndarray  # ascending
    rank_eps: float
    numeric_rank: int
    condition_number: float  # inf when the matrix is rank-deficient
    near_zero_fraction: float

    def as_dict(self) -> dict:
        return {
            "numeric_rank": self.numeric_rank,
            "condition_number": self.condition_number,
            "near_zero_fraction": self.near_zero_fraction,
            "lambda_max": float(self.eigenvalues[-1]),
            "lambda_min": float(self.eigenvalues[0]),
            "trace": float(self.eigenvalues.sum()),
        }


def spectrum_stats(eigenvalues: np.ndarray, rank_eps: float = RANK_EPS) -> SpectrumStats:
    values = np.sort(np.asarray(eigenvalues, dtype=np.float64))
    lam_max = float(values[-1]) if values.size else 0.0
    if values.size and float(values[0]) < -1e-9 * max(1.0, lam_max):
        raise NumericalError(
            f"eigenvalue {values[0]!r} below the PSD tolerance"
        )
    if lam_max <= 0.0:
        return SpectrumStats(values, rank_eps, 0, float("inf"), 1.0)
    cutoff = rank_eps * lam_max
    above = values[values > cutoff]
    rank = int(above.size)
    condition = float(lam_max / above[0]) if rank == values.size else float("inf")
    return SpectrumStats(
        eigenvalues=values,
        rank_eps=rank_eps,
        numeric_rank=rank,
        condition_number=condition,
        near_zero_fraction=float(1.0 - rank / values.size),
    )


def ensemble_eigenvalues(ensemble: FisherEnsemble) -> np.ndarray:
    """Eigenvalues of every matrix in the ensemble, shape (n, d) ascending."""
    return np.stack([eigenvalues_sym(e.matrix) for e in ensemble.estimates])


def ensemble_stats(eigenvalue_rows: np.ndarray, rank_eps: float = RANK_EPS):
    return [spectrum_stats(row, rank_eps) for row in eigenvalue_rows]


@dataclass
class Histogram:
    edges: np.ndarray  # length bins + 1
    counts: np.ndarray  # length bins

    def rows(self):
        return [
            (float(self.edges[i]), float(self.edges[i + 1]), int(self.counts[i]))
            for i in range(len(self.counts))
        ]


def spectrum_histogram(
    eigenvalue_rows: np.ndarray,
    bins: int = 50,
    zoom_first_bin: bool = False,
):
    """Pooled-eigenvalue histogram over [0, lambda_max].

    Returns the main histogram, plus a second one restricted to the first
    bin when ``zoom_first_bin`` is set (mirroring the inset subplots).
    """
    if bins < 1:
        raise ValidationError("bins must be >= 1")
    pooled = np.asarray(eigenvalue_rows, dtype=np.float64).reshape(-1)
    if pooled.size == 0:
        raise ValidationError("need at least one eigenvalue")
    pooled = np.clip(pooled, 0.0, None)  # PSD tolerance noise sits below zero
    lam_max = float(pooled.max())
    if lam_max <= 0.0:
        main = Histogram(np.zeros(2), np.array([pooled.size]))
        return (main, Histogram(np.zeros(2), np.array([pooled.size]))) if zoom_first_bin else main
    counts, edges = np.histogram(pooled, bins=bins, range=(0.0, lam_max))
    main = Histogram(edges, counts)
    if not zoom_first_bin:
        return main
    first_hi = edges[1]
    in_first = pooled[pooled <= first_hi]
    zcounts, zedges = np.histogram(in_first, bins=bins, range=(0.0, first_hi))
    return main, Histogram(zedges, zcounts)
