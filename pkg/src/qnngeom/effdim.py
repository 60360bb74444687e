"""Effective dimension and the generalisation-bound evaluator.

The effective dimension of a model with normalised Fisher matrices F_hat is

    2 * log( mean_theta sqrt(det(I + kappa F_hat(theta))) ) / log(kappa),
    kappa = gamma * n / (2 pi log n),

with the theta-integral replaced by a Monte Carlo mean.  Everything is
evaluated from eigenvalues in log space: per sample a = 0.5 * sum
log(1 + kappa * lambda_i), combined with a log-sum-exp, so huge
determinants never materialise.  All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalError, ValidationError

LOG_KAPPA_TOL = 1e-12


def kappa(gamma: float, n: float) -> float:
    """The resolution factor gamma * n / (2 pi log n)."""
    if not 0.0 < gamma <= 1.0:
        raise ValidationError(f"gamma must lie in (0, 1], got {gamma}")
    if n <= 1:
        raise ValidationError(f"n must be > 1, got {n}")
    return gamma * n / (2.0 * math.pi * math.log(n))


def _check_log_kappa(kap: float, n) -> float:
    if kap <= 0.0:
        raise NumericalError(f"kappa <= 0 at n={n}")
    log_kappa = math.log(kap)
    if abs(log_kappa) < LOG_KAPPA_TOL:
        raise NumericalError(
            f"effective dimension undefined at n={n}: kappa is 1 "
            "(log-kappa denominator vanishes)"
        )
    return log_kappa


def effective_dimension(eigenvalue_rows, gamma: float, n: float) -> float:
    """Monte Carlo effective dimension from normalised Fisher eigenvalues.

    ``eigenvalue_rows`` holds one row of eigenvalues per parameter sample
    (zero-padding is harmless, so rank-deficient spectra may pass only
    their nonzero part).
    """
    rows = np.asarray(eigenvalue_rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.size == 0:
        raise ValidationError("need at least one eigenvalue row")
    if rows.min() < -1e-9 * max(1.0, float(rows.max())):
        raise ValidationError("eigenvalues must be nonnegative")
    kap = kappa(gamma, n)
    log_kappa = _check_log_kappa(kap, n)
    half_logdets = 0.5 * np.sum(np.log1p(kap * np.clip(rows, 0.0, None)), axis=1)
    log_mean = logsumexp(half_logdets) - math.log(rows.shape[0])
    return 2.0 * float(log_mean) / log_kappa


def identity_effdim(d: int, gamma: float, n: float) -> float:
    """Closed form for F_hat = identity: d * log(1 + kappa) / log(kappa)."""
    kap = kappa(gamma, n)
    return d * math.log1p(kap) / _check_log_kappa(kap, n)


def default_n_grid(lo: float = 1e2, hi: float = 1e12, points: int = 30) -> np.ndarray:
    grid = np.unique(np.round(np.logspace(math.log10(lo), math.log10(hi), points)))
    return grid[grid > 1]


@dataclass
class EffDimResult:
    gamma: float
    n_grid: np.ndarray
    values: np.ndarray
    d: int

    @property
    def normalised(self) -> np.ndarray:
        return self.values / self.d

    def rows(self):
        return [
            (float(n), kappa(self.gamma, n), float(v), float(v) / self.d)
            for n, v in zip(self.n_grid, self.values)
        ]


def effdim_curve(eigenvalue_rows, gamma: float, n_grid, d: int | None = None) -> EffDimResult:
    """Effective dimension over an ascending grid of data counts."""
    rows = np.asarray(eigenvalue_rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    n_grid = np.asarray(n_grid, dtype=np.float64)
    if n_grid.size == 0:
        raise ValidationError("empty n grid")
    if np.any(np.diff(n_grid) <= 0):
        raise ValidationError("n grid must be strictly ascending")
    values = np.array([effective_dimension(rows, gamma, n) for n in n_grid])
    return EffDimResult(
        gamma=gamma,
        n_grid=n_grid,
        values=values,
        d=d if d is not None else rows.shape[1],
    )


# ---------------------------------------------------------------------------
# generalisation bound (right-hand side)

MIN_ALPHA = 0.05


@dataclass(frozen=True)
class BoundInputs:
    """Inputs to the generalisation-bound evaluator.

    ``m_const`` is the combined continuity constant M1^alpha * M2, ``b_range``
    the loss range B, and ``c_const`` the dimensional constant (2 sqrt d in
    the constant-Fisher special case).  ``d_eff`` must be the effective
    dimension already evaluated at n^(1/alpha).
    """

    d_eff: float
    gamma: float
    n: int
    alpha: float
    m_const: float
    b_range: float
    c_const: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.n <= 1:
            raise ValidationError("n must be > 1")
        if self.d_eff <= 0 or self.m_const < 0 or self.b_range <= 0 or self.c_const <= 0:
            raise ValidationError("bound constants must be positive (M may be zero)")


@dataclass
class BoundResult:
    log_value: float
    value: float  # exp(log_value); may underflow to exactly 0.0
    log_kappa_alpha: float
    deviation_threshold: float  # the 4 M sqrt(2 pi log n / (gamma n)) scale

    def as_dict(self) -> dict:
        return {
            "log_rhs": self.log_value,
            "rhs": self.value,
            "log_kappa_alpha": self.log_kappa_alpha,
            "deviation_threshold": self.deviation_threshold,
        }


def constant_fisher_c(d: int) -> float:
    """The dimensional constant in the theta-independent-Fisher special case."""
    return 2.0 * math.sqrt(d)


def generalisation_bound_rhs(inputs: BoundInputs) -> BoundResult:
    """Log-space evaluation of the bound's right-hand side.

    The probability that the empirical risk deviates from the true risk by
    the returned threshold is bounded by
    c * kappa'^(d_eff / 2) * exp(-16 M^2 pi log n / (B^2 gamma)), with
    kappa' = gamma n^(1/alpha) / (2 pi log n^(1/alpha)).
    """
    if inputs.alpha < MIN_ALPHA:
        raise NumericalError(
            f"alpha={inputs.alpha} < {MIN_ALPHA}: n^(1/alpha) overflows any "
            "sensible range"
        )
    log_n = math.log(inputs.n)
    log_kappa_alpha = (
        math.log(inputs.gamma)
        + log_n / inputs.alpha
        - math.log(2.0 * math.pi * log_n / inputs.alpha)
    )
    exponent_term = (
        -16.0 * inputs.m_const**2 * math.pi * log_n
        / (inputs.b_range**2 * inputs.gamma)
    )
    log_value = (
        math.log(inputs.c_const) + 0.5 * inputs.d_eff * log_kappa_alpha + exponent_term
    )
    try:
        value = math.exp(log_value)
    except OverflowError:
        value = math.inf
    threshold = 4.0 * inputs.m_const * math.sqrt(
        2.0 * math.pi * log_n / (inputs.gamma * inputs.n)
    )
    return BoundResult(
        log_value=log_value,
        value=value,
        log_kappa_alpha=log_kappa_alpha,
        deviation_threshold=threshold,
    )
