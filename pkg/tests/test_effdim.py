import math

import mpmath
import numpy as np
import pytest

from qnngeom.effdim import (
    BoundInputs,
    constant_fisher_c,
    default_n_grid,
    effdim_curve,
    effective_dimension,
    generalisation_bound_rhs,
    identity_effdim,
    kappa,
)
from qnngeom.errors import NumericalError, ValidationError


class TestEffectiveDimension:
    def test_identity_matches_closed_form(self):
        for d in (2, 8, 40):
            eigenvalues = np.ones((7, d))
            for n in (1e3, 1e6, 1e9):
                value = effective_dimension(eigenvalues, 1.0, n)
                kap = kappa(1.0, n)
                expected = d * math.log1p(kap) / math.log(kap)
                assert abs(value - expected) <= 1e-9
                assert abs(identity_effdim(d, 1.0, n) - expected) <= 1e-12

    def test_zero_fisher_gives_zero(self):
        assert effective_dimension(np.zeros((5, 8)), 1.0, 1e6) == pytest.approx(0.0)

    def test_two_by_two_determinant_oracle(self):
        a, b = 0.7, 2.9
        gamma, n = 0.5, 1e5
        kap = kappa(gamma, n)
        expected = (math.log((1 + kap * a) * (1 + kap * b))) / math.log(kap)
        value = effective_dimension(np.array([[a, b]]), gamma, n)
        assert value == pytest.approx(expected, abs=1e-12)

    def test_rank_limit(self):
        # constant rank-r spectra converge to r as n grows large
        d = 24
        for r in (1, 5, 12, 24):
            eigenvalues = np.zeros((3, d))
            eigenvalues[:, :r] = 1.0
            value = effective_dimension(eigenvalues, 1.0, 1e12)
            assert abs(value - r) <= 0.02 * r

    def test_order_independence(self):
        gen = np.random.default_rng(0)
        eigenvalues = gen.uniform(0, 5, (9, 16))
        ascending = np.sort(eigenvalues, axis=1)
        descending = ascending[:, ::-1]
        a = effective_dimension(ascending, 1.0, 1e6)
        b = effective_dimension(descending, 1.0, 1e6)
        assert abs(a - b) <= 1e-9

    def test_numerator_monotone_in_n(self):
        gen = np.random.default_rng(1)
        eigenvalues = gen.uniform(0, 3, (6, 10))
        previous = -np.inf
        for n in (1e3, 1e5, 1e8, 1e11):
            kap = kappa(1.0, n)
            half_logdets = 0.5 * np.sum(np.log1p(kap * eigenvalues), axis=1)
            numerator = np.log(np.mean(np.exp(half_logdets - half_logdets.max())))
            numerator += half_logdets.max()
            assert numerator >= previous
            previous = numerator

    def test_per_matrix_envelope(self):
        # det(I + kappa F) <= (1 + kappa lambda_max)^d per matrix
        gen = np.random.default_rng(2)
        eigenvalues = gen.uniform(0, 4, (8, 12))
        for n in (1e4, 1e8):
            kap = kappa(1.0, n)
            value = effective_dimension(eigenvalues, 1.0, n)
            bound = 12 * math.log1p(kap * eigenvalues.max()) / math.log(kap)
            assert value <= bound + 1e-12

    def test_domain_errors(self):
        eigenvalues = np.ones((2, 3))
        with pytest.raises(ValidationError):
            effective_dimension(eigenvalues, 1.0, 1.0)  # n must exceed 1
        with pytest.raises(ValidationError):
            effective_dimension(eigenvalues, 0.0, 100.0)
        with pytest.raises(ValidationError):
            effective_dimension(eigenvalues, 1.5, 100.0)
        with pytest.raises(ValidationError):
            effective_dimension(np.array([[-1.0, 2.0]]), 1.0, 100.0)

    def test_kappa_one_is_explicit_error(self):
        n = 100.0
        gamma = 2.0 * math.pi * math.log(n) / n  # makes kappa exactly 1
        with pytest.raises(NumericalError, match="100"):
            effective_dimension(np.ones((1, 2)), gamma, n)


class TestEffDimCurve:
    def test_values_and_normalisation(self):
        result = effdim_curve(np.ones((4, 8)), 1.0, [1e3, 1e6, 1e9])
        assert result.d == 8
        np.testing.assert_allclose(result.normalised, result.values / 8)
        rows = result.rows()
        assert rows[0][0] == 1e3
        assert rows[0][1] == pytest.approx(kappa(1.0, 1e3))

    def test_full_rank_curve_approaches_d(self):
        grid = default_n_grid()
        result = effdim_curve(np.ones((2, 6)), 1.0, grid)
        assert result.values[-1] == pytest.approx(6.0, rel=1e-3)

    def test_grid_must_ascend(self):
        with pytest.raises(ValidationError):
            effdim_curve(np.ones((1, 2)), 1.0, [1e6, 1e3])
        with pytest.raises(ValidationError):
            effdim_curve(np.ones((1, 2)), 1.0, [])

    def test_default_grid_spans_requested_range(self):
        grid = default_n_grid()
        assert grid[0] == 100.0
        assert grid[-1] == 1e12
        assert len(grid) == 30


def mpmath_bound(inputs: BoundInputs):
    mpmath.mp.dps = 80
    gamma = mpmath.mpf(inputs.gamma)
    n = mpmath.mpf(inputs.n)
    alpha = mpmath.mpf(inputs.alpha)
    n_alpha = n ** (1 / alpha)
    kap = gamma * n_alpha / (2 * mpmath.pi * mpmath.log(n_alpha))
    rhs = (
        mpmath.mpf(inputs.c_const)
        * kap ** (mpmath.mpf(inputs.d_eff) / 2)
        * mpmath.exp(
            -16 * mpmath.mpf(inputs.m_const) ** 2 * mpmath.pi * mpmath.log(n)
            / (mpmath.mpf(inputs.b_range) ** 2 * gamma)
        )
    )
    return mpmath.log(rhs)


class TestGeneralisationBound:
    def test_vanishing_continuity_constant(self):
        inputs = BoundInputs(d_eff=10.0, gamma=0.5, n=10**6, alpha=0.5,
                             m_const=0.0, b_range=2.0, c_const=4.0)
        result = generalisation_bound_rhs(inputs)
        expected = math.log(4.0) + 5.0 * result.log_kappa_alpha
        assert result.log_value == pytest.approx(expected)
        assert result.deviation_threshold == 0.0

    def test_alpha_one_reduces_to_plain_kappa(self):
        inputs = BoundInputs(d_eff=6.0, gamma=1.0, n=10**4, alpha=1.0,
                             m_const=0.3, b_range=1.0, c_const=2.0)
        result = generalisation_bound_rhs(inputs)
        assert result.log_kappa_alpha == pytest.approx(
            math.log(kappa(1.0, 10**4)), rel=1e-12
        )

    def test_matches_extended_precision_transcription(self):
        gen = np.random.default_rng(3)
        for _ in range(20):
            inputs = BoundInputs(
                d_eff=float(gen.uniform(0.5, 80)),
                gamma=float(gen.uniform(0.05, 1.0)),
                n=int(gen.integers(10, 10**9)),
                alpha=float(gen.uniform(0.05, 1.0)),
                m_const=float(gen.uniform(0.0, 3.0)),
                b_range=float(gen.uniform(0.5, 4.0)),
                c_const=float(gen.uniform(0.5, 20.0)),
            )
            result = generalisation_bound_rhs(inputs)
            expected = float(mpmath_bound(inputs))
            assert abs(result.log_value - expected) <= 1e-10 * max(1.0, abs(expected))

    def test_deviation_threshold_formula(self):
        inputs = BoundInputs(d_eff=4.0, gamma=0.25, n=10**5, alpha=1.0,
                             m_const=1.5, b_range=1.0, c_const=1.0)
        result = generalisation_bound_rhs(inputs)
        expected = 4 * 1.5 * math.sqrt(2 * math.pi * math.log(10**5) / (0.25 * 10**5))
        assert result.deviation_threshold == pytest.approx(expected, rel=1e-12)

    def test_tiny_alpha_rejected(self):
        inputs = BoundInputs(d_eff=4.0, gamma=0.5, n=100, alpha=0.049,
                             m_const=1.0, b_range=1.0, c_const=1.0)
        with pytest.raises(NumericalError):
            generalisation_bound_rhs(inputs)

    def test_input_validation(self):
        with pytest.raises(ValidationError):
            BoundInputs(d_eff=4.0, gamma=1.5, n=100, alpha=0.5,
                        m_const=1.0, b_range=1.0, c_const=1.0)
        with pytest.raises(ValidationError):
            BoundInputs(d_eff=4.0, gamma=0.5, n=1, alpha=0.5,
                        m_const=1.0, b_range=1.0, c_const=1.0)
        with pytest.raises(ValidationError):
            BoundInputs(d_eff=-1.0, gamma=0.5, n=100, alpha=0.5,
                        m_const=1.0, b_range=1.0, c_const=1.0)

    def test_constant_fisher_special_case(self):
        assert constant_fisher_c(4) == pytest.approx(4.0)
        assert constant_fisher_c(25) == pytest.approx(10.0)
