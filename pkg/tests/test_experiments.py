import numpy as np
import pytest

from qnngeom.classical import MlpClassifier
from qnngeom.errors import ValidationError
from qnngeom.experiments import (
    barren_pipeline,
    best_classical_topology,
    build_model,
    effdim_pipeline,
    identity_effdim_curve,
    load_named_dataset,
    rank_topologies,
    resolve_var_depth,
    sensitivity_pipeline,
    spectrum_pipeline,
)
from qnngeom.quantum import QuantumClassifier
from qnngeom.rng import RngStream


class TestModelSpecs:
    def test_quantum_variants(self):
        qnn = build_model("qnn", n_qubits=4, d=40)
        assert isinstance(qnn, QuantumClassifier)
        assert qnn.feature_map == "hard_zz"
        assert qnn.var_depth == 9
        assert qnn.n_params == 40

        easy = build_model("easy-qnn", n_qubits=4, var_depth=1)
        assert easy.feature_map == "easy_angle"
        assert easy.n_params == 8

        linear = build_model("qnn-linear", n_qubits=4, d=8)
        assert linear.feature_map == "hard_zz_linear"
        assert linear.entanglement == "linear"

    def test_classical_topology_string(self):
        model = build_model("4-2-8-2:bias:tanh")
        assert isinstance(model, MlpClassifier)
        assert model.n_params == 52

    def test_budget_consistency_checked(self):
        with pytest.raises(ValidationError):
            build_model("4-2-8-2", d=99)
        with pytest.raises(ValidationError):
            build_model("qnn", n_qubits=4, d=41)
        with pytest.raises(ValidationError):
            build_model("qnn", n_qubits=4, d=4)  # would need var_depth 0

    def test_unknown_spec_rejected(self):
        with pytest.raises(ValidationError):
            build_model("resnet50")

    def test_resolve_var_depth(self):
        assert resolve_var_depth(4, 40, None) == 9
        assert resolve_var_depth(4, None, 3) == 3
        assert resolve_var_depth(4, None, None) == 9
        assert resolve_var_depth(4, 8, 1) == 1
        with pytest.raises(ValidationError):
            resolve_var_depth(4, 8, 3)


class TestComparatorSelection:
    def test_selection_is_deterministic(self):
        a, _ = best_classical_topology(8, 4, 2, RngStream(1), n_theta=6, k=30)
        b, _ = best_classical_topology(8, 4, 2, RngStream(1), n_theta=6, k=30)
        assert a == b

    def test_table_is_rank_sorted(self):
        table = rank_topologies(8, 4, 2, RngStream(2), n_theta=5, k=25)
        ranks = [row.mean_rank for row in table]
        assert ranks == sorted(ranks, reverse=True)
        assert all(row.d == 8 for row in table)

    def test_empty_budget_is_an_error(self):
        with pytest.raises(ValidationError):
            best_classical_topology(3, 4, 2, RngStream(3))


class TestPipelines:
    def test_spectrum_pipeline_shapes(self):
        model = build_model("easy-qnn", n_qubits=2, var_depth=1)
        ensemble, eigenvalues, stats, hist, zoom = spectrum_pipeline(
            model, 6, 15, 10, RngStream(4)
        )
        assert eigenvalues.shape == (6, 4)
        assert len(stats) == 6
        assert hist.counts.sum() == 24
        assert zoom.counts.sum() >= 1

    def test_effdim_pipeline_monotone_n(self):
        model = build_model("easy-qnn", n_qubits=2, var_depth=1)
        result = effdim_pipeline(model, 1.0, [1e4, 1e8, 1e12], 8, 20, RngStream(5))
        assert result.d == 4
        assert np.all(result.normalised <= 1.0 + 1e-12)

    def test_identity_curve_matches_closed_form(self):
        from qnngeom.effdim import identity_effdim

        result = identity_effdim_curve(8, 1.0, [1e3, 1e6])
        expected = [identity_effdim(8, 1.0, n) for n in (1e3, 1e6)]
        np.testing.assert_allclose(result.values, expected, atol=1e-9)

    def test_barren_pipeline_validations(self):
        with pytest.raises(ValidationError):
            barren_pipeline("qnn", [], 10, 10, RngStream(6))
        with pytest.raises(ValidationError):
            barren_pipeline("4-2-8-2", [2, 3], 10, 10, RngStream(7))

    def test_barren_pipeline_runs(self):
        diag = barren_pipeline("easy-qnn", [2, 3], 10, 10, RngStream(8), var_depth=1)
        assert diag.qubit_grid == [2, 3]
        assert diag.d_values == [4, 6]

    def test_sensitivity_rows(self):
        model = build_model("easy-qnn", n_qubits=2, var_depth=1)
        rows = sensitivity_pipeline(model, [5, 10], 3, 1.0, 1e6, RngStream(9))
        assert [r.n_samples for r in rows] == [5, 10]
        assert all(r.std_effdim_norm >= 0 for r in rows)
        with pytest.raises(ValidationError):
            sensitivity_pipeline(model, [], 3, 1.0, 1e6, RngStream(10))


class TestDatasets:
    def test_iris_is_normalized(self):
        ds = load_named_dataset("iris2")
        assert ds.features.min() == pytest.approx(-1.0)
        assert ds.features.max() == pytest.approx(1.0)

    def test_unknown_name_lists_options(self):
        with pytest.raises(ValidationError, match="iris2"):
            load_named_dataset("mnist")
