"""Finite-element counter, inertia, reduced 1D count and test-function energies."""

import logging

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import lebesgue_box, well
from strip_spectrum.exceptions import MeshError
from strip_spectrum.potential import ExpressionPotential, zero_potential
from strip_spectrum.spectral.bound import build_nu
from strip_spectrum.spectral.counter import (
    assemble_form,
    build_mesh,
    count_negative,
    count_negative_1d,
    dense_inertia,
    inertia,
    matrix_coordinates,
    shooting_count,
    split_decay_order,
    testfunction_energy,
    verify_projection_split,
    window_profile,
)
from strip_spectrum.spectral.models import CountControls, NuMeasure, StripGeometry

UNIT_WELL_NODES = 64


def _unit_interval_nu(depth: float) -> NuMeasure:
    x = (np.arange(UNIT_WELL_NODES) + 0.5) / UNIT_WELL_NODES
    return NuMeasure(x1=x, weights=np.full(UNIT_WELL_NODES, depth / UNIT_WELL_NODES), x1_range=(-8.0, 8.0))


def _random_symmetric(rng, n: int) -> np.ndarray:
    B = rng.standard_normal((n, n))
    return (B + B.T) / 2


class TestInertia:
    def test_matches_dense_on_random_matrices(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 80))
            A = _random_symmetric(rng, n)
            sparse = inertia(sp.csr_matrix(A))
            dense = dense_inertia(A)
            assert (sparse.n_neg, sparse.n_zero, sparse.n_pos) == (dense.n_neg, dense.n_zero, dense.n_pos)

    def test_banded_matrix(self, rng):
        n = 200
        off = rng.standard_normal(n - 2)
        A = sp.diags([off, rng.standard_normal(n), off], [-2, 0, 2])
        assert inertia(A.tocsr()).n_neg == dense_inertia(A).n_neg

    def test_diagonal(self):
        result = inertia(sp.diags([-1.0, 2.0, -3.0]).tocsr())
        assert (result.n_neg, result.n_zero, result.n_pos) == (2, 0, 1)
        assert result.dimension == 3

    def test_zero_matrix(self):
        result = inertia(sp.csr_matrix((3, 3)))
        assert (result.n_neg, result.n_zero, result.n_pos) == (0, 3, 0)

    def test_singular_matrix(self):
        result = inertia(sp.diags([0.0, 1.0, -1.0]).tocsr())
        assert (result.n_neg, result.n_zero, result.n_pos) == (1, 1, 1)

    def test_empty_matrix(self):
        assert inertia(sp.csr_matrix((0, 0))).dimension == 0

    def test_congruence_preserves_inertia(self, rng):
        for _ in range(5):
            n = int(rng.integers(5, 40))
            A = _random_symmetric(rng, n)
            expected = dense_inertia(A)
            perm = np.eye(n)[rng.permutation(n)]
            unit_upper = np.eye(n) + np.triu(rng.standard_normal((n, n)) / n, 1)
            for P in (perm, unit_upper):
                result = inertia(sp.csr_matrix(P.T @ A @ P))
                assert (result.n_neg, result.n_zero, result.n_pos) == (expected.n_neg, expected.n_zero, expected.n_pos)


class TestMesh:
    def test_dimensions(self):
        mesh = build_mesh(StripGeometry.neumann(1.0), 4.0, 0.25)
        assert (mesh.n1, mesh.n2) == (32, 4)
        assert mesh.block_size == 5
        assert mesh.columns == 31

    def test_dirichlet_clamps_edges(self):
        mesh = build_mesh(StripGeometry.dirichlet(1.0), 4.0, 0.25)
        assert mesh.block_size == 3

    @pytest.mark.parametrize("L,h,match", [
        (2.0, 0.25, "half-length"),
        (4.0, 0.0, "positive"),
        (4.0, 0.3, "does not divide"),
    ])
    def test_invalid_parameters(self, L, h, match):
        with pytest.raises(MeshError, match=match):
            build_mesh(StripGeometry.neumann(1.0), L, h)

    def test_dirichlet_needs_two_intervals(self):
        with pytest.raises(MeshError, match="two intervals"):
            build_mesh(StripGeometry.dirichlet(0.5), 4.0, 0.5)


class TestCountNegative:
    def test_zero_potential_has_no_negative_eigenvalues(self, robin_cs):
        controls = CountControls(L=4.0, h=0.25, max_refinements=2)
        result = count_negative(robin_cs.geometry, lebesgue_box(-1.0, 1.0), zero_potential(), controls, cs=robin_cs)
        assert result.n_neg == 0
        assert result.stable
        assert [(s.L, s.h) for s in result.refinement_trace] == [(4.0, 0.25), (4.0, 0.125), (8.0, 0.125)]

    def test_unstable_without_refinements(self, neumann_cs):
        controls = CountControls(L=4.0, h=0.25, max_refinements=0)
        result = count_negative(neumann_cs.geometry, lebesgue_box(-1.0, 1.0), well(10.0), controls, cs=neumann_cs)
        assert not result.stable
        assert len(result.refinement_trace) == 1

    def test_deep_well_matches_dense(self, neumann_cs):
        form = assemble_form(neumann_cs.geometry, neumann_cs, lebesgue_box(-1.0, 1.0), well(100.0), 4.0, 0.125)
        assert inertia(form).n_neg == dense_inertia(form.matrix).n_neg
        assert inertia(form).n_neg > 1

    def test_count_grows_with_depth(self, robin_cs):
        controls = CountControls(L=4.0, h=0.25, max_refinements=0)
        counts = [count_negative(robin_cs.geometry, lebesgue_box(-1.0, 1.0), well(d), controls, cs=robin_cs).n_neg
                  for d in (1.0, 30.0, 300.0)]
        assert counts == sorted(counts)
        assert counts[-1] > counts[0]

    def test_measure_outside_strip(self, neumann_cs):
        bad = lebesgue_box(-1.0, 1.0, a=2.0)
        with pytest.raises(MeshError, match="outside the mesh"):
            assemble_form(neumann_cs.geometry, neumann_cs, bad, well(1.0), 4.0, 0.25)

    def test_count_non_decreasing_in_half_length(self, robin_cs):
        counts = []
        for L in (4.0, 8.0, 16.0):
            form = assemble_form(robin_cs.geometry, robin_cs, lebesgue_box(-6.0, 6.0), well(20.0, 5.0), L, 0.25)
            counts.append(inertia(form).n_neg)
        assert counts == sorted(counts)

    def test_nodes_beyond_half_length_are_reported(self, neumann_cs, caplog):
        with caplog.at_level(logging.WARNING, logger="strip_spectrum.spectral.counter"):
            assemble_form(neumann_cs.geometry, neumann_cs, lebesgue_box(-6.0, 6.0), well(1.0, 5.0), 4.0, 0.25)
        assert "beyond |x1| = 4" in caplog.text
        assert "dropped" in caplog.text

    def test_uncharged_nodes_beyond_half_length_are_silent(self, neumann_cs, caplog):
        with caplog.at_level(logging.WARNING, logger="strip_spectrum.spectral.counter"):
            assemble_form(neumann_cs.geometry, neumann_cs, lebesgue_box(-6.0, 6.0), well(1.0), 4.0, 0.25)
            assemble_form(neumann_cs.geometry, neumann_cs, lebesgue_box(-4.0, 4.0), well(1.0, 5.0), 4.0, 0.25)
        assert "beyond" not in caplog.text

    def test_matrix_is_symmetric(self, robin_cs):
        form = assemble_form(robin_cs.geometry, robin_cs, lebesgue_box(-1.0, 1.0), well(5.0), 4.0, 0.25)
        assert abs(form.matrix - form.matrix.T).max() < 1e-12
        coords = matrix_coordinates(form)
        assert len(coords) == form.matrix.nnz
        assert coords == sorted(coords, key=lambda c: (c[0], c[1]))


class TestReducedCount:
    def test_delta_atom(self):
        nu = NuMeasure(x1=np.array([0.0]), weights=np.array([1.0]), x1_range=(-8.0, 8.0))
        assert count_negative_1d(nu, 8.0, 1.0 / 16.0) == 1

    def test_empty_measure(self):
        nu = NuMeasure(x1=np.zeros(0), weights=np.zeros(0), x1_range=(-8.0, 8.0))
        assert count_negative_1d(nu, 8.0, 1.0 / 16.0) == 0

    @pytest.mark.parametrize("depth,expected", [(1.0, 1), (25.0, 3)])
    def test_matches_shooting(self, depth, expected):
        # coupling 2 turns nu = depth * 1_[0, 1] dx into the well 2 * depth * 1_[0, 1]
        nu = _unit_interval_nu(depth)
        fe = count_negative_1d(nu, 8.0, 1.0 / 16.0)
        shot = shooting_count(lambda x: np.where((x >= 0) & (x <= 1), 2.0 * depth, 0.0), 8.0, breakpoints=(0.0, 1.0))
        assert shot == expected
        assert fe == expected

    def test_reduced_count_from_strip_measure(self, neumann_cs):
        nu = build_nu(well(1.0), neumann_cs, lebesgue_box(-1.0, 1.0), (-8.0, 8.0), 1.0 / 32.0)
        assert count_negative_1d(nu, 8.0, 1.0 / 16.0) >= 1

    def test_rejects_non_dividing_step(self):
        nu = NuMeasure(x1=np.zeros(0), weights=np.zeros(0), x1_range=(-1.0, 1.0))
        with pytest.raises(MeshError):
            count_negative_1d(nu, 1.0, 0.3)


class TestTestFunctions:
    @pytest.mark.parametrize("n", [1, 2, 5, -1, -3])
    def test_energy_closed_form(self, n, robin_cs):
        result = testfunction_energy(robin_cs.geometry, robin_cs, n)
        assert result.energy == pytest.approx(5.0 * 2 ** abs(n), rel=1e-14)
        assert abs(result.transverse_residual) < 1e-8

    def test_dirichlet_transverse_identity(self, dirichlet_cs):
        result = testfunction_energy(dirichlet_cs.geometry, dirichlet_cs, 2)
        assert abs(result.transverse_residual) < 1e-8

    def test_binding_window(self, neumann_cs):
        mu = lebesgue_box(2.0, 4.0)
        result = testfunction_energy(neumann_cs.geometry, neumann_cs, 2, V=ExpressionPotential("10"), mu=mu)
        assert result.F_n == pytest.approx(60.0, rel=1e-12)
        assert result.binds
        assert result.form_value < 0

    def test_profile_reflection(self):
        knots, values = window_profile(2)
        assert knots.tolist() == [1.0, 2.0, 4.0, 8.0]
        assert values.tolist() == [0.0, 4.0, 4.0, 0.0]
        neg_knots, neg_values = window_profile(-2)
        assert neg_knots.tolist() == [-8.0, -4.0, -2.0, -1.0]
        assert neg_values.tolist() == [0.0, 4.0, 4.0, 0.0]

    def test_profile_rejects_center_window(self):
        with pytest.raises(ValueError, match="n != 0"):
            window_profile(0)


class TestProjectionSplit:
    def test_split_converges(self, robin_cs):
        cs = robin_cs
        coarse = verify_projection_split(cs.geometry, cs, 1.0 / 16.0, 3, seed=0)
        fine = verify_projection_split(cs.geometry, cs, 1.0 / 32.0, 3, seed=0)
        assert fine.orthogonality < 1e-10
        assert fine.split < 1e-6
        assert fine.gap_margin >= -1e-6
        assert split_decay_order(coarse, fine) >= 1.8
