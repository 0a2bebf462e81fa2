"""Transverse eigenvalue problem: closed forms, oracle agreement and edge cases."""

import math

import numpy as np
import pytest
from scipy import integrate

from strip_spectrum.exceptions import UnsupportedBranchError
from strip_spectrum.spectral.cross_section import (
    cell_lambda2,
    eigenvalue_lower_bound,
    fd_eigenvalues,
    first_two_eigenpairs,
    gap_constant,
    robin_residuals,
    secular_value,
)
from strip_spectrum.spectral.models import EigenBranch, StripGeometry

CLOSED_FORM_TOL = 1e-9
FD_STEP = 1.0 / 2048.0
FD_REL_TOL = 1e-5
FD_LAMBDA_FLOOR = 1e-2


def _l2_norm_sq(cs) -> float:
    value, _ = integrate.quad(lambda x: float(cs.u1(np.array([x]))[0]) ** 2, 0.0, cs.geometry.a,
                              epsabs=1e-14, epsrel=1e-12, limit=200)
    return value


class TestClosedForms:
    def test_neumann(self, neumann_cs):
        assert neumann_cs.lambda1 == pytest.approx(0.0, abs=CLOSED_FORM_TOL)
        assert neumann_cs.lambda2 == pytest.approx(math.pi ** 2, abs=CLOSED_FORM_TOL)
        assert neumann_cs.u1.branch == EigenBranch.AFFINE

    def test_dirichlet(self, dirichlet_cs):
        assert dirichlet_cs.lambda1 == pytest.approx(math.pi ** 2, abs=CLOSED_FORM_TOL)
        assert dirichlet_cs.lambda2 == pytest.approx(4 * math.pi ** 2, abs=CLOSED_FORM_TOL)

    def test_robin_unit_parameters(self, robin_cs):
        assert robin_cs.lambda1 == pytest.approx(-1.0, abs=CLOSED_FORM_TOL)
        assert robin_cs.lambda2 == pytest.approx(math.pi ** 2, abs=CLOSED_FORM_TOL)
        assert robin_cs.u1.branch == EigenBranch.HYPERBOLIC

    def test_dirichlet_width_scaling(self):
        cs = first_two_eigenpairs(StripGeometry.dirichlet(2.0))
        assert cs.lambda1 == pytest.approx(math.pi ** 2 / 4, abs=CLOSED_FORM_TOL)


class TestGroundState:
    @pytest.mark.parametrize("geometry", [
        StripGeometry.neumann(1.0),
        StripGeometry.robin(1.0, 1.0, 1.0),
        StripGeometry.robin(2.0, -1.5, 0.5),
        StripGeometry.dirichlet(1.5),
    ])
    def test_normalized_and_positive(self, geometry):
        cs = first_two_eigenpairs(geometry)
        assert _l2_norm_sq(cs) == pytest.approx(1.0, abs=1e-10)
        interior = cs.u1_samples[1:-1, 1]
        assert np.all(interior > 0)

    def test_boundary_residuals(self):
        cs = first_two_eigenpairs(StripGeometry.robin(1.0, 2.0, -1.0))
        r0, ra = robin_residuals(cs)
        assert r0 < 1e-9
        assert ra < 1e-9

    def test_secular_value_vanishes_at_roots(self):
        geometry = StripGeometry.robin(1.0, 0.7, 2.3)
        cs = first_two_eigenpairs(geometry)
        assert abs(secular_value(geometry, cs.lambda1)) < 1e-8
        assert abs(secular_value(geometry, cs.lambda2)) < 1e-8


class TestFiniteDifferenceOracle:
    @pytest.mark.parametrize("alpha,beta", [(-3.0, -3.0), (-3.0, 3.0), (0.0, 0.0), (0.0, 1.5), (3.0, -1.5), (3.0, 3.0)])
    def test_matches_fd_eigenvalues(self, alpha, beta):
        geometry = StripGeometry.robin(1.0, alpha, beta)
        cs = first_two_eigenpairs(geometry)
        fd = fd_eigenvalues(geometry, FD_STEP, 2)
        for exact, approx in zip((cs.lambda1, cs.lambda2), fd):
            assert abs(exact - approx) <= FD_REL_TOL * max(abs(exact), FD_LAMBDA_FLOOR)

    def test_fd_dirichlet(self):
        fd = fd_eigenvalues(StripGeometry.dirichlet(1.0), FD_STEP, 2)
        assert fd[0] == pytest.approx(math.pi ** 2, rel=FD_REL_TOL)
        assert fd[1] == pytest.approx(4 * math.pi ** 2, rel=FD_REL_TOL)

    def test_fd_rejects_coarse_mesh(self):
        with pytest.raises(ValueError, match="too coarse"):
            fd_eigenvalues(StripGeometry.neumann(1.0), 0.5)


class TestLowerBoundAndGap:
    @pytest.mark.parametrize("geometry", [
        StripGeometry.robin(0.1, 2.0, -2.0),
        StripGeometry.robin(3.0, 3.0, 3.0),
        StripGeometry.robin(0.5, 1.0, 0.0),
        StripGeometry.neumann(1.0),
    ])
    def test_lower_bound_holds(self, geometry):
        cs = first_two_eigenpairs(geometry)
        assert eigenvalue_lower_bound(geometry) <= cs.lambda1 + 1e-9

    def test_narrow_strip_finds_both_roots(self):
        cs = first_two_eigenpairs(StripGeometry.robin(0.05, 3.0, 3.0))
        assert cs.lambda1 < cs.lambda2

    def test_dirichlet_gap_constant(self):
        for a in (0.5, 1.0, 2.0, 3.0):
            geometry = StripGeometry.dirichlet(a)
            assert gap_constant(geometry) == pytest.approx(max(a * a / 3.0, 1.0) / math.pi ** 2, rel=1e-12)

    def test_cell_lambda2_caps_at_longitudinal_mode(self):
        cs = first_two_eigenpairs(StripGeometry.neumann(2.0))
        assert cell_lambda2(cs.geometry, cs) == pytest.approx(math.pi ** 2 / 4, rel=1e-10)


class TestMonotonicity:
    def test_lambda1_non_increasing_in_alpha(self):
        lambdas = [first_two_eigenpairs(StripGeometry.robin(1.0, float(alpha), 0.5)).lambda1
                   for alpha in np.linspace(-3.0, 3.0, 13)]
        assert np.all(np.diff(lambdas) <= 1e-10)
        assert lambdas[-1] < lambdas[0]

    def test_lambda1_non_decreasing_in_beta(self):
        lambdas = [first_two_eigenpairs(StripGeometry.robin(1.0, 0.5, float(beta))).lambda1
                   for beta in np.linspace(-3.0, 3.0, 13)]
        assert np.all(np.diff(lambdas) >= -1e-10)
        assert lambdas[-1] > lambdas[0]


class TestErrors:
    def test_secular_value_dirichlet(self):
        with pytest.raises(UnsupportedBranchError):
            secular_value(StripGeometry.dirichlet(1.0), 1.0)

    def test_nonpositive_tolerance(self):
        with pytest.raises(ValueError, match="tolerance"):
            first_two_eigenpairs(StripGeometry.neumann(1.0), tol=0.0)

    def test_invalid_width(self):
        with pytest.raises(ValueError, match="width"):
            StripGeometry.robin(0.0, 1.0, 1.0)
