"""Shared geometries, cross-sections, measures and potentials."""

import numpy as np
import pytest

from strip_spectrum.potential import ExpressionPotential
from strip_spectrum.spectral.cross_section import first_two_eigenpairs
from strip_spectrum.spectral.models import LebesgueDensity, Measure, Rectangle, StripGeometry


def lebesgue_box(x1_lo: float, x1_hi: float, a: float = 1.0, density: float = 1.0) -> Measure:
    return Measure.single(LebesgueDensity(Rectangle(x1_lo, x1_hi, 0.0, a), constant_density=density))


def well(depth: float, half_width: float = 1.0) -> ExpressionPotential:
    return ExpressionPotential(f"{depth!r}*indicator(x1, {-half_width!r}, {half_width!r})")


@pytest.fixture(scope="session")
def neumann_cs():
    return first_two_eigenpairs(StripGeometry.neumann(1.0))


@pytest.fixture(scope="session")
def robin_cs():
    return first_two_eigenpairs(StripGeometry.robin(1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def dirichlet_cs():
    return first_two_eigenpairs(StripGeometry.dirichlet(1.0))


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
