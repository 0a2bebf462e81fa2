"""
Pydantic Models for Run Configuration and Report Schemas

This module defines the data models for run configuration files and for every
JSON report the command line writes. A run configuration is a single TOML or
JSON document; it fully determines the numerics of a run.

Key Models:
    - GeometryConfig: strip width and boundary conditions
    - LebesgueComponentConfig / SegmentComponentConfig / CantorComponentConfig:
      measure components, discriminated by `type`
    - PotentialConfig: closed-form expression or sampled grid
    - ControlsConfig / AhlforsConfig: mesh, truncation, constants, seeds
    - RunConfig: the complete run document, with loading and resolution
    - Report models: one per subcommand, plus ErrorReport

Features:
    - Unknown keys rejected, non-finite numbers rejected
    - Discriminated union for measure components
    - Load-time sampling of V >= 0 over the strip and the quadrature nodes
    - Every report carries schema_version
"""

import json
import logging
import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .config import settings
from .exceptions import ConfigError
from .potential import Expression, ExpressionPotential, GridPotential, Potential, check_nonnegative
from .spectral.measure import quadrature
from .spectral.models import (
    CantorSegment,
    CountControls,
    LebesgueDensity,
    LineSegment,
    Measure,
    MeasureComponent,
    Rectangle,
    StripGeometry,
)

logger = logging.getLogger(__name__)

# Sampling grid for the load-time V >= 0 check
CHECK_GRID = (65, 17)
# Points on the closed strip boundary may sit this far outside in floating point
STRIP_SLACK = 1e-12


class StrictModel(BaseModel):
    """Base for configuration blocks: unknown keys and non-finite numbers are errors."""
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class GeometryConfig(StrictModel):
    """
    Strip width and boundary conditions.

    alpha and beta are ignored for a Dirichlet strip.
    """
    a: float = Field(..., gt=0, description="Strip width")
    bc: Literal["robin", "dirichlet"] = Field("robin", description="Boundary condition kind")
    alpha: float = Field(0.0, description="Robin parameter on x2 = 0")
    beta: float = Field(0.0, description="Robin parameter on x2 = a")

    def to_domain(self) -> StripGeometry:
        if self.bc == "dirichlet":
            return StripGeometry.dirichlet(self.a)
        return StripGeometry.robin(self.a, self.alpha, self.beta)


def _point_inside(point: Tuple[float, float], a: float) -> bool:
    return -STRIP_SLACK <= point[1] <= a + STRIP_SLACK


class LebesgueComponentConfig(StrictModel):
    """density(x1, x2) dx on the rectangle [x1_min, x1_max] x [x2_min, x2_max]."""
    type: Literal["lebesgue"]
    density: str = Field("1", description="Expression in x1, x2")
    x1_min: float
    x1_max: float
    x2_min: float = 0.0
    x2_max: Optional[float] = Field(None, description="Defaults to the strip width")
    weight: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check_extent(self) -> "LebesgueComponentConfig":
        if not self.x1_min < self.x1_max:
            raise ValueError(f"x1_min ({self.x1_min}) must be below x1_max ({self.x1_max})")
        if self.x2_max is not None and not self.x2_min < self.x2_max:
            raise ValueError(f"x2_min ({self.x2_min}) must be below x2_max ({self.x2_max})")
        return self

    def to_domain(self, a: float) -> LebesgueDensity:
        x2_max = a if self.x2_max is None else self.x2_max
        if not (_point_inside((0.0, self.x2_min), a) and _point_inside((0.0, x2_max), a)):
            raise ConfigError(f"Lebesgue component [{self.x2_min}, {x2_max}] leaves the strip (0, {a})")
        support = Rectangle(self.x1_min, self.x1_max, self.x2_min, x2_max)
        expr = Expression(self.density, ("x1", "x2"))
        if expr.is_constant:
            value = expr.constant_value
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"Lebesgue density must be nonnegative, got {value}")
            return LebesgueDensity(support, constant_density=value)
        return LebesgueDensity(support, lambda x1, x2: expr(x1=x1, x2=x2), constant_density=None)


class SegmentComponentConfig(StrictModel):
    """density(s) ds on the segment p0 -> p1, s the arclength from p0."""
    type: Literal["segment"]
    p0: Tuple[float, float]
    p1: Tuple[float, float]
    density: str = Field("1", description="Expression in s")
    weight: float = Field(1.0, gt=0)

    def to_domain(self, a: float) -> LineSegment:
        if not (_point_inside(self.p0, a) and _point_inside(self.p1, a)):
            raise ConfigError(f"segment {self.p0} -> {self.p1} leaves the closed strip of width {a}")
        expr = Expression(self.density, ("s",))
        if expr.is_constant:
            value = expr.constant_value
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"segment density must be nonnegative, got {value}")
            return LineSegment(self.p0, self.p1, constant_density=value)
        return LineSegment(self.p0, self.p1, lambda s: expr(s=s), constant_density=None)


class CantorComponentConfig(StrictModel):
    """Middle-thirds Cantor measure on p0 -> p1 truncated at generation `depth`."""
    type: Literal["cantor"]
    p0: Tuple[float, float]
    p1: Tuple[float, float]
    depth: int = Field(8, ge=1, le=20)
    total_mass: float = Field(1.0, gt=0)
    weight: float = Field(1.0, gt=0)

    def to_domain(self, a: float) -> CantorSegment:
        if not (_point_inside(self.p0, a) and _point_inside(self.p1, a)):
            raise ConfigError(f"Cantor segment {self.p0} -> {self.p1} leaves the closed strip of width {a}")
        return CantorSegment(self.p0, self.p1, self.depth, self.total_mass)


MeasureComponentConfig = Annotated[
    Union[LebesgueComponentConfig, SegmentComponentConfig, CantorComponentConfig],
    Field(discriminator="type"),
]


class PotentialConfig(StrictModel):
    """Exactly one of a closed-form expression in x1, x2 or a .npz grid path."""
    expression: Optional[str] = Field(None, description="Expression in x1, x2")
    grid: Optional[str] = Field(None, description="Path to .npz with arrays x1, x2, values")

    @model_validator(mode="after")
    def _exactly_one(self) -> "PotentialConfig":
        if (self.expression is None) == (self.grid is None):
            raise ValueError("potential needs exactly one of 'expression' or 'grid'")
        return self

    def to_domain(self, base_dir: Optional[Path] = None) -> Potential:
        if self.expression is not None:
            return ExpressionPotential(self.expression)
        path = Path(self.grid)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return GridPotential.from_file(path)


class AhlforsConfig(StrictModel):
    sample_count: int = Field(200, ge=10)
    r_min: float = Field(0.01, gt=0)
    r_max: float = Field(0.1, gt=0)

    @model_validator(mode="after")
    def _check_radii(self) -> "AhlforsConfig":
        if not self.r_min < self.r_max:
            raise ValueError(f"r_min ({self.r_min}) must be below r_max ({self.r_max})")
        return self


class ControlsConfig(StrictModel):
    """
    Mesh, truncation and constants of a run.

    resolution defaults to h / 2 and n_max to ceil(log2 L).
    """
    L: float = Field(64.0, gt=0, description="Truncation half-length")
    h: float = Field(1.0 / 32.0, gt=0, description="Initial mesh size")
    resolution: Optional[float] = Field(None, gt=0, description="Measure quadrature resolution")
    n_max: Optional[int] = Field(None, ge=1, description="Largest dyadic window index")
    tolerance: float = Field(1e-12, gt=0, description="Cross-section root tolerance")
    c_M: float = Field(0.046, ge=0, description="Threshold of the cell part")
    C_M: float = Field(1.0, ge=0, description="Constant of the cell part")
    c1_constant: float = Field(1.0, ge=0, description="Trace-inequality constant")
    gammas: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0])
    seed: int = Field(0, ge=0)
    max_refinements: int = Field(2, ge=0)
    ahlfors: AhlforsConfig = Field(default_factory=AhlforsConfig)
    battery: Literal["quick", "full"] = "quick"

    @model_validator(mode="after")
    def _check_gammas(self) -> "ControlsConfig":
        if any(g <= 0 for g in self.gammas):
            raise ValueError("gammas must be positive")
        if any(b <= a for a, b in zip(self.gammas, self.gammas[1:])):
            raise ValueError("gammas must be strictly increasing")
        return self

    @property
    def quadrature_resolution(self) -> float:
        return self.resolution if self.resolution is not None else self.h / 2

    def count_controls(self) -> CountControls:
        return CountControls(L=self.L, h=self.h, max_refinements=self.max_refinements,
                             resolution=self.quadrature_resolution)


class RunConfig(StrictModel):
    """
    Complete run document.

    Example (TOML):
        [geometry]
        a = 1.0
        bc = "robin"
        alpha = 1.0
        beta = 1.0

        [[measure]]
        type = "lebesgue"
        x1_min = -4.0
        x1_max = 4.0

        [potential]
        expression = "2*indicator(x1, -1, 1)"
    """
    geometry: GeometryConfig
    measure: List[MeasureComponentConfig] = Field(..., min_length=1)
    potential: PotentialConfig
    controls: ControlsConfig = Field(default_factory=ControlsConfig)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """
        Parse a .toml or .json run configuration.

        Raises:
            ConfigError: if the file is missing, unparsable or fails validation
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            if path.suffix == ".toml":
                with path.open("rb") as f:
                    data = tomllib.load(f)
            elif path.suffix == ".json":
                with path.open("r", encoding="utf-8") as f:
                    data = json.load(f)
            else:
                raise ConfigError(f"config file {path} must end in .toml or .json")
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"invalid run configuration: {e}") from e

    def resolve(self, base_dir: Optional[Path] = None) -> "RunSetup":
        """
        Build the domain objects and check V >= 0.

        V is sampled on a 65 x 17 grid over [-L, L] x [0, a] and at every
        measure quadrature node.

        Raises:
            ConfigError: on components outside the strip, negative densities, or
                negative or non-finite samples of V
        """
        geometry = self.geometry.to_domain()
        a = geometry.a
        components: List[Tuple[float, MeasureComponent]] = [
            (c.weight, c.to_domain(a)) for c in self.measure
        ]
        try:
            measure = Measure(tuple(components))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        potential = self.potential.to_domain(base_dir)

        L = self.controls.L
        g1, g2 = np.meshgrid(np.linspace(-L, L, CHECK_GRID[0]), np.linspace(0.0, a, CHECK_GRID[1]), indexing="ij")
        check_nonnegative(potential, g1, g2)

        box = measure.bounding_box()
        try:
            rule = quadrature(measure, Rectangle(box.x1_lo, box.x1_hi, 0.0, a), self.controls.quadrature_resolution)
        except ValueError as e:
            raise ConfigError(f"measure density check failed: {e}") from e
        if len(rule):
            check_nonnegative(potential, rule.nodes[:, 0], rule.nodes[:, 1])
        logger.info(f"Resolved run: a={a:g} bc={geometry.bc.value} components={len(components)} "
                    f"potential={potential.description!r}")
        return RunSetup(geometry=geometry, measure=measure, potential=potential, controls=self.controls)


@dataclass
class RunSetup:
    """Domain objects resolved from a RunConfig."""
    geometry: StripGeometry
    measure: Measure
    potential: Potential
    controls: ControlsConfig


# Reports

class Report(BaseModel):
    """Common header of every JSON report."""
    schema_version: str = Field(default_factory=lambda: settings.schema_version)
    command: str = Field(..., description="Subcommand that produced the report")


class CrossSectionReport(Report):
    geometry: GeometryConfig
    lambda1: float
    lambda2: float
    cell_lambda2: float
    gap_constant: float
    lower_bound: float = Field(..., description="Trace-inequality lower bound on lambda1")
    branch: str = Field(..., description="trigonometric, affine or hyperbolic")
    u1: Dict[str, float] = Field(..., description="Coefficients of the normalized ground state")
    residuals: Optional[Tuple[float, float]] = Field(None, description="Robin residuals at x2 = 0 and x2 = a")


class CellMassRow(BaseModel):
    n: int
    mass: float


class AhlforsReport(Report):
    d_hat: float
    c0_hat: float
    c1_hat: float
    r_range: Tuple[float, float]
    c2_hat: float
    c3_hat: float
    samples: int
    kappa0: float
    doubling_chain_holds: bool
    cells: List[CellMassRow] = Field(default_factory=list)


class WindowRow(BaseModel):
    n: int
    lo: float
    hi: float
    F: float
    above_threshold: bool
    truncated: bool


class CellRow(BaseModel):
    n: int
    M: float
    M_average: float
    D: Optional[float] = None


class RefinementSummary(BaseModel):
    v_star_norm: float
    chain_holds: bool
    separated_bound: float
    c_d: float
    C_d: float
    rhs_refined: float = Field(..., description="1 + 7.61 * sum sqrt(F_n) + C_d * sum D_n over D_n > c_d")


class TermRow(BaseModel):
    n: int
    F: Optional[float] = None
    M: Optional[float] = None


class BoundSummary(Report):
    c_f: float
    C_f: float
    c_m: float
    C_m: float
    rhs_1d: float
    rhs_total: float
    rhs_1d_alt: float
    weak_l1: float
    f_terms: Dict[int, float] = Field(default_factory=dict)
    m_terms: Dict[int, float] = Field(default_factory=dict)
    window_range: Tuple[int, int]
    witness_lower_bound: int
    flagged_windows: List[int] = Field(default_factory=list)
    deficit: float = 0.0
    constants: Dict[str, float] = Field(default_factory=dict)
    windows: List[WindowRow] = Field(default_factory=list)
    cells: List[CellRow] = Field(default_factory=list)
    refinement: Optional[RefinementSummary] = None


class TraceRow(BaseModel):
    h: float
    L: float
    n_neg: int


class CountReport(Report):
    n_neg: int
    n_zero: int
    n_pos: int
    dimension: int
    zero_tolerance: float
    method: str
    stable: bool
    trace: List[TraceRow] = Field(default_factory=list)
    rhs_1d: float
    rhs_total: float
    witness_lower_bound: int
    within_total_bound: bool = Field(..., description="n_neg <= rhs_total (monitoring only)")


class Count1DReport(Report):
    n_neg: int
    L: float
    h: float
    coupling: float
    rhs_1d: float
    rhs_1d_alt: float
    sandwich_holds: bool
    deficit: float
    windows: List[WindowRow] = Field(default_factory=list)


class SweepRow(BaseModel):
    gamma: float
    n_oracle: int
    n_oracle_1d: int
    rhs_1d: float
    rhs_total: float
    windows_above: int
    stable: bool
    ratio: float = Field(..., description="n_oracle / gamma")


class SweepReport(Report):
    points: List[SweepRow]
    slope: float
    weak_l1: float
    ratio_spread: float = Field(..., description="Relative spread of n_oracle / gamma over the last two couplings")


class CheckRow(BaseModel):
    name: str
    status: str
    detail: str = ""
    execution_time: Optional[float] = None


class VerifyReport(Report):
    battery: str
    passed: bool
    checks: List[CheckRow]


class QuadratureReport(Report):
    nodes: int
    total_mass: float
    resolution: float


class NormRow(BaseModel):
    n: int
    mass: float
    luxemburg: float
    orlicz: float
    average: float


class NormsReport(Report):
    cells: List[NormRow]


class ErrorReport(Report):
    """
    Error report written when a run fails.

    Mirrors the exception that stopped the run together with its exit code.
    """
    error: str = Field(..., description="Exception class name")
    details: str = Field(..., description="Exception message")
    exit_code: int
