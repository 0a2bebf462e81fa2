"""
Spectral Domain Models

This module defines the core domain models for the strip spectrum system:
- StripGeometry: strip width and boundary conditions
- CrossSection: first two transverse eigenvalues and the ground state u1
- Measure and its components: Lebesgue densities, line segments, Cantor segments
- QuadratureRule: weighted nodes generated against a measure
- NuMeasure / DyadicWindow / BoundReport: quantities of the eigenvalue bound
- DiscreteForm / InertiaResult: discretized quadratic forms and their sign counts
- CheckExecution: one run of a verification check

Key Features:
    - Dataclass-based models; geometry, measures and rules are immutable
    - str Enums for boundary kinds, eigenfunction branches and check status
    - Closed-form evaluation of the transverse eigenfunction on every branch
    - Validation in __post_init__ so invalid models never reach the solvers

Architecture:
    - Models carry data and cheap derived properties only
    - Algorithms live in the sibling modules (cross_section, measure, orlicz,
      bound, counter) and consume these models
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

# Scalar field on the closed strip, vectorized over node arrays.
ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
# Scalar function of arclength along a segment, vectorized.
ArclengthDensity = Callable[[np.ndarray], np.ndarray]

# |lambda| x^2 below this switches the fundamental pair to its series form
SERIES_THRESHOLD = 1e-3


class BoundaryKind(str, Enum):
    """
    Boundary conditions on the horizontal edges x2 = 0 and x2 = a.

    States:
        ROBIN: u'(0) + alpha u(0) = 0 and u'(a) + beta u(a) = 0
        DIRICHLET: u(0) = u(a) = 0
    """
    ROBIN = "robin"
    DIRICHLET = "dirichlet"


class EigenBranch(str, Enum):
    """Closed-form branch of a transverse eigenfunction."""
    TRIGONOMETRIC = "trigonometric"
    AFFINE = "affine"
    HYPERBOLIC = "hyperbolic"


class NormKind(str, Enum):
    LUXEMBURG = "luxemburg"
    ORLICZ = "orlicz"
    AVERAGE = "average"


class CheckStatus(str, Enum):
    """
    Status of one verification check in the battery.

    States:
        PENDING: queued, not started
        RUNNING: in progress
        PASSED: every asserted property held
        FAILED: some asserted property was violated
        ERROR: the check raised before reaching a verdict
        TIMEOUT: the check exceeded its time budget
    """
    PENDING = "pending"
    RUNNING = "running"
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"
    TIMEOUT = "timeout"


def fundamental_pair(lam: float, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the fundamental solutions C, S of -u'' = lam u at x.

    C(0) = 1, C'(0) = 0 and S(0) = 0, S'(0) = 1, so that C' = -lam S and S' = C
    on every branch. Near lam x^2 = 0 a series to fourth order replaces the
    cancellation-prone trigonometric and hyperbolic forms.

    Args:
        lam: spectral parameter
        x: evaluation points

    Returns:
        Tuple (C(x), S(x))
    """
    x = np.asarray(x, dtype=float)
    z = lam * x * x
    small = np.abs(z) < SERIES_THRESHOLD
    c = np.empty_like(x)
    s = np.empty_like(x)

    zs = z[small]
    c[small] = 1.0 - zs / 2.0 + zs ** 2 / 24.0 - zs ** 3 / 720.0
    s[small] = x[small] * (1.0 - zs / 6.0 + zs ** 2 / 120.0 - zs ** 3 / 5040.0)

    big = ~small
    if np.any(big):
        k = math.sqrt(abs(lam))
        xb = x[big]
        if lam > 0:
            c[big] = np.cos(k * xb)
            s[big] = np.sin(k * xb) / k
        else:
            c[big] = np.cosh(k * xb)
            s[big] = np.sinh(k * xb) / k
    return c, s


@dataclass(frozen=True)
class StripGeometry:
    """
    Strip S = R x (0, a) with its boundary conditions.

    Attributes:
        a: strip width
        bc: boundary condition kind
        alpha: Robin parameter on x2 = 0 (ignored for Dirichlet)
        beta: Robin parameter on x2 = a (ignored for Dirichlet)
    """
    a: float
    bc: BoundaryKind = BoundaryKind.ROBIN
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"strip width must be positive and finite, got {self.a}")
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("Robin parameters must be finite")

    @classmethod
    def robin(cls, a: float, alpha: float, beta: float) -> "StripGeometry":
        return cls(a=a, bc=BoundaryKind.ROBIN, alpha=alpha, beta=beta)

    @classmethod
    def neumann(cls, a: float) -> "StripGeometry":
        return cls(a=a, bc=BoundaryKind.ROBIN, alpha=0.0, beta=0.0)

    @classmethod
    def dirichlet(cls, a: float) -> "StripGeometry":
        return cls(a=a, bc=BoundaryKind.DIRICHLET)

    @property
    def is_dirichlet(self) -> bool:
        return self.bc == BoundaryKind.DIRICHLET


@dataclass(frozen=True)
class EigenFunction:
    """
    Closed-form transverse eigenfunction u(x) = norm * (c_cos C(x) + c_sin S(x)).

    Attributes:
        lam: eigenvalue the pair (C, S) is built for
        c_cos: coefficient of C
        c_sin: coefficient of S
        norm: L2 normalization constant
    """
    lam: float
    c_cos: float
    c_sin: float
    norm: float = 1.0

    @property
    def branch(self) -> EigenBranch:
        if self.lam > 0:
            return EigenBranch.TRIGONOMETRIC
        if self.lam < 0:
            return EigenBranch.HYPERBOLIC
        return EigenBranch.AFFINE

    def __call__(self, x) -> np.ndarray:
        c, s = fundamental_pair(self.lam, x)
        return self.norm * (self.c_cos * c + self.c_sin * s)

    def derivative(self, x) -> np.ndarray:
        c, s = fundamental_pair(self.lam, x)
        return self.norm * (-self.lam * self.c_cos * s + self.c_sin * c)

    def with_norm(self, norm: float) -> "EigenFunction":
        return EigenFunction(self.lam, self.c_cos, self.c_sin, norm)


@dataclass(frozen=True, eq=False)
class CrossSection:
    """
    Solution of the transverse problem on (0, a).

    Attributes:
        geometry: the strip the problem was solved for
        lambda1: lowest eigenvalue (bottom of the essential spectrum)
        lambda2: second eigenvalue of the transverse problem
        u1: normalized ground state, positive on (0, a)
        u1_samples: (N, 2) array of (x2, u1(x2)) on a uniform grid
    """
    geometry: StripGeometry
    lambda1: float
    lambda2: float
    u1: EigenFunction
    u1_samples: np.ndarray

    def __post_init__(self):
        if not self.lambda1 < self.lambda2:
            raise ValueError(f"expected lambda1 < lambda2, got {self.lambda1} >= {self.lambda2}")


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned closed rectangle [x1_lo, x1_hi] x [x2_lo, x2_hi]."""
    x1_lo: float
    x1_hi: float
    x2_lo: float
    x2_hi: float

    @property
    def is_empty(self) -> bool:
        return self.x1_hi < self.x1_lo or self.x2_hi < self.x2_lo

    def intersect(self, other: "Rectangle") -> "Rectangle":
        return Rectangle(
            max(self.x1_lo, other.x1_lo),
            min(self.x1_hi, other.x1_hi),
            max(self.x2_lo, other.x2_lo),
            min(self.x2_hi, other.x2_hi),
        )

    def contains(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(points)
        return (
            (points[:, 0] >= self.x1_lo - slack)
            & (points[:, 0] <= self.x1_hi + slack)
            & (points[:, 1] >= self.x2_lo - slack)
            & (points[:, 1] <= self.x2_hi + slack)
        )

    def translated(self, dx1: float) -> "Rectangle":
        return Rectangle(self.x1_lo + dx1, self.x1_hi + dx1, self.x2_lo, self.x2_hi)


def _unit_density(values: np.ndarray) -> np.ndarray:
    return np.ones_like(np.asarray(values, dtype=float))


def _unit_field(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return np.ones_like(np.asarray(x1, dtype=float) + np.asarray(x2, dtype=float))


@dataclass(frozen=True, eq=False)
class LebesgueDensity:
    """
    Absolutely continuous component density(x) dx restricted to a rectangle.

    Attributes:
        support: rectangle carrying the component
        density: nonnegative scalar field
        constant_density: value of the density when it is known to be constant
    """
    support: Rectangle
    density: ScalarField = _unit_field
    constant_density: Optional[float] = 1.0

    kind = "lebesgue"

    def __post_init__(self):
        if self.support.is_empty:
            raise ValueError("Lebesgue component support is empty")
        if self.constant_density is not None and self.constant_density < 0:
            raise ValueError("density must be nonnegative")

    def translated(self, dx1: float) -> "LebesgueDensity":
        density = self.density
        return LebesgueDensity(
            self.support.translated(dx1),
            lambda x1, x2: density(x1 - dx1, x2),
            self.constant_density,
        )


@dataclass(frozen=True, eq=False)
class LineSegment:
    """
    One-dimensional Hausdorff measure on the segment p0 -> p1 with a density in arclength.

    Segments on x2 = 0 or x2 = a are allowed; the measure may charge the boundary lines.
    """
    p0: Tuple[float, float]
    p1: Tuple[float, float]
    linear_density: ArclengthDensity = _unit_density
    constant_density: Optional[float] = 1.0

    kind = "segment"

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("segment endpoints coincide")

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def point(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        p0 = np.asarray(self.p0, dtype=float)
        p1 = np.asarray(self.p1, dtype=float)
        return p0[None, :] + t[:, None] * (p1 - p0)[None, :]

    def translated(self, dx1: float) -> "LineSegment":
        return LineSegment(
            (self.p0[0] + dx1, self.p0[1]),
            (self.p1[0] + dx1, self.p1[1]),
            self.linear_density,
            self.constant_density,
        )


@dataclass(frozen=True)
class CantorSegment:
    """
    Middle-thirds Cantor measure on p0 -> p1, truncated at a finite generation.

    At generation `depth` the measure is uniform on each of the 2**depth
    surviving intervals, each carrying total_mass / 2**depth.
    """
    p0: Tuple[float, float]
    p1: Tuple[float, float]
    depth: int
    total_mass: float

    kind = "cantor"

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("Cantor depth must be at least 1")
        if not self.total_mass > 0:
            raise ValueError("Cantor total mass must be positive")
        if self.length <= 0:
            raise ValueError("segment endpoints coincide")

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def intervals(self) -> np.ndarray:
        """Left endpoints (in segment parameter t) of the generation-depth intervals."""
        lefts = np.zeros(1)
        for level in range(1, self.depth + 1):
            step = 2.0 / 3.0 ** level
            lefts = np.concatenate([lefts, lefts + step])
        return np.sort(lefts)

    @property
    def interval_length(self) -> float:
        return 3.0 ** (-self.depth)

    def point(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        p0 = np.asarray(self.p0, dtype=float)
        p1 = np.asarray(self.p1, dtype=float)
        return p0[None, :] + t[:, None] * (p1 - p0)[None, :]

    def translated(self, dx1: float) -> "CantorSegment":
        return CantorSegment(
            (self.p0[0] + dx1, self.p0[1]), (self.p1[0] + dx1, self.p1[1]), self.depth, self.total_mass
        )


MeasureComponent = LebesgueDensity | LineSegment | CantorSegment


@dataclass(frozen=True, eq=False)
class Measure:
    """
    Finite positive combination of measure components on the closed strip.

    Attributes:
        components: (weight, component) pairs, every weight positive
    """
    components: Tuple[Tuple[float, MeasureComponent], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("measure needs at least one component")
        for weight, _ in self.components:
            if not (math.isfinite(weight) and weight > 0):
                raise ValueError(f"component weight must be positive, got {weight}")

    @classmethod
    def single(cls, component: MeasureComponent, weight: float = 1.0) -> "Measure":
        return cls(((weight, component),))

    @property
    def is_lebesgue(self) -> bool:
        return all(isinstance(c, LebesgueDensity) for _, c in self.components)

    def bounding_box(self) -> Rectangle:
        boxes = []
        for _, comp in self.components:
            if isinstance(comp, LebesgueDensity):
                boxes.append(comp.support)
            else:
                boxes.append(
                    Rectangle(
                        min(comp.p0[0], comp.p1[0]), max(comp.p0[0], comp.p1[0]),
                        min(comp.p0[1], comp.p1[1]), max(comp.p0[1], comp.p1[1]),
                    )
                )
        return Rectangle(
            min(b.x1_lo for b in boxes), max(b.x1_hi for b in boxes),
            min(b.x2_lo for b in boxes), max(b.x2_hi for b in boxes),
        )

    def translated(self, dx1: float) -> "Measure":
        return Measure(tuple((w, c.translated(dx1)) for w, c in self.components))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Weighted nodes approximating integration against a measure.

    Attributes:
        nodes: (N, 2) array of points (x1, x2)
        weights: (N,) array of nonnegative weights
    """
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != (len(self.weights), 2):
            raise ValueError("nodes must be an (N, 2) array matching the weights")

    @classmethod
    def empty(cls) -> "QuadratureRule":
        return cls(np.zeros((0, 2)), np.zeros(0))

    @classmethod
    def concatenate(cls, rules: List["QuadratureRule"]) -> "QuadratureRule":
        rules = [r for r in rules if len(r)]
        if not rules:
            return cls.empty()
        return cls(np.vstack([r.nodes for r in rules]), np.concatenate([r.weights for r in rules]))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, field_values: np.ndarray) -> float:
        return float(np.dot(self.weights, field_values))

    def restricted(self, region: Rectangle) -> "QuadratureRule":
        keep = region.contains(self.nodes) if len(self) else np.zeros(0, dtype=bool)
        return QuadratureRule(self.nodes[keep], self.weights[keep])


@dataclass
class AhlforsEstimate:
    """
    Empirical Ahlfors regularity parameters of a measure.

    Attributes:
        d_hat: fitted regularity dimension
        c0_hat, c1_hat: lower/upper constants of mu(B(x, r)) against r**d_hat
        r_range: radii the fit used
        c2_hat, c3_hat: comparability constants of neighbouring closed cells
        samples: number of (center, radius) samples
    """
    d_hat: float
    c0_hat: float
    c1_hat: float
    r_range: Tuple[float, float]
    c2_hat: float
    c3_hat: float
    samples: int = 0
    cell_masses: Dict[int, float] = field(default_factory=dict)

    def kappa0(self, a: float) -> float:
        """Neighbourhood factor 2 (1/c2 + ... + 1/c2**N0) + 1 for cells of a width-a strip."""
        n0 = math.floor(3.0 * math.sqrt(2.0) * math.sqrt(a * a + 1.0)) + 1
        return 2.0 * sum(self.c2_hat ** (-k) for k in range(1, n0 + 1)) + 1.0


@dataclass(frozen=True, eq=False)
class NormRequest:
    """
    Function values at quadrature nodes together with the rule and the norm kind.

    Zero-weight nodes are dropped at construction.
    """
    f_values: np.ndarray
    weights: np.ndarray
    kind: NormKind

    def __post_init__(self):
        f = np.asarray(self.f_values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if f.shape != w.shape:
            raise ValueError("f_values and weights must have the same length")
        if not np.all(np.isfinite(f)):
            raise ValueError("f_values must be finite")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("quadrature weights must be finite and nonnegative")
        keep = w > 0
        object.__setattr__(self, "f_values", f[keep])
        object.__setattr__(self, "weights", w[keep])

    @classmethod
    def from_rule(cls, f_values: np.ndarray, rule: QuadratureRule, kind: NormKind) -> "NormRequest":
        return cls(np.asarray(f_values, dtype=float), rule.weights, kind)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class DyadicWindow:
    """Window I_n: [2**(n-1), 2**n] for n > 0, [-1, 1] for n = 0, mirrored for n < 0."""
    n: int

    @property
    def interval(self) -> Tuple[float, float]:
        if self.n > 0:
            return (2.0 ** (self.n - 1), 2.0 ** self.n)
        if self.n < 0:
            m = -self.n
            return (-(2.0 ** m), -(2.0 ** (m - 1)))
        return (-1.0, 1.0)


@dataclass(frozen=True, eq=False)
class NuMeasure:
    """
    One-dimensional measure nu on the x1 axis as weighted nodes.

    Attributes:
        x1: node positions
        weights: nonnegative node weights
        x1_range: truncation range (-L, L) the nodes were kept in
        deficit: mass dropped because it lay outside the range
    """
    x1: np.ndarray
    weights: np.ndarray
    x1_range: Tuple[float, float]
    deficit: float = 0.0

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def mass(self, lo: float, hi: float) -> float:
        keep = (self.x1 >= lo) & (self.x1 <= hi)
        return float(np.sum(self.weights[keep]))


@dataclass
class BoundReport:
    """
    Every quantity of the two-part eigenvalue bound for one configuration.

    Attributes:
        f_terms: window index -> F_n
        m_terms: cell index -> M_n
        c_f, C_f: threshold and constant of the explicit one-dimensional part
        c_m, C_m: threshold and constant of the cell part (configuration-supplied)
        rhs_1d: 1 + C_f * sum of sqrt(F_n) over F_n > c_f
        rhs_total: rhs_1d + C_m * sum of M_n over M_n > c_m
        rhs_1d_alt: rhs_1d recomputed with the alternative constant 7.16
        weak_l1: weak-l1 quasinorm of (F_n)
        window_range: (-N, N)
        witness_lower_bound: separated windows with F_n > 5
        flagged_windows: windows lying outside the truncation range
        deficit: nu mass lost to truncation
        constants: derived spectral-gap constants
    """
    f_terms: Dict[int, float]
    m_terms: Dict[int, float]
    c_f: float
    C_f: float
    c_m: float
    C_m: float
    rhs_1d: float
    rhs_total: float
    rhs_1d_alt: float
    weak_l1: float
    window_range: Tuple[int, int]
    witness_lower_bound: int = 0
    flagged_windows: List[int] = field(default_factory=list)
    deficit: float = 0.0
    m_average_terms: Dict[int, float] = field(default_factory=dict)
    constants: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.f_terms.values()) or any(v < 0 for v in self.m_terms.values()):
            raise ValueError("F_n and M_n must be nonnegative")


@dataclass
class LebesgueRefinement:
    """
    Lebesgue-measure refinement of the bound.

    Attributes:
        d_terms: cell index -> D_n, the x1-integral of slice Orlicz norms
        m_terms: cell index -> M_n over the same cells
        v_star_norm: L1(R, L_B(0, a)) norm of V - G(x1)
        g_profile: (N, 2) array of (x1, G(x1))
        chain_holds: D_n <= 4 M_n on every cell
    """
    d_terms: Dict[int, float]
    m_terms: Dict[int, float]
    v_star_norm: float
    g_profile: np.ndarray
    chain_holds: bool


@dataclass
class SweepPoint:
    gamma: float
    n_oracle: int
    n_oracle_1d: int
    rhs_1d: float
    rhs_total: float
    windows_above: int
    stable: bool = True


@dataclass
class SweepResult:
    """
    Coupling sweep gamma -> (oracle count, bound).

    Attributes:
        points: one entry per coupling, in input order
        slope: least-squares slope of the oracle count against gamma
        weak_l1: weak-l1 quasinorm of (F_n) at gamma = 1
    """
    points: List[SweepPoint]
    slope: float
    weak_l1: float


@dataclass(frozen=True)
class MeshDescriptor:
    """
    Tensor mesh of the truncated strip [-L, L] x [0, a].

    Attributes:
        L: half-length of the truncation
        h1: spacing in x1
        h2: spacing in x2
        n1: number of x1 intervals
        n2: number of x2 intervals
        clamp_x2: whether the x2 = 0 and x2 = a rows are clamped (Dirichlet strip)
    """
    L: float
    h1: float
    h2: float
    n1: int
    n2: int
    clamp_x2: bool = False

    @property
    def x1_nodes(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n1 + 1)

    @property
    def x2_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.n2 * self.h2, self.n2 + 1)

    @property
    def block_size(self) -> int:
        """Unknowns per x1 column."""
        return self.n2 - 1 if self.clamp_x2 else self.n2 + 1

    @property
    def columns(self) -> int:
        """Unknown x1 columns; x1 = -L and x1 = L are clamped."""
        return self.n1 - 1


@dataclass(frozen=True, eq=False)
class DiscreteForm:
    """
    Discretized quadratic form on the nodal basis of a tensor mesh.

    matrix = energy - shift * gram - potential, where energy is the boundary-
    augmented Dirichlet integral, gram the L2 mass matrix and potential the
    V dmu term.
    """
    matrix: sp.csr_matrix
    gram: sp.csr_matrix
    energy: sp.csr_matrix
    potential: sp.csr_matrix
    shift: float
    mesh: Optional[MeshDescriptor] = None
    block_size: Optional[int] = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass
class RefinementStep:
    h: float
    L: float
    n_neg: int


@dataclass
class InertiaResult:
    """
    Sign counts of a symmetric matrix.

    Attributes:
        n_neg, n_zero, n_pos: eigenvalue sign counts
        zero_tolerance: pivots with magnitude at or below this are counted as zero
        refinement_trace: (h, L, n_neg) per refinement when produced by a count loop
        method: factorization path that produced the counts
        stable: False when a refinement loop ran out of budget before stabilizing
    """
    n_neg: int
    n_zero: int
    n_pos: int
    zero_tolerance: float
    refinement_trace: List[RefinementStep] = field(default_factory=list)
    method: str = "block-ldl"
    stable: bool = True

    @property
    def dimension(self) -> int:
        return self.n_neg + self.n_zero + self.n_pos


@dataclass
class CountControls:
    """Initial mesh and refinement budget for the two-dimensional counter."""
    L: float = 64.0
    h: float = 1.0 / 32.0
    max_refinements: int = 2
    resolution: Optional[float] = None


@dataclass
class ProjectionSplitReport:
    """
    Residuals of the projection identities at one mesh level.

    Attributes:
        h: quadrature cell size
        orthogonality: max |<v, v~>| / ||u||^2 over trials
        split: max |E[u] - E[v] - E[v~]| / (|E[u]| + ||u||^2) over trials
        gap_margin: min over trials of the cell Rayleigh quotient of v~ minus the gap
        passed: all three properties held at the requested tolerance
    """
    h: float
    trials: int
    orthogonality: float
    split: float
    gap_margin: float
    passed: bool


@dataclass
class TestFunctionEnergy:
    """
    Exact energy of the window test function v_n = w_n(x1) u1(x2).

    Attributes:
        n: window index
        energy: E_S[v_n] - lambda1 ||v_n||^2, equal to 5 * 2**|n|
        transverse_residual: numerical value of the transverse identity that makes
            the cross term vanish (diagnostic only)
        potential_term: integral of V |v_n|^2 dmu
        form_value: energy - potential_term
        F_n: window quantity of the same window
        binds: F_n > 5, which forces form_value < 0
    """
    __test__ = False

    n: int
    energy: float
    transverse_residual: float
    potential_term: float
    form_value: float
    F_n: float
    binds: bool


@dataclass
class CheckExecution:
    """
    One run of a verification check.

    Attributes:
        name: check identifier
        status: current status
        detail: measured quantities or the failure message
        execution_time: wall time in seconds once finished
    """
    name: str
    status: CheckStatus = CheckStatus.PENDING
    detail: str = ""
    execution_time: Optional[float] = None

    def mark_completed(self, passed: bool, detail: str, execution_time: float):
        """Record the verdict of a check that ran to the end."""
        self.status = CheckStatus.PASSED if passed else CheckStatus.FAILED
        self.detail = detail
        self.execution_time = execution_time

    def mark_failed(self, error: str, execution_time: Optional[float] = None, status: CheckStatus = CheckStatus.ERROR):
        self.status = status
        self.detail = error
        self.execution_time = execution_time

    @property
    def passed(self) -> bool:
        return self.status == CheckStatus.PASSED
