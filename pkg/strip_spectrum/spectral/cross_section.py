"""
Transverse Eigenproblem

Solves -u'' = lambda u on (0, a) with u'(0) + alpha u(0) = 0 and
u'(a) + beta u(a) = 0, or with Dirichlet conditions, and exposes the
quantities the strip bound is built from.

Features:
    - Closed-form secular function on the trigonometric, affine and hyperbolic branches
    - Root location by a sign scan over a rigorous window followed by brentq
    - Dirichlet closed forms
    - Cell second eigenvalue and spectral-gap constant
    - Finite-difference oracle (ghost-point Robin rows, symmetric tridiagonal eigensolver)
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate, linalg, optimize

from ..exceptions import BracketExhaustedError, UnsupportedBranchError
from .models import CrossSection, EigenFunction, StripGeometry, fundamental_pair

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-12
SAMPLE_POINTS = 257
# grid points per unit of sqrt(|lambda|) on the hyperbolic side, per strip width
HYPERBOLIC_DENSITY = 512


def secular_value(geometry: StripGeometry, lam: float) -> float:
    """
    Characteristic function of the Robin problem.

    With u = C - alpha S (which satisfies the condition at 0), the condition at a
    reads F(lam) = (beta - alpha) C(a) - (lam + alpha beta) S(a) = 0.

    Raises:
        UnsupportedBranchError: for Dirichlet geometries
    """
    if geometry.is_dirichlet:
        raise UnsupportedBranchError("secular function is only defined for Robin geometries")
    c, s = fundamental_pair(lam, np.array([geometry.a]))
    return float((geometry.beta - geometry.alpha) * c[0] - (lam + geometry.alpha * geometry.beta) * s[0])


def _scaled_secular(geometry: StripGeometry, lam: float) -> float:
    """Secular function divided by cosh(kappa a) on the hyperbolic branch; same sign, no overflow."""
    a, alpha, beta = geometry.a, geometry.alpha, geometry.beta
    if lam < 0 and -lam * a * a >= 1e-3:
        kappa = math.sqrt(-lam)
        s = math.tanh(kappa * a) / kappa
        return (beta - alpha) - (lam + alpha * beta) * s
    return secular_value(geometry, lam)


def eigenvalue_lower_bound(geometry: StripGeometry) -> float:
    """
    Rigorous lower bound for the lowest Robin eigenvalue.

    Uses u(0)^2 <= (2/t) ||u||^2 + 2t ||u'||^2 on (0, t) with t = min(a, 1/(2s)),
    s = |alpha| + |beta|, which absorbs both boundary terms into the Dirichlet integral.
    """
    if geometry.is_dirichlet:
        return math.pi ** 2 / geometry.a ** 2
    s = abs(geometry.alpha) + abs(geometry.beta)
    if s == 0.0:
        return 0.0
    return -max(2.0 * s / geometry.a, 4.0 * s * s)


def _scan_grid(geometry: StripGeometry) -> np.ndarray:
    a = geometry.a
    m = max(abs(geometry.alpha), abs(geometry.beta))
    lam_lo = min(-(m + 1.0) ** 2, eigenvalue_lower_bound(geometry))
    kappa_max = math.sqrt(-lam_lo)
    n_hyp = max(256, int(math.ceil(HYPERBOLIC_DENSITY * kappa_max * max(a, 1.0))))
    kappas = np.linspace(kappa_max, 0.0, n_hyp + 1)
    k_max = 3.0 * math.pi / a
    ks = np.arange(1, 193) * (k_max / 192.0)
    return np.concatenate([-(kappas ** 2), ks ** 2])


def _hidden_root_pair(geometry: StripGeometry, lo: float, hi: float, sign: float) -> Optional[float]:
    """Point between lo and hi where the secular function takes the sign opposite to `sign`, if any."""
    res = optimize.minimize_scalar(
        lambda lam: sign * _scaled_secular(geometry, lam),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-14 * max(1.0, abs(lo), abs(hi))},
    )
    if res.fun < 0:
        return float(res.x)
    return None


def _bracket_roots(geometry: StripGeometry) -> Tuple[List[Tuple[float, float]], List[float], List[Tuple[float, float]]]:
    """
    Scan the secular function over the search window.

    Returns:
        Tuple (brackets, exact_roots, trace)
    """
    grid = _scan_grid(geometry)
    values = np.array([_scaled_secular(geometry, lam) for lam in grid])
    trace = list(zip(grid.tolist(), values.tolist()))

    # Local minima of |F| without a sign change may hide a close pair of roots.
    points = list(zip(grid.tolist(), values.tolist()))
    extra = []
    for i in range(1, len(grid) - 1):
        fm, f0, fp = values[i - 1], values[i], values[i + 1]
        if f0 != 0 and fm * f0 > 0 and f0 * fp > 0 and abs(f0) < abs(fm) and abs(f0) < abs(fp):
            x = _hidden_root_pair(geometry, grid[i - 1], grid[i + 1], math.copysign(1.0, f0))
            if x is not None:
                extra.append((x, _scaled_secular(geometry, x)))
    if extra:
        logger.debug(f"Split {len(extra)} close root pairs in the secular scan")
        points = sorted(points + extra)

    brackets: List[Tuple[float, float]] = []
    exact: List[float] = []
    prev_lam, prev_val = points[0]
    crossed_zero = False
    for lam, val in points[1:]:
        if val == 0.0:
            exact.append(lam)
            crossed_zero = True
            continue
        if prev_val * val < 0 and not crossed_zero:
            brackets.append((prev_lam, lam))
        prev_lam, prev_val = lam, val
        crossed_zero = False
    return brackets, exact, trace


def _robin_ground_state(geometry: StripGeometry, lam: float) -> EigenFunction:
    raw = EigenFunction(lam=lam, c_cos=1.0, c_sin=-geometry.alpha)
    mass, _ = integrate.quad(lambda x: float(raw(np.array([x]))[0]) ** 2, 0.0, geometry.a,
                             epsabs=1e-14, epsrel=1e-13, limit=200)
    norm = 1.0 / math.sqrt(mass)
    mid = float(raw(np.array([0.5 * geometry.a]))[0])
    if mid < 0:
        norm = -norm
    return raw.with_norm(norm)


def _samples(u1: EigenFunction, a: float) -> np.ndarray:
    x = np.linspace(0.0, a, SAMPLE_POINTS)
    return np.column_stack([x, u1(x)])


def dirichlet_cross_section(geometry: StripGeometry) -> CrossSection:
    a = geometry.a
    k = math.pi / a
    u1 = EigenFunction(lam=k * k, c_cos=0.0, c_sin=k, norm=math.sqrt(2.0 / a))
    return CrossSection(geometry, k * k, 4.0 * k * k, u1, _samples(u1, a))


def first_two_eigenpairs(geometry: StripGeometry, tol: float = DEFAULT_TOLERANCE) -> CrossSection:
    """
    Lowest two transverse eigenvalues and the normalized ground state.

    Args:
        geometry: strip geometry
        tol: absolute tolerance on the eigenvalues

    Returns:
        CrossSection with u1 > 0 on (0, a)

    Raises:
        ValueError: if tol is not positive
        BracketExhaustedError: if the scan finds fewer than two roots
    """
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if geometry.is_dirichlet:
        return dirichlet_cross_section(geometry)

    brackets, exact, trace = _bracket_roots(geometry)
    roots = list(exact)
    for lo, hi in brackets:
        roots.append(
            optimize.brentq(lambda lam: _scaled_secular(geometry, lam), lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
        )
    roots = sorted(r + 0.0 for r in roots)
    if len(roots) < 2:
        raise BracketExhaustedError(
            f"found {len(roots)} eigenvalue(s) in the search window for {geometry}", scan_trace=trace
        )
    lambda1, lambda2 = roots[0], roots[1]
    u1 = _robin_ground_state(geometry, lambda1)
    logger.debug(f"Cross-section a={geometry.a} alpha={geometry.alpha} beta={geometry.beta}: "
                 f"lambda1={lambda1:.12g} lambda2={lambda2:.12g}")
    return CrossSection(geometry, lambda1, lambda2, u1, _samples(u1, geometry.a))


def cell_lambda2(geometry: StripGeometry, cs: Optional[CrossSection] = None) -> float:
    """Second eigenvalue of the unit cell (0, 1) x (0, a), Neumann in x1."""
    cs = cs or first_two_eigenpairs(geometry)
    return min(cs.lambda2, cs.lambda1 + math.pi ** 2)


def gap_constant(geometry: StripGeometry, cs: Optional[CrossSection] = None) -> float:
    """1 / (cell lambda2 - lambda1); for Dirichlet this is max(a^2/3, 1) / pi^2."""
    cs = cs or first_two_eigenpairs(geometry)
    return 1.0 / (cell_lambda2(geometry, cs) - cs.lambda1)


def robin_residuals(cs: CrossSection) -> Tuple[float, float]:
    """Boundary-condition residuals of u1 evaluated from its closed form."""
    g = cs.geometry
    ends = np.array([0.0, g.a])
    u = cs.u1(ends)
    du = cs.u1.derivative(ends)
    if g.is_dirichlet:
        return float(abs(u[0])), float(abs(u[1]))
    return float(abs(du[0] + g.alpha * u[0])), float(abs(du[1] + g.beta * u[1]))


def fd_eigenvalues(geometry: StripGeometry, h: float, count: int = 2) -> np.ndarray:
    """
    Lowest eigenvalues of the second-order finite-difference transverse operator.

    Robin rows use a ghost point eliminated through the boundary condition; the
    boundary rows are halved to keep the matrix symmetric against the diagonal
    mass (1/2, 1, ..., 1, 1/2), and the pencil is symmetrized by M^(-1/2).
    """
    n = int(round(geometry.a / h))
    if n < 4:
        raise ValueError(f"mesh spacing {h} too coarse for width {geometry.a}")
    h = geometry.a / n
    inv_h2 = 1.0 / (h * h)

    if geometry.is_dirichlet:
        d = np.full(n - 1, 2.0 * inv_h2)
        e = np.full(n - 2, -inv_h2)
    else:
        k_diag = np.full(n + 1, 2.0 * inv_h2)
        k_diag[0] = (1.0 - h * geometry.alpha) * inv_h2
        k_diag[-1] = (1.0 + h * geometry.beta) * inv_h2
        mass = np.ones(n + 1)
        mass[0] = mass[-1] = 0.5
        d = k_diag / mass
        e = -inv_h2 / np.sqrt(mass[:-1] * mass[1:])

    return linalg.eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, count - 1))
