"""
Measures on the Closed Strip

Quadrature generation, ball and region masses, and empirical Ahlfors-regularity
fits for measures built from Lebesgue densities, line segments and truncated
Cantor segments.

Features:
    - Tensor midpoint rules for Lebesgue components
    - Liang-Barsky clipping and composite midpoint rules along segments
    - Exact generation-interval rules for Cantor components
    - Analytic chord masses for segment and Cantor balls, Gauss-Legendre for disks
    - Ahlfors fits (least-squares dimension, ball constants, cell comparability)

Note:
    Support points are proxied by quadrature nodes kept at distance >= r_max from
    the component ends, so every sampled ball sees the component's interior.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, stats

from .models import (
    AhlforsEstimate,
    CantorSegment,
    LebesgueDensity,
    LineSegment,
    Measure,
    MeasureComponent,
    QuadratureRule,
    Rectangle,
)

logger = logging.getLogger(__name__)

# Gauss-Legendre orders for disk integrals
BALL_OUTER_ORDER = 256
BALL_INNER_ORDER = 32


def _clip_segment(p0, p1, region: Rectangle) -> Optional[Tuple[float, float]]:
    """Parameter interval [t0, t1] of p0 + t (p1 - p0) inside a closed rectangle (Liang-Barsky)."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, p0[0] - region.x1_lo),
        (dx, region.x1_hi - p0[0]),
        (-dy, p0[1] - region.x2_lo),
        (dy, region.x2_hi - p0[1]),
    ):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        t = q / p
        if p < 0.0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return t0, t1


def _lebesgue_rule(comp: LebesgueDensity, region: Rectangle, resolution: float) -> QuadratureRule:
    box = comp.support.intersect(region)
    width, height = box.x1_hi - box.x1_lo, box.x2_hi - box.x2_lo
    if width <= 0 or height <= 0:
        return QuadratureRule.empty()
    n1 = max(1, int(math.ceil(width / resolution - 1e-9)))
    n2 = max(1, int(math.ceil(height / resolution - 1e-9)))
    x1 = box.x1_lo + (np.arange(n1) + 0.5) * (width / n1)
    x2 = box.x2_lo + (np.arange(n2) + 0.5) * (height / n2)
    g1, g2 = np.meshgrid(x1, x2, indexing="ij")
    nodes = np.column_stack([g1.ravel(), g2.ravel()])
    cell = (width / n1) * (height / n2)
    if comp.constant_density is not None:
        weights = np.full(len(nodes), comp.constant_density * cell)
    else:
        weights = np.asarray(comp.density(nodes[:, 0], nodes[:, 1]), dtype=float) * cell
    if np.any(weights < 0):
        raise ValueError("Lebesgue density is negative at a quadrature node")
    return QuadratureRule(nodes, weights)


def _segment_rule(comp: LineSegment, region: Rectangle, resolution: float) -> QuadratureRule:
    clip = _clip_segment(comp.p0, comp.p1, region)
    if clip is None:
        return QuadratureRule.empty()
    t0, t1 = clip
    span = (t1 - t0) * comp.length
    if span <= 0:
        return QuadratureRule.empty()
    n = max(1, int(math.ceil(span / resolution - 1e-9)))
    t = t0 + (np.arange(n) + 0.5) * ((t1 - t0) / n)
    ds = span / n
    if comp.constant_density is not None:
        weights = np.full(n, comp.constant_density * ds)
    else:
        weights = np.asarray(comp.linear_density(t * comp.length), dtype=float) * ds
    if np.any(weights < 0):
        raise ValueError("segment density is negative at a quadrature node")
    return QuadratureRule(comp.point(t), weights)


def _cantor_overlaps(comp: CantorSegment, t0: float, t1: float) -> Tuple[np.ndarray, np.ndarray]:
    """Overlap of each generation interval with [t0, t1]: (clipped midpoints, overlap fractions)."""
    lefts = comp.intervals()
    ell = comp.interval_length
    lo = np.maximum(lefts, t0)
    hi = np.minimum(lefts + ell, t1)
    frac = np.clip(hi - lo, 0.0, None) / ell
    return 0.5 * (lo + hi), frac


def _cantor_rule(comp: CantorSegment, region: Rectangle) -> QuadratureRule:
    clip = _clip_segment(comp.p0, comp.p1, region)
    if clip is None:
        return QuadratureRule.empty()
    mids, frac = _cantor_overlaps(comp, *clip)
    keep = frac > 0
    mass_per = comp.total_mass / 2.0 ** comp.depth
    return QuadratureRule(comp.point(mids[keep]), mass_per * frac[keep])


def component_rule(comp: MeasureComponent, region: Rectangle, resolution: float) -> QuadratureRule:
    if isinstance(comp, LebesgueDensity):
        return _lebesgue_rule(comp, region, resolution)
    if isinstance(comp, LineSegment):
        return _segment_rule(comp, region, resolution)
    return _cantor_rule(comp, region)


def quadrature(measure: Measure, region: Rectangle, resolution: float) -> QuadratureRule:
    """
    Quadrature rule for integration against the measure over a closed region.

    Args:
        measure: the measure
        region: closed axis-aligned rectangle; callers pass regions inside the strip
        resolution: maximal node spacing for Lebesgue and segment components

    Returns:
        Concatenated component rules, weights scaled by the component weights.
        An empty intersection gives an empty rule.

    Raises:
        ValueError: if resolution is not positive
    """
    if not resolution > 0:
        raise ValueError(f"quadrature resolution must be positive, got {resolution}")
    rules = []
    for weight, comp in measure.components:
        rule = component_rule(comp, region, resolution)
        if len(rule):
            rules.append(QuadratureRule(rule.nodes, weight * rule.weights))
    return QuadratureRule.concatenate(rules)


def component_mass(comp: MeasureComponent, region: Optional[Rectangle] = None) -> float:
    """Mass of one component, optionally restricted to a closed rectangle."""
    if isinstance(comp, LebesgueDensity):
        box = comp.support if region is None else comp.support.intersect(region)
        if box.x1_hi <= box.x1_lo or box.x2_hi <= box.x2_lo:
            return 0.0
        if comp.constant_density is not None:
            return comp.constant_density * (box.x1_hi - box.x1_lo) * (box.x2_hi - box.x2_lo)
        value, _ = integrate.dblquad(
            lambda x2, x1: float(comp.density(np.array([x1]), np.array([x2]))[0]),
            box.x1_lo, box.x1_hi, box.x2_lo, box.x2_hi,
            epsabs=1e-13, epsrel=1e-11,
        )
        return value
    if isinstance(comp, LineSegment):
        clip = (0.0, 1.0) if region is None else _clip_segment(comp.p0, comp.p1, region)
        if clip is None:
            return 0.0
        s0, s1 = clip[0] * comp.length, clip[1] * comp.length
        if comp.constant_density is not None:
            return comp.constant_density * (s1 - s0)
        value, _ = integrate.quad(lambda s: float(comp.linear_density(np.array([s]))[0]), s0, s1,
                                  epsabs=1e-13, epsrel=1e-11, limit=200)
        return value
    if region is None:
        return comp.total_mass
    clip = _clip_segment(comp.p0, comp.p1, region)
    if clip is None:
        return 0.0
    _, frac = _cantor_overlaps(comp, *clip)
    return float(comp.total_mass / 2.0 ** comp.depth * np.sum(frac))


def measure_of_region(measure: Measure, region: Rectangle) -> float:
    return sum(w * component_mass(c, region) for w, c in measure.components)


def cell_masses(measure: Measure, n_lo: int, n_hi: int, a: float) -> Dict[int, float]:
    """Masses of the closed cells [n, n+1] x [0, a] for n_lo <= n <= n_hi."""
    return {n: measure_of_region(measure, Rectangle(n, n + 1, 0.0, a)) for n in range(n_lo, n_hi + 1)}


def _chord(p0, p1, center, r: float) -> Optional[Tuple[float, float]]:
    """Parameter interval of the line through p0, p1 inside the closed ball."""
    d = np.asarray(p1, dtype=float) - np.asarray(p0, dtype=float)
    length2 = float(d @ d)
    w = np.asarray(center, dtype=float) - np.asarray(p0, dtype=float)
    tc = float(w @ d) / length2
    dist2 = float(w @ w) - tc * tc * length2
    half2 = r * r - dist2
    if half2 < 0:
        return None
    delta = math.sqrt(half2 / length2)
    return tc - delta, tc + delta


def _lebesgue_ball(comp: LebesgueDensity, center, r: float) -> float:
    c1, c2 = float(center[0]), float(center[1])
    box = comp.support
    lo = max(-1.0, (box.x1_lo - c1) / r)
    hi = min(1.0, (box.x1_hi - c1) / r)
    if lo >= hi:
        return 0.0
    th_lo, th_hi = math.asin(lo), math.asin(hi)
    xg, wg = np.polynomial.legendre.leggauss(BALL_OUTER_ORDER)
    theta = 0.5 * (th_hi - th_lo) * xg + 0.5 * (th_hi + th_lo)
    w_theta = 0.5 * (th_hi - th_lo) * wg
    x1 = c1 + r * np.sin(theta)
    half = r * np.cos(theta)
    y_lo = np.maximum(c2 - half, box.x2_lo)
    y_hi = np.minimum(c2 + half, box.x2_hi)
    chord = np.clip(y_hi - y_lo, 0.0, None)
    jac = r * np.cos(theta) * w_theta
    if comp.constant_density is not None:
        return float(comp.constant_density * np.sum(jac * chord))
    yg, vg = np.polynomial.legendre.leggauss(BALL_INNER_ORDER)
    ys = 0.5 * (y_hi - y_lo)[:, None] * yg[None, :] + 0.5 * (y_hi + y_lo)[:, None]
    inner = np.sum(
        np.asarray(comp.density(np.repeat(x1[:, None], BALL_INNER_ORDER, axis=1), ys), dtype=float) * vg[None, :],
        axis=1,
    ) * 0.5 * chord
    return float(np.sum(jac * inner))


def _component_ball(comp: MeasureComponent, center, r: float) -> float:
    if isinstance(comp, LebesgueDensity):
        return _lebesgue_ball(comp, center, r)
    chord = _chord(comp.p0, comp.p1, center, r)
    if chord is None:
        return 0.0
    t0, t1 = max(chord[0], 0.0), min(chord[1], 1.0)
    if t1 <= t0:
        return 0.0
    if isinstance(comp, CantorSegment):
        _, frac = _cantor_overlaps(comp, t0, t1)
        return float(comp.total_mass / 2.0 ** comp.depth * np.sum(frac))
    if comp.constant_density is not None:
        return comp.constant_density * (t1 - t0) * comp.length
    value, _ = integrate.quad(lambda s: float(comp.linear_density(np.array([s]))[0]),
                              t0 * comp.length, t1 * comp.length, limit=200)
    return value


def measure_of_ball(measure: Measure, center, r: float) -> float:
    """
    Mass of the closed Euclidean ball B(center, r).

    Segment and Cantor components use the exact chord; Lebesgue components use a
    Gauss-Legendre rule in x1 = c1 + r sin(theta) over the chord clipped to the support.
    """
    if not r > 0:
        raise ValueError(f"ball radius must be positive, got {r}")
    return sum(w * _component_ball(c, center, r) for w, c in measure.components)


def support_samples(measure: Measure, margin: float) -> np.ndarray:
    """Quadrature-node proxies for supp(mu), kept at least `margin` away from component ends."""
    points: List[np.ndarray] = []
    for _, comp in measure.components:
        if isinstance(comp, LebesgueDensity):
            box = comp.support
            inner = Rectangle(box.x1_lo + margin, box.x1_hi - margin, box.x2_lo + margin, box.x2_hi - margin)
            if inner.x1_hi > inner.x1_lo and inner.x2_hi > inner.x2_lo:
                rule = _lebesgue_rule(comp, inner, margin)
                points.append(rule.nodes[rule.weights > 0])
        elif isinstance(comp, LineSegment):
            rule = _segment_rule(comp, Rectangle(-np.inf, np.inf, -np.inf, np.inf), margin / 4.0)
            s = np.linalg.norm(rule.nodes - np.asarray(comp.p0, dtype=float)[None, :], axis=1)
            keep = (s >= margin) & (s <= comp.length - margin) & (rule.weights > 0)
            points.append(rule.nodes[keep])
        else:
            mids = comp.intervals() + 0.5 * comp.interval_length
            s = mids * comp.length
            keep = (s >= margin) & (s <= comp.length - margin)
            points.append(comp.point(mids[keep]))
    points = [p for p in points if len(p)]
    if not points:
        return np.zeros((0, 2))
    return np.vstack(points)


def _cell_comparability(masses: Dict[int, float]) -> Tuple[float, float]:
    ratios = []
    for n, m in masses.items():
        for nb in (n - 1, n + 1):
            m_nb = masses.get(nb, 0.0)
            if m > 0 and m_nb > 0:
                ratios.append(m / m_nb)
    if not ratios:
        return 1.0, 1.0
    return min(ratios), max(ratios)


def ahlfors_fit(
    measure: Measure,
    sample_count: int,
    r_min: float,
    r_max: float,
    seed: int,
    strip_width: Optional[float] = None,
) -> AhlforsEstimate:
    """
    Empirical Ahlfors-regularity parameters.

    Centers are drawn from support proxies, radii log-uniformly from [r_min, r_max].
    The dimension is the least-squares slope of log mu(B) against log r; the ball
    constants are the extreme values of mu(B) / r**d_hat. Cell comparability uses
    adjacent closed cells of height `strip_width` (default: the top of the bounding box).

    Raises:
        ValueError: on invalid radii or sample count, or when no support point
            lies at distance r_max from the component ends
    """
    if not (0 < r_min < r_max):
        raise ValueError(f"need 0 < r_min < r_max, got r_min={r_min}, r_max={r_max}")
    if sample_count < 10:
        raise ValueError(f"sample_count must be at least 10, got {sample_count}")

    candidates = support_samples(measure, r_max)
    if len(candidates) == 0:
        raise ValueError(f"no support points at distance {r_max} from the component ends")

    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(candidates), size=sample_count)
    radii = np.exp(rng.uniform(math.log(r_min), math.log(r_max), size=sample_count))
    masses = np.array([measure_of_ball(measure, candidates[i], r) for i, r in zip(picks, radii)])

    positive = masses > 0
    if positive.sum() < 2:
        raise ValueError("fewer than two sampled balls carry positive mass")
    fit = stats.linregress(np.log(radii[positive]), np.log(masses[positive]))
    d_hat = float(fit.slope)
    scaled = masses[positive] / radii[positive] ** d_hat

    box = measure.bounding_box()
    a = strip_width if strip_width is not None else box.x2_hi
    cells = cell_masses(measure, int(math.floor(box.x1_lo)) - 1, int(math.ceil(box.x1_hi)), a)
    c2, c3 = _cell_comparability(cells)

    logger.info(f"Ahlfors fit: d_hat={d_hat:.4f} over {int(positive.sum())} balls, c2={c2:.4g}, c3={c3:.4g}")
    return AhlforsEstimate(
        d_hat=d_hat,
        c0_hat=float(np.min(scaled)),
        c1_hat=float(np.max(scaled)),
        r_range=(r_min, r_max),
        c2_hat=c2,
        c3_hat=c3,
        samples=int(positive.sum()),
        cell_masses={n: m for n, m in cells.items() if m > 0},
    )


def doubling_chain_holds(estimate: AhlforsEstimate, k_max: int = 3, rel_tol: float = 1e-12) -> bool:
    """
    Check c2**k mu(S_{n+-k}) <= mu(S_n) <= c3**k mu(S_{n+-k}) on runs of charged cells.
    """
    masses = estimate.cell_masses
    for n, m in masses.items():
        for k in range(1, k_max + 1):
            for nb in (n - k, n + k):
                step = 1 if nb > n else -1
                if not all(masses.get(j, 0.0) > 0 for j in range(n, nb + step, step)):
                    continue
                m_nb = masses[nb]
                if estimate.c2_hat ** k * m_nb > m * (1 + rel_tol):
                    return False
                if m > estimate.c3_hat ** k * m_nb * (1 + rel_tol):
                    return False
    return True
