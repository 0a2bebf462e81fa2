"""
Orlicz Norms for the N-function Pair A, B

B(s) = (1 + |s|) ln(1 + |s|) - |s| and its complement A(s) = e^|s| - 1 - |s|,
with Luxemburg, Orlicz and average norms of nodal values against a quadrature rule.

Features:
    - Series forms near zero; A saturates to +inf above ln(max float)
    - Luxemburg norm by geometric bracketing and brentq
    - Orlicz and average norms through the Amemiya infimum
    - Brute-force dual supremum oracle for small instances
    - Young gap and Delta_2 constant diagnostics
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import optimize, special

from .models import NormKind, NormRequest

logger = logging.getLogger(__name__)

SMALL_S = 1e-4
A_OVERFLOW = 709.78
BRACKET_FACTOR = 4.0
MAX_EXPANSIONS = 200
REL_TOL = 1e-12
BRANCH_SERIES_LIMIT = 1e-10
NEWTON_STEPS = 3


def b_eval(s):
    """B(s) = (1 + |s|) ln(1 + |s|) - |s|, vectorized."""
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.abs(np.asarray(s, dtype=float)))
    out = np.empty_like(s)
    small = s < SMALL_S
    ss = s[small]
    out[small] = ss ** 2 / 2 - ss ** 3 / 6 + ss ** 4 / 12 - ss ** 5 / 20
    big = s[~small]
    out[~small] = (1.0 + big) * np.log1p(big) - big
    return float(out[0]) if scalar else out


def a_eval(s):
    """A(s) = e^|s| - 1 - |s|, vectorized; +inf once |s| exceeds 709.78."""
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.abs(np.asarray(s, dtype=float)))
    out = np.empty_like(s)
    small = s < SMALL_S
    ss = s[small]
    out[small] = ss ** 2 / 2 + ss ** 3 / 6 + ss ** 4 / 24 + ss ** 5 / 120
    big = s[~small]
    with np.errstate(over="ignore"):
        out[~small] = np.where(big > A_OVERFLOW, np.inf, np.expm1(np.minimum(big, A_OVERFLOW)) - big)
    return float(out[0]) if scalar else out


def a_inverse(y):
    """
    Nonnegative g with A(g) = y.

    Starts from the -1 branch of the Lambert W function (series sqrt(2y) - 2y/6 + ...
    near the branch point, logarithmic guess once e^-(1+y) underflows) and polishes
    with Newton steps. a_inverse(0) is exactly 0.
    """
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y < 0):
        raise ValueError("A is only inverted on [0, inf)")
    arg = np.maximum(-np.exp(-(1.0 + y)), -1.0 / math.e)
    with np.errstate(invalid="ignore"):
        g = -special.lambertw(arg, k=-1).real - 1.0 - y
    t = np.sqrt(2.0 * y)
    near_branch = y < BRANCH_SERIES_LIMIT
    g[near_branch] = t[near_branch] - t[near_branch] ** 2 / 6 + t[near_branch] ** 3 / 36
    far = ~np.isfinite(g) & np.isfinite(y)
    g[far] = np.log1p(y[far])
    g[np.isinf(y)] = np.inf
    g = np.maximum(g, 0.0)

    polish = (g > 0) & np.isfinite(g)
    for _ in range(NEWTON_STEPS):
        gp = g[polish]
        g[polish] = np.maximum(gp - (a_eval(gp) - y[polish]) / np.expm1(gp), 0.0)
    return float(g[0]) if scalar else g


def young_gap(s, t):
    """A(s) + B(t) - s t, nonnegative for s, t >= 0."""
    return a_eval(s) + b_eval(t) - np.abs(s) * np.abs(t)


def delta2_constant(s_max: float = 100.0, points: int = 20001) -> float:
    """Smallest C with B(2s) <= C B(s) + C on a grid of [0, s_max]."""
    s = np.linspace(0.0, s_max, points)
    return float(np.max(b_eval(2 * s) / (b_eval(s) + 1.0)))


def modular(f_values: np.ndarray, weights: np.ndarray, scale: float = 1.0) -> float:
    """Integral of B(scale |f|) against the weights."""
    return float(np.dot(weights, b_eval(scale * np.abs(f_values))))


def luxemburg_norm(req: NormRequest) -> float:
    """
    Luxemburg norm inf{kappa > 0 : integral of B(|f| / kappa) <= 1}.

    Returns 0 for f vanishing on every charged node.
    """
    f = np.abs(req.f_values)
    w = req.weights
    if f.size == 0 or not np.any(f > 0):
        return 0.0

    def excess(kappa: float) -> float:
        return modular(f, w, 1.0 / kappa) - 1.0

    hi = lo = float(np.max(f))
    for _ in range(MAX_EXPANSIONS):
        if excess(hi) <= 0:
            break
        hi *= BRACKET_FACTOR
    for _ in range(MAX_EXPANSIONS):
        if excess(lo) >= 0:
            break
        lo /= BRACKET_FACTOR
    if excess(hi) > 0 or excess(lo) < 0:
        raise RuntimeError(f"Luxemburg bracket not found after {MAX_EXPANSIONS} expansions")
    if excess(hi) == 0:
        return hi
    if excess(lo) == 0:
        return lo
    return float(optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=REL_TOL))


def amemiya(f_values: np.ndarray, weights: np.ndarray, level: float) -> float:
    """
    inf over k > 0 of (level + integral of B(k |f|)) / k.

    The objective is unimodal in log k with stationary point
    sum w (k|f| - ln(1 + k|f|)) = level, which locates the search bracket.
    """
    f = np.abs(np.asarray(f_values, dtype=float))
    w = np.asarray(weights, dtype=float)
    if f.size == 0 or not np.any(f > 0):
        return 0.0

    def objective(log_k: float) -> float:
        k = math.exp(log_k)
        return (level + modular(f, w, k)) / k

    def stationarity(log_k: float) -> float:
        kf = math.exp(log_k) * f
        return float(np.dot(w, kf - np.log1p(kf))) - level

    lo = hi = -math.log(float(np.max(f)))
    step = math.log(BRACKET_FACTOR)
    for _ in range(MAX_EXPANSIONS):
        if stationarity(hi) >= 0:
            break
        hi += step
    for _ in range(MAX_EXPANSIONS):
        if stationarity(lo) <= 0:
            break
        lo -= step
    if stationarity(lo) == 0:
        return objective(lo)
    if stationarity(hi) == 0:
        return objective(hi)
    log_k_star = optimize.brentq(stationarity, lo, hi, xtol=1e-14, rtol=REL_TOL)
    res = optimize.minimize_scalar(
        objective,
        bounds=(log_k_star - step, log_k_star + step),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(min(objective(log_k_star), res.fun))


def orlicz_norm(req: NormRequest) -> float:
    """Orlicz (dual) norm via the Amemiya infimum with level 1."""
    return amemiya(req.f_values, req.weights, 1.0)


def average_norm(req: NormRequest, omega_mass: Optional[float] = None) -> float:
    """
    Average-type norm: sup of |integral f g| over g with integral A(|g|) <= mass of Omega.

    Raises:
        ValueError: if omega_mass is not positive
    """
    if omega_mass is None:
        omega_mass = req.mass
    if not omega_mass > 0:
        raise ValueError(f"omega_mass must be positive, got {omega_mass}")
    return amemiya(req.f_values, req.weights, omega_mass)


def norm(req: NormRequest, omega_mass: Optional[float] = None) -> float:
    """Dispatch on the request kind."""
    if req.kind == NormKind.LUXEMBURG:
        return luxemburg_norm(req)
    if req.kind == NormKind.ORLICZ:
        return orlicz_norm(req)
    return average_norm(req, omega_mass)


def norm_triple(f_values: np.ndarray, weights: np.ndarray) -> dict:
    """Luxemburg, Orlicz and average norms of the same nodal data."""
    out = {}
    for kind in NormKind:
        req = NormRequest(f_values, weights, kind)
        out[kind.value] = norm(req) if req.mass > 0 else 0.0
    return out


def luxemburg_bound_from_integral(f_values: np.ndarray, weights: np.ndarray, kappa0: float) -> float:
    """
    Upper bound C0 kappa0 for the Luxemburg norm, where C0 = max(1, integral of B(|f| / kappa0)).
    """
    if not kappa0 > 0:
        raise ValueError(f"kappa0 must be positive, got {kappa0}")
    c0 = max(1.0, modular(np.asarray(f_values, dtype=float), np.asarray(weights, dtype=float), 1.0 / kappa0))
    return c0 * kappa0


def dual_norm_bruteforce(
    f_values: np.ndarray, weights: np.ndarray, level: float = 1.0, grid: int = 200, zoom: int = 3
) -> float:
    """
    Direct maximization of sum f g w subject to sum A(|g|) w <= level, for one to three nodes.

    The last coordinate saturates the constraint and is solved exactly; the others
    run over a grid that is zoomed around the best cell `zoom` times.
    """
    f = np.abs(np.asarray(f_values, dtype=float))
    w = np.asarray(weights, dtype=float)
    if f.size == 0 or f.size > 3:
        raise ValueError("brute-force dual supremum supports one to three nodes")
    if np.any(w <= 0):
        raise ValueError("brute-force dual supremum needs positive weights")

    g_caps = a_inverse(level / w)
    if f.size == 1:
        return float(f[0] * g_caps[0] * w[0])

    free = f.size - 1
    lo = np.zeros(free)
    hi = g_caps[:free].copy()
    best = -np.inf
    for _ in range(zoom + 1):
        axes = [np.linspace(lo[i], hi[i], grid) for i in range(free)]
        mesh = np.meshgrid(*axes, indexing="ij")
        g_free = np.stack([m.ravel() for m in mesh], axis=1)
        used = np.sum(a_eval(g_free) * w[None, :free], axis=1)
        rest = level - used
        ok = rest >= 0
        g_last = np.zeros(len(rest))
        g_last[ok] = a_inverse(rest[ok] / w[-1])
        value = g_free @ (f[:free] * w[:free]) + g_last * f[-1] * w[-1]
        value[~ok | ~np.isfinite(value)] = -np.inf
        i = int(np.argmax(value))
        best = max(best, float(value[i]))
        spacing = (hi - lo) / (grid - 1)
        center = g_free[i]
        lo = np.maximum(center - 2 * spacing, 0.0)
        hi = np.minimum(center + 2 * spacing, g_caps[:free])
    return best
