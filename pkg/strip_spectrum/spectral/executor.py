"""
Verification Battery Executor

Runs the numerical invariant checks of every spectral module, each in a child
process under its own time budget, and records one CheckExecution per check.

Checks:
    - cross_section_closed_forms: Neumann, Dirichlet and Robin alpha = beta = 1
    - robin_fd_oracle: lambda1, lambda2 against the finite-difference eigensolver
    - orlicz_chain: Luxemburg <= Orlicz <= 2 Luxemburg and the integral bound
    - amemiya_bruteforce: Amemiya infimum against the direct dual supremum
    - explicit_sandwich_1d: one-dimensional count <= 1 + 7.61 * sum sqrt(F_n)
    - testfunction_energies: window test functions carry energy 5 * 2^n
    - witness_lower_bound: separated windows with F_n > 5 force negative states
    - inertia_dense: block LDL^T inertia against dense eigenvalues
    - projection_split: residual decay of the projection identities
    - ahlfors_fits: fitted dimensions 2, 1 and ln 2 / ln 3
    - lebesgue_chain: D_n <= 4 M_n on Lebesgue cells
    - semiclassical_sweep: N(gamma) / gamma stable between gamma = 8 and 16

Each check has a quick and a full scale; the full scale is the acceptance size.
"""

import asyncio
import logging
import math
import multiprocessing
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from ..config import settings
from ..potential import ExpressionPotential
from .bound import bound_report, build_nu, dyadic_terms, explicit_rhs, lebesgue_refinement, witness_lower_bound
from .counter import (
    count_negative,
    count_negative_1d,
    dense_inertia,
    inertia,
    split_decay_order,
    testfunction_energy,
    verify_projection_split,
)
from .cross_section import first_two_eigenpairs, fd_eigenvalues
from .measure import ahlfors_fit
from .models import (
    CantorSegment,
    CheckExecution,
    CheckStatus,
    CountControls,
    LebesgueDensity,
    LineSegment,
    Measure,
    NormKind,
    NormRequest,
    Rectangle,
    StripGeometry,
)
from .orlicz import dual_norm_bruteforce, luxemburg_norm, modular, orlicz_norm

logger = logging.getLogger(__name__)

CheckResult = Tuple[bool, str]
CheckFunction = Callable[[bool, int], CheckResult]

POLL_INTERVAL = 0.01
TERMINATE_GRACE = 5.0


def check_cross_section_closed_forms(full: bool, seed: int) -> CheckResult:
    cases = [
        ("neumann", StripGeometry.neumann(1.0), (0.0, math.pi ** 2)),
        ("dirichlet", StripGeometry.dirichlet(1.0), (math.pi ** 2, 4 * math.pi ** 2)),
        ("robin(1,1)", StripGeometry.robin(1.0, 1.0, 1.0), (-1.0, math.pi ** 2)),
    ]
    worst = 0.0
    for _, geometry, expected in cases:
        cs = first_two_eigenpairs(geometry)
        worst = max(worst, abs(cs.lambda1 - expected[0]), abs(cs.lambda2 - expected[1]))
    return worst <= 1e-9, f"max deviation {worst:.2e}"


FD_LAMBDA_FLOOR = 1e-2


def check_robin_fd_oracle(full: bool, seed: int) -> CheckResult:
    grid = np.linspace(-3.0, 3.0, 5 if full else 3)
    h = 1.0 / 2048.0
    worst = 0.0
    for alpha in grid:
        for beta in grid:
            geometry = StripGeometry.robin(1.0, float(alpha), float(beta))
            cs = first_two_eigenpairs(geometry)
            fd = fd_eigenvalues(geometry, h, 2)
            for exact, approx in zip((cs.lambda1, cs.lambda2), fd):
                worst = max(worst, abs(exact - approx) / max(abs(exact), FD_LAMBDA_FLOOR))
    return worst <= 1e-5, f"{len(grid) ** 2} pairs, max relative deviation {worst:.2e}"


def _random_step_function(rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    pieces = int(rng.integers(1, 9))
    values = rng.exponential(1.0, pieces) * rng.choice([0.1, 1.0, 10.0])
    weights = rng.uniform(0.05, 2.0, pieces)
    return values, weights


def check_orlicz_chain(full: bool, seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    trials = 500 if full else 100
    worst = math.inf
    for _ in range(trials):
        f, w = _random_step_function(rng)
        lux = luxemburg_norm(NormRequest(f, w, NormKind.LUXEMBURG))
        orl = orlicz_norm(NormRequest(f, w, NormKind.ORLICZ))
        slack = min(orl - lux, 2 * lux - orl, max(1.0, modular(f, w)) - lux)
        worst = min(worst, slack / max(1.0, orl))
    indicator = luxemburg_norm(NormRequest(np.ones(1), np.ones(1), NormKind.LUXEMBURG))
    closed_form = abs(indicator - 1.0 / (math.e - 1.0))
    passed = worst >= -1e-9 and closed_form <= 1e-8
    return passed, f"{trials} step functions, min slack {worst:.2e}, indicator error {closed_form:.2e}"


def check_amemiya_bruteforce(full: bool, seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    trials = 50 if full else 10
    worst = 0.0
    for _ in range(trials):
        f = rng.uniform(0.1, 3.0, 3)
        w = rng.uniform(0.2, 1.5, 3)
        amemiya_value = orlicz_norm(NormRequest(f, w, NormKind.ORLICZ))
        direct = dual_norm_bruteforce(f, w)
        worst = max(worst, abs(amemiya_value - direct) / amemiya_value)
    return worst <= 1e-6, f"{trials} three-node instances, max relative gap {worst:.2e}"


def sandwich_geometries() -> List[StripGeometry]:
    return [StripGeometry.dirichlet(1.0), StripGeometry.robin(1.0, 1.0, 1.0), StripGeometry.robin(2.0, -0.5, 0.5)]


def sandwich_measures(a: float) -> Dict[str, Measure]:
    return {
        "lebesgue": Measure.single(LebesgueDensity(Rectangle(-2.0, 2.0, 0.0, a))),
        "midline": Measure.single(LineSegment((-2.0, a / 2), (2.0, a / 2))),
        "cantor": Measure.single(CantorSegment((-2.0, a / 2), (2.0, a / 2), depth=8, total_mass=4.0)),
    }


def check_explicit_sandwich_1d(full: bool, seed: int) -> CheckResult:
    L, h = (64.0, 1.0 / 64.0) if full else (32.0, 1.0 / 32.0)
    depths = (1.0, 10.0, 100.0)
    cases = 0
    violations = []
    for geometry in sandwich_geometries():
        cs = first_two_eigenpairs(geometry)
        measures = sandwich_measures(geometry.a)
        if not full:
            measures = {k: measures[k] for k in ("lebesgue", "midline")}
        for name, mu in measures.items():
            for depth in depths:
                V = ExpressionPotential(f"{depth:g}*indicator(x1, -1, 1)")
                nu = build_nu(V, cs, mu, (-L, L), h / 2)
                f_terms, _ = dyadic_terms(nu, int(math.ceil(math.log2(L))))
                n_neg = count_negative_1d(nu, L, h)
                rhs = explicit_rhs(f_terms)
                cases += 1
                if n_neg > rhs:
                    violations.append(f"{geometry.bc.value} a={geometry.a:g} {name} depth={depth:g}: {n_neg} > {rhs:.4g}")
    if violations:
        return False, "; ".join(violations)
    return True, f"{cases} configurations, no violation"


def check_testfunction_energies(full: bool, seed: int) -> CheckResult:
    cs = first_two_eigenpairs(StripGeometry.robin(1.0, 1.0, 1.0))
    worst = 0.0
    for n in range(1, 7):
        result = testfunction_energy(cs.geometry, cs, n)
        worst = max(worst, abs(result.energy - 5 * 2 ** n))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


WITNESS_POTENTIAL = "0.5*(indicator(x1, 4, 8) + indicator(x1, 32, 64) + indicator(x1, 256, 512))"


def check_witness_lower_bound(full: bool, seed: int) -> CheckResult:
    geometry = StripGeometry.dirichlet(1.0)
    cs = first_two_eigenpairs(geometry)
    mu = Measure.single(LebesgueDensity(Rectangle(0.0, 1024.0, 0.0, 1.0)))
    V = ExpressionPotential(WITNESS_POTENTIAL)
    L = 1024.0
    nu = build_nu(V, cs, mu, (-L, L), 1.0 / 16.0)
    f_terms, _ = dyadic_terms(nu, 10)
    witnesses = witness_lower_bound(f_terms)
    n_1d = count_negative_1d(nu, L, 1.0 / 8.0, coupling=1.0)
    passed = witnesses >= 3 and n_1d >= witnesses
    detail = f"witnesses={witnesses}, reduced count={n_1d}"
    if full:
        result = count_negative(geometry, mu, V, CountControls(L=64.0, h=1.0 / 32.0, max_refinements=0), cs=cs)
        passed = passed and result.n_neg >= 1
        detail += f", 2D count at L=64={result.n_neg}"
    return passed, detail


def _random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    if rng.random() < 0.5:
        band = int(rng.integers(1, max(2, n // 20)))
        A = sp.random(n, n, density=min(1.0, 4.0 / n), random_state=rng, format="csr")
        A = sp.triu(sp.tril(A, band), -band)
        return (A + A.T).toarray() + np.diag(rng.standard_normal(n))
    B = rng.standard_normal((n, n))
    return (B + B.T) / 2


def check_inertia_dense(full: bool, seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    trials, n_max = (100, 1000) if full else (20, 200)
    mismatches = 0
    for _ in range(trials):
        n = int(rng.integers(2, n_max + 1))
        A = _random_symmetric(rng, n)
        if inertia(sp.csr_matrix(A)).n_neg != dense_inertia(A).n_neg:
            mismatches += 1
    return mismatches == 0, f"{trials} matrices up to dimension {n_max}, {mismatches} mismatches"


def check_projection_split(full: bool, seed: int) -> CheckResult:
    cs = first_two_eigenpairs(StripGeometry.robin(1.0, 1.0, 0.5))
    trials = 8 if full else 3
    coarse = verify_projection_split(cs.geometry, cs, 1.0 / 16.0, trials, seed)
    fine = verify_projection_split(cs.geometry, cs, 1.0 / 32.0, trials, seed)
    order = split_decay_order(coarse, fine)
    passed = order >= 1.8 and fine.split < 1e-6 and fine.orthogonality < 1e-6 and fine.gap_margin >= -1e-6
    return passed, f"order={order:.3g}, split={fine.split:.2e}, orthogonality={fine.orthogonality:.2e}"


def check_ahlfors_fits(full: bool, seed: int) -> CheckResult:
    samples = 200 if full else 100
    cases = [
        ("lebesgue", Measure.single(LebesgueDensity(Rectangle(0.0, 8.0, 0.0, 1.0))), 2.0, (0.01, 0.1)),
        ("segment", Measure.single(LineSegment((0.0, 0.5), (8.0, 0.5))), 1.0, (0.01, 0.1)),
        ("cantor", Measure.single(CantorSegment((0.0, 0.5), (27.0, 0.5), depth=10, total_mass=1.0)),
         math.log(2) / math.log(3), (0.01, 1.0)),
    ]
    details = []
    passed = True
    for name, mu, expected, (r_min, r_max) in cases:
        estimate = ahlfors_fit(mu, samples, r_min, r_max, seed, strip_width=1.0)
        passed = passed and abs(estimate.d_hat - expected) <= 0.05
        details.append(f"{name} d={estimate.d_hat:.4f}")
    return passed, ", ".join(details)


def check_lebesgue_chain(full: bool, seed: int) -> CheckResult:
    cs = first_two_eigenpairs(StripGeometry.robin(1.0, 0.5, 0.5))
    mu = Measure.single(LebesgueDensity(Rectangle(-3.0, 3.0, 0.0, 1.0)))
    V = ExpressionPotential("(1 + x2)*exp(-x1^2)")
    refinement = lebesgue_refinement(V, cs, mu, range(-3, 3), 1.0 / 16.0 if full else 1.0 / 8.0)
    return refinement.chain_holds, f"v_star_norm={refinement.v_star_norm:.4g}"


SWEEP_POTENTIAL = "indicator(x1, -4, 4)*(1 + cos(pi*x1/4))"


def check_semiclassical_sweep(full: bool, seed: int) -> CheckResult:
    geometry = StripGeometry.neumann(1.0)
    cs = first_two_eigenpairs(geometry)
    mu = Measure.single(LebesgueDensity(Rectangle(-6.0, 6.0, 0.0, 1.0)))
    V = ExpressionPotential(SWEEP_POTENTIAL)
    controls = CountControls(L=16.0, h=1.0 / 32.0, max_refinements=0) if full else \
        CountControls(L=8.0, h=1.0 / 16.0, max_refinements=0)
    counts = {}
    for gamma in (8.0, 16.0):
        counts[gamma] = count_negative(geometry, mu, V.scaled(gamma), controls, cs=cs).n_neg
    r8, r16 = counts[8.0] / 8.0, counts[16.0] / 16.0
    spread = abs(r16 - r8) / max(r8, r16) if max(r8, r16) > 0 else math.inf

    base = bound_report(V, cs, mu, controls.L, controls.h, 0.046, 1.0, n_max=4)
    extended = bound_report(V, cs, mu, controls.L, controls.h, 0.046, 1.0, n_max=6)
    stable = math.isfinite(base.weak_l1) and abs(base.weak_l1 - extended.weak_l1) <= 1e-9 * max(1.0, base.weak_l1)
    return spread < 0.3 and stable, f"N(8)={counts[8.0]}, N(16)={counts[16.0]}, spread={spread:.3f}, weak_l1={base.weak_l1:.4g}"


CHECKS: Dict[str, CheckFunction] = {
    "cross_section_closed_forms": check_cross_section_closed_forms,
    "robin_fd_oracle": check_robin_fd_oracle,
    "orlicz_chain": check_orlicz_chain,
    "amemiya_bruteforce": check_amemiya_bruteforce,
    "explicit_sandwich_1d": check_explicit_sandwich_1d,
    "testfunction_energies": check_testfunction_energies,
    "witness_lower_bound": check_witness_lower_bound,
    "inertia_dense": check_inertia_dense,
    "projection_split": check_projection_split,
    "ahlfors_fits": check_ahlfors_fits,
    "lebesgue_chain": check_lebesgue_chain,
    "semiclassical_sweep": check_semiclassical_sweep,
}


def _run_in_child(check: CheckFunction, full: bool, seed: int, conn) -> None:
    """Child-process entry: send ("ok", (passed, detail)) or ("error", message) back."""
    try:
        conn.send(("ok", check(full, seed)))
    except Exception as e:
        conn.send(("error", f"{type(e).__name__}: {e}"))
    finally:
        conn.close()


class BatteryExecutor:
    def __init__(self, checks: Optional[Dict[str, CheckFunction]] = None):
        self.max_check_time = settings.max_check_time
        self.checks: Dict[str, CheckFunction] = dict(checks or CHECKS)
        self.executions: List[CheckExecution] = []

    @staticmethod
    def _stop(process) -> None:
        process.terminate()
        process.join(TERMINATE_GRACE)
        if process.is_alive():
            process.kill()
            process.join()

    async def run_check(self, name: str, full: bool, seed: int) -> CheckExecution:
        """
        Run one check in a child process under the per-check time budget.

        The child is terminated once the budget is spent, so a TIMEOUT status
        means the check no longer consumes CPU.

        Args:
            name: key of the check
            full: run at acceptance scale
            seed: seed for randomized checks

        Returns:
            CheckExecution with the verdict, error or timeout
        """
        if name not in self.checks:
            raise ValueError(f"Unknown check {name}")
        execution = CheckExecution(name=name, status=CheckStatus.RUNNING)
        self.executions.append(execution)
        start_time = time.time()
        logger.info(f"🔧 STARTING CHECK {name} ({'full' if full else 'quick'})")

        receiver, sender = multiprocessing.Pipe(duplex=False)
        process = multiprocessing.Process(target=_run_in_child, args=(self.checks[name], full, seed, sender),
                                          daemon=True)
        try:
            process.start()
            sender.close()
            while not receiver.poll():
                if time.time() - start_time >= self.max_check_time:
                    raise asyncio.TimeoutError
                await asyncio.sleep(POLL_INTERVAL)
            try:
                kind, payload = receiver.recv()
            except EOFError:
                raise RuntimeError(f"check process exited with code {process.exitcode}") from None
            process.join()
            if kind == "error":
                raise RuntimeError(payload)
            passed, detail = payload
            execution.mark_completed(passed, detail, time.time() - start_time)
        except asyncio.TimeoutError:
            self._stop(process)
            execution.mark_failed(f"exceeded {self.max_check_time:g} seconds", time.time() - start_time,
                                  status=CheckStatus.TIMEOUT)
        except Exception as e:
            logger.error(f"❌ CHECK {name} RAISED {e}")
            execution.mark_failed(str(e), time.time() - start_time)
        finally:
            receiver.close()
            if process.is_alive():
                self._stop(process)

        if execution.passed:
            logger.info(f"✅ {name}: {execution.detail} ({execution.execution_time:.2f}s)")
        else:
            logger.warning(f"❌ {name} {execution.status.value}: {execution.detail}")
        return execution

    async def run_battery(self, full: bool = False, seed: int = 0, names: Optional[List[str]] = None) -> List[CheckExecution]:
        """Run the selected checks one after another; all of them when names is None."""
        selected = names if names is not None else list(self.checks)
        results = []
        for name in selected:
            results.append(await self.run_check(name, full, seed))
        return results

    def run(self, full: bool = False, seed: int = 0, names: Optional[List[str]] = None) -> List[CheckExecution]:
        return asyncio.run(self.run_battery(full, seed, names))


# Global executor instance
battery_executor = BatteryExecutor()
