"""
Command Line Interface for the Strip Spectrum Toolkit

Entry point for every run: loads a run configuration, resolves it into domain
objects, dispatches to a subcommand and writes the artifacts to the output
directory.

Subcommands:
    - cross-section: transverse eigenvalues and ground state
    - ahlfors: empirical Ahlfors-regularity parameters of the measure
    - bound: window quantities F_n, cell norms M_n and both right-hand sides
    - count: negative-eigenvalue count of the two-dimensional form
    - count1d: count of the one-dimensional reduction and the explicit sandwich
    - sweep: coupling sweep gamma -> (count, bound)
    - verify: verification battery with a pass/fail table
    - quadrature: measure quadrature nodes as CSV
    - norms: Luxemburg, Orlicz and average norms of V per cell

Exit codes:
    0 on success, 1 on configuration or numerical errors, 2 when a checked
    inequality or a verification check fails.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from .config import settings
from .exceptions import AssertionFailure, StripSpectrumError
from .models import (
    AhlforsReport,
    BoundSummary,
    CellMassRow,
    CellRow,
    CheckRow,
    Count1DReport,
    CountReport,
    CrossSectionReport,
    NormRow,
    NormsReport,
    QuadratureReport,
    RefinementSummary,
    RunConfig,
    RunSetup,
    SweepReport,
    SweepRow,
    TermRow,
    TraceRow,
    VerifyReport,
    WindowRow,
)
from .spectral.bound import (
    C_F_ALT,
    F_THRESHOLD,
    bound_report,
    build_nu,
    cell_range,
    cell_rule,
    default_window_count,
    dyadic_terms,
    explicit_rhs,
    gamma_sweep,
    lebesgue_refinement,
    refined_rhs,
    separated_bound,
)
from .spectral.counter import assemble_form, count_negative, count_negative_1d, matrix_coordinates
from .spectral.cross_section import (
    cell_lambda2,
    eigenvalue_lower_bound,
    first_two_eigenpairs,
    gap_constant,
    robin_residuals,
)
from .spectral.executor import battery_executor
from .spectral.measure import ahlfors_fit, doubling_chain_holds, quadrature
from .spectral.models import BoundReport, DyadicWindow, Rectangle
from .spectral.orlicz import norm_triple
from .utils import write_csv, write_error_report, write_json, write_matrix, write_quadrature

logger = logging.getLogger(__name__)

WINDOW_FIELDS = ["n", "lo", "hi", "F", "above_threshold", "truncated"]
TRACE_FIELDS = ["h", "L", "n_neg"]
TERM_FIELDS = ["n", "F", "M"]
REFINED_THRESHOLD_FACTOR = 4.0
SWEEP_FIELDS = ["gamma", "n_oracle", "n_oracle_1d", "rhs_1d", "rhs_total", "windows_above", "stable", "ratio"]


def configure_logging(quiet: bool = False) -> None:
    """Configure root logging once from settings; --quiet forces WARNING."""
    level = logging.WARNING if quiet else getattr(logging, settings.log_level, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def window_rows(f_terms: Dict[int, float], flagged: List[int]) -> List[WindowRow]:
    rows = []
    for n in sorted(f_terms):
        lo, hi = DyadicWindow(n).interval
        rows.append(WindowRow(n=n, lo=lo, hi=hi, F=f_terms[n], above_threshold=f_terms[n] > F_THRESHOLD,
                              truncated=n in flagged))
    return rows


def _dump_rows(rows) -> List[dict]:
    return [r.model_dump() for r in rows]


def run_cross_section(config: RunConfig, setup: RunSetup, args: argparse.Namespace, out_dir: Path) -> None:
    geometry = setup.geometry
    cs = first_two_eigenpairs(geometry, setup.controls.tolerance)
    report = CrossSectionReport(
        command="cross-section",
        geometry=config.geometry,
        lambda1=cs.lambda1,
        lambda2=cs.lambda2,
        cell_lambda2=cell_lambda2(geometry, cs),
        gap_constant=gap_constant(geometry, cs),
        lower_bound=eigenvalue_lower_bound(geometry),
        branch=cs.u1.branch.value,
        u1={"lam": cs.u1.lam, "c_cos": cs.u1.c_cos, "c_sin": cs.u1.c_sin, "norm": cs.u1.norm},
        residuals=robin_residuals(cs),
    )
    write_json(out_dir / "report.json", report)
    write_csv(out_dir / "u1.csv", [{"x2": x, "u1": u} for x, u in cs.u1_samples], ["x2", "u1"])


def run_ahlfors(config: RunConfig, setup: RunSetup, args: argparse.Namespace, out_dir: Path) -> None:
    ahlfors = setup.controls.ahlfors
    estimate = ahlfors_fit(setup.measure, ahlfors.sample_count, ahlfors.r_min, ahlfors.r_max,
                           setup.controls.seed, strip_width=setup.geometry.a)
    report = AhlforsReport(
        command="ahlfors",
        d_hat=estimate.d_hat,
        c0_hat=estimate.c0_hat,
        c1_hat=estimate.c1_hat,
        r_range=estimate.r_range,
        c2_hat=estimate.c2_hat,
        c3_hat=estimate.c3_hat,
        samples=estimate.samples,
        kappa0=estimate.kappa0(setup.geometry.a),
        doubling_chain_holds=doubling_chain_holds(estimate),
        cells=[CellMassRow(n=n, mass=m) for n, m in sorted(estimate.cell_masses.items())],
    )
    write_json(out_dir / "report.json", report)


def _bound(setup: RunSetup, cs) -> BoundReport:
    controls = setup.controls
    return bound_report(
        setup.potential, cs, setup.measure, controls.L, controls.quadrature_resolution,
        controls.c_M, controls.C_M, controls.n_max, controls.c1_constant,
    )


def run_bound(config: RunConfig, setup: RunSetup, args: argparse.Namespace, out_dir: Path) -> None:
    controls = setup.controls
    cs = first_two_eigenpairs(setup.geometry, controls.tolerance)
    report = _bound(setup, cs)

    refinement = None
    d_terms: Dict[int, float] = {}
    if setup.measure.is_lebesgue:
        cells = list(report.m_terms)
        refined = lebesgue_refinement(setup.potential, cs, setup.measure, cells,
                                      controls.quadrature_resolution, controls.L)
        d_terms = refined.d_terms
        c_d = REFINED_THRESHOLD_FACTOR * controls.c_M
        refinement = RefinementSummary(
            v_star_norm=refined.v_star_norm,
            chain_holds=refined.chain_holds,
            separated_bound=separated_bound(report.f_terms, refined.v_star_norm),
            c_d=c_d,
            C_d=controls.C_M,
            rhs_refined=refined_rhs(report.f_terms, refined.d_terms, c_d, controls.C_M),
        )

    windows = window_rows(report.f_terms, report.flagged_windows)
    cells = [CellRow(n=n, M=m, M_average=report.m_average_terms.get(n, 0.0), D=d_terms.get(n))
             for n, m in sorted(report.m_terms.items())]
    terms = [TermRow(n=n, F=report.f_terms.get(n), M=report.m_terms.get(n))
             for n in sorted(set(report.f_terms) | set(report.m_terms))]
    summary = BoundSummary(
        command="bound",
        c_f=report.c_f, C_f=report.C_f, c_m=report.c_m, C_m=report.C_m,
        rhs_1d=report.rhs_1d, rhs_total=report.rhs_total, rhs_1d_alt=report.rhs_1d_alt,
        weak_l1=report.weak_l1, f_terms=report.f_terms, m_terms=report.m_terms,
        window_range=report.window_range,
        witness_lower_bound=report.witness_lower_bound, flagged_windows=report.flagged_windows,
        deficit=report.deficit, constants=report.constants,
        windows=windows, cells=cells, refinement=refinement,
    )
    write_json(out_dir / "report.json", summary)
    write_csv(out_dir / "windows.csv", _dump_rows(windows), WINDOW_FIELDS)
    write_csv(out_dir / "cells.csv", _dump_rows(cells), ["n", "M", "M_average", "D"])
    write_csv(out_dir / "terms.csv", _dump_rows(terms), TERM_FIELDS)


def run_count(config: RunConfig, setup: RunSetup, args: argparse.Namespace, out_dir: Path) -> None:
    controls = setup.controls
    cs = first_two_eigenpairs(setup.geometry, controls.tolerance)
    count_controls = controls.count_controls()
    result = count_negative(setup.geometry, setup.measure, setup.potential, count_controls, cs=cs)
    bound = _bound(setup, cs)

    trace = [TraceRow(h=s.h, L=s.L, n_neg=s.n_neg) for s in result.refinement_trace]
    report = CountReport(
        command="count",
        n_neg=result.n_neg, n_zero=result.n_zero, n_pos=result.n_pos,
        dimension=result.dimension, zero_tolerance=result.zero_tolerance,
        method=result.method, stable=result.stable, trace=trace,
        rhs_1d=bound.rhs_1d, rhs_total=bound.rhs_total,
        witness_lower_bound=bound.witness_lower_bound,
        within_total_bound=result.n_neg <= bound.rhs_total,
    )
    if not report.within_total_bound:
        logger.warning(f"count {result.n_neg} exceeds rhs_total {bound.rhs_total:.4g}; C_M is configuration-supplied")
    write_json(out_dir / "report.json", report)
    write_csv(out_dir / "trace.csv", _dump_rows(trace), TRACE_FIELDS)
    write_csv(out_dir / "windows.csv", _dump_rows(window_rows(bound.f_terms, bound.flagged_windows)), WINDOW_FIELDS)

    if args.dump_matrix:
        last = result.refinement_trace[-1]
        form = assemble_form(setup.geometry, cs, setup.measure, setup.potential, last.L, last.h,
                             count_controls.resolution)
        write_matrix(out_dir / "matrix.txt", matrix_coordinates(form), form.matrix.shape)


def run_count1d(config: RunConfig, setup: RunSetup, args: argparse.Namespace, out_dir: Path) -> None:
    controls = setup.controls
    cs = first_two_eigenpairs(setup.geometry, controls.tolerance)
    L, h = controls.L, controls.h
    nu = build_nu(setup.potential, cs, setup.measure, (-L, L), controls.quadrature_resolution)
    n_max = controls.n_max if controls.n_max is not None else default_window_count(L)
    f_terms, flagged = dyadic_terms(nu, n_max)
    n_neg = count_negative_1d(nu, L, h)
    rhs_1d = explicit_rhs(f_terms)
    report = Count1DReport(
        command="count1d",
        n_neg=n_neg, L=L, h=h, coupling=2.0,
        rhs_1d=rhs_1d, rhs_1d_alt=explicit_rhs(f_terms, C_F_ALT),
        sandwich_holds=n_neg <= rhs_1d, deficit=nu.deficit,
        windows=window_rows(f_terms, flagged),
    )
    write_json(out_dir / "report.json", report)
    write_csv(out_dir / "windows.csv", _dump_rows(report.windows), WINDOW_FIELDS)
    if not report.sandwich_holds:
        raise AssertionFailure(f"one-dimensional count {n_neg} exceeds 1 + 7.61 * sum sqrt(F_n) = {rhs_1d:.6g}")


def run_sweep(config: RunConfig, setup: RunSetup, args: argparse.Namespace, out_dir: Path) -> None:
    controls = setup.controls
    cs = first_two_eigenpairs(setup.geometry, controls.tolerance)
    result = gamma_sweep(setup.potential, setup.measure, cs, controls.gammas, controls.count_controls(),
                         controls.c_M, controls.C_M, controls.n_max)
    rows = [
        SweepRow(gamma=p.gamma, n_oracle=p.n_oracle, n_oracle_1d=p.n_oracle_1d, rhs_1d=p.rhs_1d,
                 rhs_total=p.rhs_total, windows_above=p.windows_above, stable=p.stable,
                 ratio=p.n_oracle / p.gamma)
        for p in result.points
    ]
    spread = 0.0
    if len(rows) >= 2 and max(rows[-1].ratio, rows[-2].ratio) > 0:
        spread = abs(rows[-1].ratio - rows[-2].ratio) / max(rows[-1].ratio, rows[-2].ratio)
    report = SweepReport(command="sweep", points=rows, slope=result.slope, weak_l1=result.weak_l1,
                         ratio_spread=spread)
    write_json(out_dir / "report.json", report)
    write_csv(out_dir / "trace.csv", _dump_rows(rows), SWEEP_FIELDS)


def run_quadrature(config: RunConfig, setup: RunSetup, args: argparse.Namespace, out_dir: Path) -> None:
    box = setup.measure.bounding_box()
    resolution = setup.controls.quadrature_resolution
    rule = quadrature(setup.measure, Rectangle(box.x1_lo, box.x1_hi, 0.0, setup.geometry.a), resolution)
    write_quadrature(out_dir / "quadrature.csv", rule)
    write_json(out_dir / "report.json",
               QuadratureReport(command="quadrature", nodes=len(rule), total_mass=rule.total, resolution=resolution))


def run_norms(config: RunConfig, setup: RunSetup, args: argparse.Namespace, out_dir: Path) -> None:
    a = setup.geometry.a
    resolution = setup.controls.quadrature_resolution
    rows = []
    for n in cell_range(setup.measure, setup.controls.L):
        rule = cell_rule(setup.measure, n, a, resolution)
        values = setup.potential(rule.nodes[:, 0], rule.nodes[:, 1]) if len(rule) else rule.weights
        triple = norm_triple(values, rule.weights)
        rows.append(NormRow(n=n, mass=rule.total, **triple))
    write_json(out_dir / "report.json", NormsReport(command="norms", cells=rows))
    write_csv(out_dir / "norms.csv", _dump_rows(rows), ["n", "mass", "luxemburg", "orlicz", "average"])


def run_verify(config: Optional[RunConfig], args: argparse.Namespace, out_dir: Path) -> None:
    battery = args.battery or (config.controls.battery if config else "quick")
    seed = args.seed if args.seed is not None else (config.controls.seed if config else 0)
    executions = battery_executor.run(full=battery == "full", seed=seed, names=args.check or None)
    rows = [CheckRow(name=e.name, status=e.status.value, detail=e.detail, execution_time=e.execution_time)
            for e in executions]
    passed = all(e.passed for e in executions)
    # timings only in checks.csv
    report = VerifyReport(command="verify", battery=battery, passed=passed,
                          checks=[r.model_copy(update={"execution_time": None}) for r in rows])
    write_json(out_dir / "report.json", report)
    write_csv(out_dir / "checks.csv", _dump_rows(rows), ["name", "status", "detail", "execution_time"])

    if not args.quiet:
        width = max(len(r.name) for r in rows) if rows else 0
        for r in rows:
            print(f"{r.name:<{width}}  {r.status.upper():<7}  {r.detail}")
        print(f"{'PASSED' if passed else 'FAILED'}: {sum(e.passed for e in executions)}/{len(rows)} checks")
    if not passed:
        failed = [e.name for e in executions if not e.passed]
        raise AssertionFailure(f"verification checks failed: {', '.join(failed)}")


COMMANDS: Dict[str, Callable[[RunConfig, RunSetup, argparse.Namespace, Path], None]] = {
    "cross-section": run_cross_section,
    "ahlfors": run_ahlfors,
    "bound": run_bound,
    "count": run_count,
    "count1d": run_count1d,
    "sweep": run_sweep,
    "quadrature": run_quadrature,
    "norms": run_norms,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strip-spectrum",
        description="Eigenvalue-count bounds for Schroedinger operators on strips, with numerical oracles",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run configuration (.toml or .json)")
    common.add_argument("--out", type=Path, default=None, help="Output directory (default: STRIP_OUTPUT_DIR/<command>)")
    common.add_argument("--seed", type=int, default=None, help="Override controls.seed")
    common.add_argument("--quiet", action="store_true", help="Only log warnings and errors")

    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "count":
            p.add_argument("--dump-matrix", action="store_true", help="Write the final form in coordinate format")
    verify = sub.add_parser("verify", parents=[common])
    verify.add_argument("--battery", choices=["quick", "full"], default=None, help="Override controls.battery")
    verify.add_argument("--check", action="append", default=[], help="Run only this check (repeatable)")
    return parser


def run(args: argparse.Namespace) -> int:
    """
    Execute one parsed command and map failures to exit codes.

    Returns:
        0 on success, the exception's exit code otherwise
    """
    out_dir = args.out if args.out is not None else Path(settings.output_dir) / args.command
    try:
        settings.validate()
        config = RunConfig.from_file(args.config) if args.config is not None else None
        if config is not None and args.seed is not None:
            config = config.model_copy(update={"controls": config.controls.model_copy(update={"seed": args.seed})})
        if args.command == "verify":
            run_verify(config, args, out_dir)
        else:
            setup = config.resolve(Path(args.config).parent)
            COMMANDS[args.command](config, setup, args, out_dir)
        logger.info(f"{args.command} finished; artifacts in {out_dir}")
        return 0
    except StripSpectrumError as e:
        logger.error(f"{type(e).__name__}: {e}")
        write_error_report(out_dir, args.command, e, e.exit_code)
        return e.exit_code
    except ValueError as e:
        logger.error(f"ValueError: {e}")
        write_error_report(out_dir, args.command, e, 1)
        return 1
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}: {e}")
        write_error_report(out_dir, args.command, e, 1)
        return 1


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.quiet)
    if args.command != "verify" and args.config is None:
        parser.error(f"{args.command} requires --config")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
