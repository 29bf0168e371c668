"""Command-line entry point: ``klab <command>``."""

from __future__ import annotations

import itertools
import json
import logging
import sys
from fractions import Fraction

import click

from .bounds import (
    HypothesisNotMet,
    RATE_THEOREMS,
    TheoremId,
    assess_boundedness,
    assess_gv_rate,
    gv_residual,
    pair_smoothness,
    rate_fit,
    simultaneous_bound_t25,
    skipped_report,
)
from .corpus import CorpusSelfCheckError, builtin_corpus, get_function
from .moduli import DEFAULT_GRID, majorant_of_modulus, modulus
from .operator_core import (
    KantorovichOp,
    central_moment_closed,
    central_moment_exact,
    kantorovich_apply,
    rational_str,
)
from .report import emit_report
from .suite import SuiteConfig, SuiteReport, assess_rates, evaluate_cell, run_suite


def _parse_n_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise click.BadParameter("n values must be positive integers")
    return values


def _parse_point(text: str):
    if "/" in text:
        return Fraction(text)
    return float(text)


def _lookup(fid: str):
    try:
        return get_function(fid)
    except KeyError as exc:
        raise click.BadParameter(str(exc.args[0]))


def _fmt_value(v) -> str:
    if isinstance(v, Fraction):
        return f"{rational_str(v)} ({float(v):.17g})"
    return format(float(v), ".17g")


def _print_record(r) -> None:
    rhs = "-" if r.rhs is None else f"{r.rhs:.10g}"
    lhs = "-" if r.lhs is None else f"{r.lhs:.10g}"
    g = f" x {r.g_function_id}" if r.g_function_id else ""
    order = f" r={r.r}" if r.r is not None else ""
    click.echo(f"{r.status:7s} {r.theorem_id:17s} {r.function_id}{g}{order} n={r.n} "
               f"lhs={lhs} rhs={rhs}" + (f"  [{r.note}]" if r.note else ""))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Verification laboratory for classical Kantorovich operators."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--fn", "fid", required=True, help="Corpus function id.")
@click.option("--x", "x", required=True, help="Point in [0,1]; 'p/q' evaluates exactly for polynomials.")
@click.option("--quadrature-order", type=int, default=8, show_default=True)
def apply(n, fid, x, quadrature_order):
    """Print K_n f(x)."""
    value = kantorovich_apply(KantorovichOp(n, quadrature_order), _lookup(fid), _parse_point(x))
    click.echo(_fmt_value(value))


@main.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--order", "m", type=int, required=True)
@click.option("--x", "x", required=True, help="Rational point p/q in [0,1].")
@click.option("--exact", is_flag=True, help="Also evaluate the defining sum in rationals.")
def moments(n, m, x, exact):
    """Central moment K_n((t-x)^m; x): closed form and exact sum."""
    point = Fraction(x)
    if m <= 4:
        click.echo(f"closed: {_fmt_value(central_moment_closed(n, m, point))}")
    if exact or m > 4:
        value = central_moment_exact(n, m, point)
        click.echo(f"exact:  {_fmt_value(value)}")
        if m <= 4:
            click.echo(f"agree:  {value == central_moment_closed(n, m, point)}")


@main.command("modulus")
@click.option("--fn", "fid", required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--t", "t", type=float, required=True)
@click.option("--grid", type=int, default=DEFAULT_GRID, show_default=True)
@click.option("--grid-only", is_flag=True, help="Ignore declared closed forms.")
def modulus_cmd(fid, k, t, grid, grid_only):
    """Modulus of smoothness omega_k(f; t)."""
    est = modulus(_lookup(fid), k, t, grid, closed=not grid_only)
    click.echo(f"{est.value:.17g}  (source={est.source}, grid={est.grid_points}, bias={est.bias})")


@main.command()
@click.option("--fn", "fid", required=True)
@click.option("--t", "t", type=float, required=True)
@click.option("--grid", type=int, default=DEFAULT_GRID, show_default=True)
def majorant(fid, t, grid):
    """Least concave majorant of omega_1(f; .) at t."""
    click.echo(format(majorant_of_modulus(_lookup(fid), t, grid), ".17g"))


@main.command()
@click.option("--theorem", "theorem", required=True, type=click.Choice([t.value for t in TheoremId]))
@click.option("--fn", "fid", default=None, help="Function id (default: whole corpus).")
@click.option("--gn", "gid", default=None, help="Second function for pair theorems.")
@click.option("--n-list", "n_list", required=True)
@click.option("--r", "r", type=int, default=None, help="Derivative order for SIMULTANEOUS_T25.")
@click.option("--grid", type=int, default=DEFAULT_GRID, show_default=True)
@click.option("--quadrature-order", type=int, default=8, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def check(theorem, fid, gid, n_list, r, grid, quadrature_order, csv_path):
    """Run one theorem check and print BoundReports."""
    tid = TheoremId(theorem)
    ns = _parse_n_list(n_list)
    cfg = SuiteConfig(n_values=ns, grid_points=grid, quadrature_order=quadrature_order)
    fs = [_lookup(fid)] if fid else builtin_corpus()
    if tid in (TheoremId.GRUSS_T42,) + RATE_THEOREMS:
        if gid:
            pairs = [(f, _lookup(gid)) for f in fs]
        elif fid:
            pairs = [(fs[0], fs[0])]
        else:
            pairs = list(itertools.combinations_with_replacement(fs, 2))
    else:
        pairs = [(f, None) for f in fs]
    records = []
    for f, g in pairs:
        for n in sorted(ns):
            if tid is TheoremId.SIMULTANEOUS_T25 and r is not None:
                try:
                    records.append(simultaneous_bound_t25(n, r, f, grid, quadrature_order))
                except HypothesisNotMet as exc:
                    records.append(skipped_report(tid, f.id, None, n, grid, str(exc)))
            else:
                records.append(evaluate_cell(tid, f, g, n, cfg))
    rates = []
    if tid in RATE_THEOREMS:
        by_id = {f.id: f for pair in pairs for f in pair if f is not None}
        rates = assess_rates(tid, records, by_id.__getitem__)
    for rec in records:
        _print_record(rec)
    for a in rates:
        click.echo(f"RATE    {a.theorem_id} {a.function_id} x {a.g_function_id}: class {a.rate_class} "
                   f"{'PASSED' if a.passed else 'FAILED'} ({a.note})")
    if csv_path:
        emit_report(SuiteReport({}, records, rates, []), "csv", csv_path)
    sys.exit(0 if all(rec.status != "FAILED" for rec in records) else 1)


@main.command()
@click.option("--pair", "pair", required=True, help="Two corpus ids, 'F,G'.")
@click.option("--n-list", "n_list", default="64,128,256,512,1024", show_default=True)
@click.option("--grid", type=int, default=DEFAULT_GRID, show_default=True)
@click.option("--quadrature-order", type=int, default=8, show_default=True)
def rates(pair, n_list, grid, quadrature_order):
    """Log-log rate fit of the Gruss-Voronovskaya residual for a pair."""
    parts = [p.strip() for p in pair.split(",")]
    if len(parts) != 2:
        raise click.BadParameter("--pair expects two ids separated by a comma")
    f, g = _lookup(parts[0]), _lookup(parts[1])
    try:
        samples = [(n, gv_residual(n, f, g, grid, quadrature_order)) for n in _parse_n_list(n_list)]
    except HypothesisNotMet as exc:
        raise click.ClickException(str(exc))
    for n, e in samples:
        click.echo(f"n={n:6d}  residual={e:.10g}")
    try:
        fit = rate_fit(samples)
        click.echo(f"slope={fit.slope:.6f} intercept={fit.intercept:.6f} r2={fit.r_squared:.6f}"
                   + (f" dropped={len(fit.dropped)}" if fit.dropped else ""))
    except ValueError as exc:
        click.echo(f"no fit: {exc}")
    smooth = pair_smoothness(f, g)
    verdicts = [assess_boundedness(samples, f.id, g.id)]
    if smooth >= 2:
        verdicts.insert(0, assess_gv_rate(samples, smooth, f.id, g.id))
    for a in verdicts:
        click.echo(f"{a.theorem_id}: class {a.rate_class} {'PASSED' if a.passed else 'FAILED'} ({a.note})")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON config; flags below override its fields.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json", show_default=True)
@click.option("--output", "output_path", default=None)
@click.option("--n-list", "n_list", default=None)
@click.option("--grid-points", type=int, default=None)
@click.option("--quadrature-order", type=int, default=None)
@click.option("--theorems", default=None, help="Comma-separated theorem ids.")
@click.option("--functions", default=None, help="Comma-separated corpus ids.")
@click.option("--mode", type=click.Choice(["float", "rational"]), default=None)
def suite(config_path, fmt, output_path, n_list, grid_points, quadrature_order, theorems,
          functions, mode):
    """Run the full verification suite and write a report."""
    data = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            data = json.load(fh)
    overrides = {
        "output_path": output_path,
        "n_values": _parse_n_list(n_list) if n_list else None,
        "grid_points": grid_points,
        "quadrature_order": quadrature_order,
        "theorems": theorems.split(",") if theorems else None,
        "functions": functions.split(",") if functions else None,
        "mode": mode,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = SuiteConfig.from_dict(data)
        report = run_suite(cfg)
    except (ValueError, KeyError, CorpusSelfCheckError) as exc:
        raise click.ClickException(str(exc))
    path = emit_report(report, fmt, cfg.output_path)
    s = report.summary()
    click.echo(f"records={s['records']} passed={s['passed']} failed={s['failed']} skipped={s['skipped']} "
               f"rate_checks_failed={s['rate_checks_failed']} "
               f"identity_checks_failed={s['identity_checks_failed']} -> {path}")
    for rec in report.failed_records:
        _print_record(rec)
    sys.exit(report.exit_code)


if __name__ == "__main__":
    main()
