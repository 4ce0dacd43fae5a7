"""Command line interface: verify, shapes, oracle, reduce."""
from __future__ import annotations

import json
import shlex
import sys

import click

from . import eltl, reduction, smt, verifier
from .counter import Configuration, NotApplicable, Transition
from .eltl import SpecError
from .reduction import ReductionError
from .ta import TaError, parse_ta, validate_ta

EXIT_VERIFIED = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_ERROR = 3


def _load_ta(path: str):
    with open(path, "r", encoding="utf-8") as handle:
        ta = parse_ta(handle.read())
    problems = validate_ta(ta)
    if problems:
        raise TaError("; ".join(problems))
    return ta


def _load_formula(ta, spec_path: str, name: str):
    with open(spec_path, "r", encoding="utf-8") as handle:
        specs = eltl.parse_spec_file(handle.read(), ta)
    if name not in specs:
        raise SpecError(f"no specification named {name!r} in {spec_path} "
                        f"(available: {', '.join(sorted(specs))})")
    return specs[name]


def _solver_cmd(option: str | None):
    if option is None:
        return smt.default_solver_cmd()
    if option in ("builtin", "bundled"):
        return None
    return shlex.split(option)


def _parse_assignments(text: str, what: str) -> dict[str, int]:
    out: dict[str, int] = {}
    if not text:
        return out
    for part in text.split(","):
        if "=" not in part:
            raise click.UsageError(f"bad {what} item {part!r}, expected k=v")
        key, value = part.split("=", 1)
        out[key.strip()] = int(value.strip())
    return out


@click.group()
def main() -> None:
    """Parameterized model checking of threshold-guarded fault-tolerant
    distributed algorithms."""


@main.command()
@click.option("--ta", "ta_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True))
@click.option("--name", required=True, help="specification name to check")
@click.option("--solver", default=None,
              help="solver command (default: z3 -in if available, else the "
                   "bundled solver); 'builtin' forces the bundled solver")
@click.option("--jobs", default=1, show_default=True)
@click.option("--reps", default=3, show_default=True,
              help="rule repetitions per schedule segment")
@click.option("--smt-timeout", default=120.0, show_default=True)
@click.option("--dump-smt", "dump_dir", default=None,
              type=click.Path(), help="write one .smt2 file per shape")
@click.option("--json", "json_path", default=None, type=click.Path(),
              help="write the verdict as JSON")
@click.option("--report", "report_dir", default=None, type=click.Path(),
              help="write report.json, frames.csv and counters.png")
@click.option("--params", default="",
              help="pin parameters, e.g. n=4,t=1,f=1")
@click.option("--all-shapes", is_flag=True,
              help="check every shape even after a counterexample is found")
def verify(ta_path, spec_path, name, solver, jobs, reps, smt_timeout,
           dump_dir, json_path, report_dir, params, all_shapes):
    """Prove the specification for all parameter values, or find a lasso."""
    try:
        ta = _load_ta(ta_path)
        phi = _load_formula(ta, spec_path, name)
        pin = _parse_assignments(params, "parameter") or None
        verdict = verifier.verify(
            ta, phi, solver_cmd=_solver_cmd(solver), reps=reps,
            timeout=smt_timeout, dump_dir=dump_dir, pin=pin, jobs=jobs,
            short_circuit=not all_shapes)
    except (TaError, SpecError, smt.SolverError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(verifier.explain(verdict))
    if json_path:
        with open(json_path, "w", encoding="utf-8") as handle:
            json.dump(verifier.verdict_json(verdict), handle, indent=2)
            handle.write("\n")
    if report_dir:
        verifier.write_report(verdict, report_dir)
        click.echo(f"report written to {report_dir}")
    sys.exit({"Verified": EXIT_VERIFIED,
              "Counterexample": EXIT_COUNTEREXAMPLE}.get(
                  verdict.kind, EXIT_INCONCLUSIVE))


@main.command()
@click.option("--ta", "ta_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True))
@click.option("--name", required=True)
@click.option("--solver", default=None)
@click.option("--smt-timeout", default=120.0, show_default=True)
def shapes(ta_path, spec_path, name, solver, smt_timeout):
    """List the lasso shapes enumerated for a specification."""
    try:
        ta = _load_ta(ta_path)
        phi = _load_formula(ta, spec_path, name)
        ctx = verifier.build_shapes(ta, phi, _solver_cmd(solver), smt_timeout)
    except (TaError, SpecError, smt.SolverError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(f"canonical form: {eltl.render_canonical(ctx.canon)}")
    click.echo(f"cut graph vertices: {' '.join(ctx.cut.vertices)}")
    click.echo(f"guard order edges: " + (", ".join(
        f"{a.render()} -> {b.render()}" for a, b in ctx.threshold.edges)
        or "-"))
    click.echo(f"{len(ctx.shapes)} shapes:")
    for i, shape in enumerate(ctx.shapes):
        pretty = [ctx.merged.guard_of[v].render()
                  if v in ctx.merged.guard_of else v for v in shape]
        click.echo(f"  {i}: {' | '.join(pretty)}")
    sys.exit(EXIT_VERIFIED)


@main.command()
@click.option("--ta", "ta_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True))
@click.option("--name", required=True)
@click.option("--params", required=True, help="e.g. n=4,t=1,f=1")
@click.option("--budget", default=10 ** 6, show_default=True,
              help="maximum number of explored configurations")
def oracle(ta_path, spec_path, name, params, budget):
    """Explicit-state search for a lasso witness under fixed parameters."""
    try:
        ta = _load_ta(ta_path)
        phi = _load_formula(ta, spec_path, name)
        values = _parse_assignments(params, "parameter")
        missing = [p for p in ta.params if p not in values]
        if missing:
            raise click.UsageError(f"missing parameters: {missing}")
        p = tuple(values[q] for q in ta.params)
        lasso = verifier.oracle_for_formula(ta, p, phi, budget)
    except (TaError, SpecError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    if lasso is None:
        click.echo("no witness: the specification holds for these parameters")
        sys.exit(EXIT_VERIFIED)
    click.echo(json.dumps(lasso.to_json(ta), indent=2))
    sys.exit(EXIT_COUNTEREXAMPLE)


@main.command()
@click.option("--ta", "ta_path", required=True, type=click.Path(exists=True))
@click.option("--params", required=True, help="e.g. n=4,t=1,f=1")
@click.option("--initial", required=True,
              help="starting counters, e.g. l0=2,l1=1 (shared vars start 0)")
@click.option("--schedule", required=True,
              help="comma-separated rule names, each with factor 1")
@click.option("--locs", default="",
              help="location set for the invariant-preserving modes")
@click.option("--mode", default="srep", show_default=True,
              type=click.Choice(["srep", "disjunction", "allzero"]))
def reduce(ta_path, params, initial, schedule, locs, mode):
    """Compute a representative of a steady schedule."""
    try:
        ta = _load_ta(ta_path)
        values = _parse_assignments(params, "parameter")
        p = tuple(values.get(q, 0) for q in ta.params)
        counters = _parse_assignments(initial, "counter")
        kappa = tuple(counters.get(loc, 0) for loc in ta.locations)
        sigma = Configuration(kappa, (0,) * len(ta.shared), p)
        by_name = {r.name: r for r in ta.rules}
        sched = tuple(Transition(by_name[n.strip()], 1)
                      for n in schedule.split(","))
        loc_set = frozenset(x.strip() for x in locs.split(",") if x.strip())
        if mode == "srep":
            out = reduction.srep(ta, sigma, sched)
            cert = None
        elif mode == "allzero":
            out = reduction.repr_all_zero(ta, sigma, sched, loc_set)
            cert = None
        else:
            out, cert = reduction.repr_disjunction(
                ta, sigma, sched, loc_set, with_certificate=True)
    except (TaError, KeyError, NotApplicable, ReductionError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo("input:  " + " ".join(f"({t.rule.name},{t.factor})"
                                     for t in sched))
    click.echo("output: " + (" ".join(f"({t.rule.name},{t.factor})"
                                      for t in out) or "(empty)"))
    if cert is not None:
        click.echo(f"construction: {cert.construction}"
                   + (f" thread types: {''.join(cert.thread_types)}"
                      if cert.thread_types else ""))
    sys.exit(EXIT_VERIFIED)


if __name__ == "__main__":
    main()
