"""Parameterized verification: enumerate lasso shapes from the merged
cut/threshold graph, discharge each shape as one bounded SMT query, and
decode models into re-simulated lasso counterexamples."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

from . import eltl, guards, smt
from .counter import (Configuration, Transition, WitnessLasso,
                      apply_schedule, oracle_check, _idle_loop)
from .eltl import LOOP_END, LOOP_START, eval_on_lasso, eval_prop
from .ta import ThresholdAutomaton, flow_classes


class VerifierError(Exception):
    pass


# ---------------------------------------------------------------------------
# Shape enumeration
# ---------------------------------------------------------------------------

@dataclass
class ShapeContext:
    ta: ThresholdAutomaton
    phi: eltl.Formula
    canon: eltl.Canonical
    tree: eltl.SyntaxTree
    cut: eltl.CutGraph
    threshold: guards.ThresholdGraph
    merged: guards.MergedGraph
    shapes: list[tuple[str, ...]]


def build_shapes(ta: ThresholdAutomaton, phi: eltl.Formula,
                 solver_cmd: list[str] | None = None,
                 timeout: float = 60.0) -> ShapeContext:
    canon = eltl.canonicalize(phi)
    tree = eltl.syntax_tree(canon)
    cut = eltl.cut_graph(tree)
    th = guards.threshold_graph(ta, solver_cmd, timeout)
    merged = guards.merge_graphs(cut, th)
    orderings = list(eltl.topological_orderings(merged.vertices,
                                                merged.edges))
    shapes = guards.dedup_shapes(orderings, merged.guard_of)
    # most guard toggles first: shapes with richer contexts admit the most
    # runs, so satisfiable queries are found early and their models exhibit
    # the full progression of threshold crossings
    shapes.sort(key=lambda s: -sum(1 for v in s if v in merged.guard_of))
    return ShapeContext(ta, phi, canon, tree, cut, th, merged, shapes)


# ---------------------------------------------------------------------------
# One shape -> one SMT query
# ---------------------------------------------------------------------------

@dataclass
class ShapeResult:
    index: int
    vertices: tuple[str, ...]
    status: str                      # 'sat' | 'unsat' | 'unknown' | 'skipped'
    lasso: WitnessLasso | None = None
    smt_file: str | None = None

    def guard_toggles(self, ctx: ShapeContext) -> list[str]:
        return [ctx.merged.guard_of[v].render() for v in self.vertices
                if v in ctx.merged.guard_of]


def _unlocked_rules(ta: ThresholdAutomaton, flow, th: guards.ThresholdGraph,
                    risen: set, fallen: set) -> list:
    out = []
    for cls in flow.linear_order:
        for idx in sorted(flow.members[cls]):
            rule = ta.rules[idx]
            if all(th.rep_of[g] in risen for g in rule.lower) and \
                    all(th.rep_of[g] not in fallen for g in rule.upper):
                out.append(rule)
    return out


def check_shape(ctx: ShapeContext, index: int,
                solver_cmd: list[str] | None = None, reps: int = 3,
                timeout: float = 60.0, dump_dir: str | None = None,
                pin: dict[str, int] | None = None) -> ShapeResult:
    ta = ctx.ta
    shape = ctx.shapes[index]
    flow = flow_classes(ta)
    builder = smt.QueryBuilder(ta)
    builder.init()
    if pin:
        builder.pin_params(pin)

    risen: set = set()
    fallen: set = set()
    invariants: list[tuple[eltl.Formula, int]] = []
    if ctx.canon.prop != eltl.TRUE and "0" not in ctx.cut.f_formula:
        builder.comment("root proposition")
        builder.assert_formula(ctx.canon.prop, 0)
    if ctx.canon.g_child is not None and "0" not in ctx.cut.f_formula:
        invariants.append((ctx.canon.g_child.prop, 0))

    def push_segment() -> None:
        for _ in range(reps):
            for rule in _unlocked_rules(ta, flow, ctx.threshold,
                                        risen, fallen):
                builder.add_step(rule, conditional_uppers=True)

    fs_frame: int | None = None
    for v in shape:
        if v == LOOP_START:
            builder.comment("loop start")
            push_segment()
            fs_frame = builder.frame
        elif v == LOOP_END:
            push_segment()
            builder.loop_closure(fs_frame)
        elif v in ctx.merged.guard_of:
            g = ctx.merged.guard_of[v]
            builder.comment(f"guard toggle: {g.render()}")
            push_segment()
            builder.assert_guard(g, builder.frame, positive=g.is_lower)
            if g.is_lower:
                risen.add(g)
            else:
                fallen.add(g)
        else:
            psi = ctx.cut.f_formula[v]
            builder.comment(f"cut point for F-vertex {v}")
            push_segment()
            cut_frame = builder.frame
            if psi.prop != eltl.TRUE:
                builder.assert_formula(psi.prop, cut_frame)
            if psi.g_child is not None:
                start = cut_frame if fs_frame is None else fs_frame
                invariants.append((psi.g_child.prop, start))

    builder.comment("G-obligations")
    for prop, start in invariants:
        if prop == eltl.TRUE:
            continue
        for frame in range(start, builder.frame + 1):
            builder.assert_formula(prop, frame)

    script = builder.script()
    smt_file = None
    if dump_dir:
        os.makedirs(dump_dir, exist_ok=True)
        smt_file = os.path.join(dump_dir, f"shape_{index:03d}.smt2")
        with open(smt_file, "w", encoding="utf-8") as handle:
            handle.write(script)

    status, model = smt.run_solver(script, solver_cmd, timeout)
    lasso = None
    if status == "sat":
        lasso = _decode(ctx, builder, model, fs_frame)
    return ShapeResult(index, shape, status, lasso, smt_file)


def _decode(ctx: ShapeContext, builder: smt.QueryBuilder,
            model: dict[str, int], fs_frame: int) -> WitnessLasso:
    ta = ctx.ta
    p = tuple(model.get(f"P_{name}", 0) for name in ta.params)
    kappa = tuple(model.get(builder.kappa(0, loc), 0)
                  for loc in ta.locations)
    g0 = tuple(model.get(builder.shared(0, var), 0) for var in ta.shared)
    sigma0 = Configuration(kappa, g0, p)

    # replay every accelerated step and compare with the model frames
    schedule = tuple(Transition(s.rule, model.get(builder.delta(s.index), 0))
                     for s in builder.steps)
    path = apply_schedule(ta, sigma0, schedule)
    for step, cfg in zip(builder.steps, path.configs[1:]):
        want_kappa = tuple(model.get(builder.kappa(step.frame, loc), 0)
                           for loc in ta.locations)
        want_g = tuple(model.get(builder.shared(step.frame, var), 0)
                       for var in ta.shared)
        if cfg.kappa != want_kappa or cfg.g != want_g:
            raise VerifierError(
                f"model replay diverged at frame {step.frame}")

    prefix = tuple(Transition(s.rule, f)
                   for s, f in ((s, model.get(builder.delta(s.index), 0))
                                for s in builder.steps)
                   if f > 0 and s.frame <= fs_frame)
    loop = tuple(Transition(s.rule, f)
                 for s, f in ((s, model.get(builder.delta(s.index), 0))
                              for s in builder.steps)
                 if f > 0 and s.frame > fs_frame)
    if not loop:
        final = apply_schedule(ta, sigma0, prefix).final
        loop = _idle_loop(ta, final)
    lasso = WitnessLasso(sigma0, prefix, loop)
    if not eval_on_lasso(ta, sigma0, prefix, loop, ctx.phi):
        raise VerifierError("decoded lasso does not satisfy the formula")
    return lasso


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    kind: str                    # 'Verified' | 'Counterexample' | 'Inconclusive'
    results: list[ShapeResult]
    counterexample: ShapeResult | None
    context: ShapeContext


def verify(ta: ThresholdAutomaton, phi: eltl.Formula,
           solver_cmd: list[str] | None = None, reps: int = 3,
           timeout: float = 60.0, dump_dir: str | None = None,
           pin: dict[str, int] | None = None, jobs: int = 1,
           short_circuit: bool = True) -> Verdict:
    ctx = build_shapes(ta, phi, solver_cmd, timeout)
    results: list[ShapeResult] = []

    def run(index: int) -> ShapeResult:
        return check_shape(ctx, index, solver_cmd, reps, timeout,
                           dump_dir, pin)

    indices = list(range(len(ctx.shapes)))
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, indices))
    else:
        for index in indices:
            result = run(index)
            results.append(result)
            if short_circuit and result.status == "sat":
                results.extend(
                    ShapeResult(i, ctx.shapes[i], "skipped")
                    for i in indices[index + 1:])
                break

    counterexample = next((r for r in results if r.status == "sat"), None)
    if counterexample is not None:
        kind = "Counterexample"
    elif all(r.status == "unsat" for r in results):
        kind = "Verified"
    else:
        kind = "Inconclusive"
    return Verdict(kind, results, counterexample, ctx)


# ---------------------------------------------------------------------------
# Oracle entry point
# ---------------------------------------------------------------------------

def oracle_for_formula(ta: ThresholdAutomaton, p: tuple[int, ...],
                       phi: eltl.Formula, budget: int = 10 ** 6
                       ) -> WitnessLasso | None:
    pattern = eltl.classify_pattern(phi)
    lasso = oracle_check(
        ta, p, pattern.kind,
        lambda s: eval_prop(ta, s, pattern.p),
        lambda s: eval_prop(ta, s, pattern.q),
        lambda s: eval_prop(ta, s, pattern.r),
        budget)
    if lasso is not None and not eval_on_lasso(ta, lasso.start, lasso.prefix,
                                               lasso.loop, phi):
        raise VerifierError("oracle produced an invalid lasso")
    return lasso


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def verdict_json(verdict: Verdict) -> dict:
    ta = verdict.context.ta
    out = {
        "automaton": ta.name,
        "formula": eltl.render(verdict.context.phi),
        "verdict": verdict.kind,
        "shapes": [
            {
                "index": r.index,
                "vertices": list(r.vertices),
                "guards": r.guard_toggles(verdict.context),
                "status": r.status,
            }
            for r in verdict.results
        ],
    }
    if verdict.counterexample is not None and \
            verdict.counterexample.lasso is not None:
        out["counterexample"] = {
            "shape": verdict.counterexample.index,
            "lasso": verdict.counterexample.lasso.to_json(ta),
        }
    return out


def write_report(verdict: Verdict, out_dir: str) -> None:
    """Write report.json, frames.csv, and counters.png into out_dir."""
    import csv

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    ta = verdict.context.ta
    with open(os.path.join(out_dir, "report.json"), "w",
              encoding="utf-8") as handle:
        json.dump(verdict_json(verdict), handle, indent=2)
        handle.write("\n")

    csv_path = os.path.join(out_dir, "frames.csv")
    png_path = os.path.join(out_dir, "counters.png")
    cx = verdict.counterexample
    if cx is not None and cx.lasso is not None:
        states = cx.lasso.configs(ta)
        with open(csv_path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["state"] + list(ta.locations) + list(ta.shared))
            for i, s in enumerate(states):
                writer.writerow([i] + list(s.kappa) + list(s.g))
        fig, ax = plt.subplots(figsize=(8, 4.5))
        xs = range(len(states))
        for li, loc in enumerate(ta.locations):
            ax.plot(xs, [s.kappa[li] for s in states], marker="o",
                    label=f"kappa[{loc}]")
        for vi, var in enumerate(ta.shared):
            ax.plot(xs, [s.g[vi] for s in states], marker="s",
                    linestyle="--", label=var)
        ax.axvline(len(cx.lasso.prefix), color="gray", linestyle=":",
                   label="loop start")
        ax.set_xlabel("configuration")
        ax.set_ylabel("count")
        ax.set_title(f"{ta.name}: counterexample lasso (shape {cx.index})")
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        fig.savefig(png_path, dpi=120)
        plt.close(fig)
    else:
        with open(csv_path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["shape", "guards", "status"])
            for r in verdict.results:
                writer.writerow([r.index,
                                 " ; ".join(r.guard_toggles(verdict.context)),
                                 r.status])
        fig, ax = plt.subplots(figsize=(8, 3.5))
        statuses = [r.status for r in verdict.results]
        colors = {"unsat": "tab:green", "sat": "tab:red",
                  "unknown": "tab:orange", "skipped": "tab:gray"}
        ax.bar([str(r.index) for r in verdict.results],
               [1] * len(verdict.results),
               color=[colors.get(s, "tab:blue") for s in statuses])
        for i, s in enumerate(statuses):
            ax.text(i, 0.5, s, ha="center", va="center", rotation=90)
        ax.set_xlabel("shape")
        ax.set_yticks([])
        ax.set_title(f"{ta.name}: {verdict.kind}")
        fig.tight_layout()
        fig.savefig(png_path, dpi=120)
        plt.close(fig)


def explain(verdict: Verdict) -> str:
    ta = verdict.context.ta
    lines = [f"automaton: {ta.name}",
             f"formula:   {eltl.render(verdict.context.phi)}",
             f"verdict:   {verdict.kind}",
             f"shapes:    {len(verdict.results)}"]
    for r in verdict.results:
        guards_txt = ", ".join(r.guard_toggles(verdict.context)) or "-"
        lines.append(f"  shape {r.index}: [{' '.join(r.vertices)}] "
                     f"guards({guards_txt}) -> {r.status}")
    cx = verdict.counterexample
    if cx is not None and cx.lasso is not None:
        lasso = cx.lasso
        lines.append("counterexample (re-simulated):")
        lines.append(f"  params: {dict(zip(ta.params, lasso.start.p))}")
        lines.append("  prefix: " + " ".join(
            f"({t.rule.name},{t.factor})" for t in lasso.prefix))
        lines.append("  loop:   " + " ".join(
            f"({t.rule.name},{t.factor})" for t in lasso.loop))
        for i, s in enumerate(lasso.configs(ta)):
            counters = ", ".join(f"{loc}={k}"
                                 for loc, k in zip(ta.locations, s.kappa))
            shared = ", ".join(f"{v}={x}"
                               for v, x in zip(ta.shared, s.g))
            lines.append(f"  state {i}: {counters} | {shared}")
    return "\n".join(lines)
