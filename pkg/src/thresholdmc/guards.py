"""Guard contexts, the threshold order on guards, graph merging for shape
enumeration, and multiplier detection."""
from __future__ import annotations

from dataclasses import dataclass

from . import smt
from .counter import Configuration, Schedule, apply_schedule
from .eltl import LOOP_START, CutGraph
from .ta import BoolOp, Comparison, Guard, LinearExpr, ThresholdAutomaton


@dataclass(frozen=True)
class Context:
    """The set of lower guards that have risen (become true) and upper
    guards that have fallen (become false) in a configuration."""
    risen: frozenset[Guard]
    fallen: frozenset[Guard]


def context_of(ta: ThresholdAutomaton, sigma: Configuration) -> Context:
    env = ta.param_env(sigma.p)
    risen = frozenset(g for g in ta.lower_guards()
                      if g.holds(sigma.g[ta.shared_index(g.var)], env))
    fallen = frozenset(g for g in ta.upper_guards()
                       if not g.holds(sigma.g[ta.shared_index(g.var)], env))
    return Context(risen, fallen)


def is_steady(ta: ThresholdAutomaton, sigma: Configuration,
              schedule: Schedule) -> bool:
    """A schedule is steady if every configuration along it has the same
    guard context as the starting one."""
    path = apply_schedule(ta, sigma, schedule)
    first = context_of(ta, sigma)
    return all(context_of(ta, cfg) == first for cfg in path.configs[1:])


# ---------------------------------------------------------------------------
# Threshold graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdGraph:
    """Partial order on toggle events of guard representatives. An edge
    (g1, g2) means g1 toggles no later than g2 on every run admitted by
    the resilience condition."""
    representatives: tuple[Guard, ...]
    rep_of: dict[Guard, Guard]
    edges: tuple[tuple[Guard, Guard], ...]


def _guard_vars(ta: ThresholdAutomaton, guards: list[Guard]) -> list[str]:
    names = [f"P_{p}" for p in ta.params]
    seen = set(names)
    for g in guards:
        sym = f"V_{g.var}"
        if sym not in seen:
            names.append(sym)
            seen.add(sym)
    return names


def _base_assertions(ta: ThresholdAutomaton, env: dict[str, str]
                     ) -> list[str]:
    out = [f"(>= {env[p]} 0)" for p in ta.params]
    if ta.resilience != BoolOp("and", ()):
        out.append(smt.bool_term(ta.resilience, env))
    return out


def _toggle_entails(ta: ThresholdAutomaton, g1: Guard, g2: Guard,
                    cmd: list[str] | None, timeout: float) -> bool:
    """True iff in every admissible configuration where g2 has toggled,
    g1 has toggled too (same-polarity guards only)."""
    env = {p: f"P_{p}" for p in ta.params}
    for g in (g1, g2):
        env.setdefault(g.var, f"V_{g.var}")
    assertions = _base_assertions(ta, env)
    for g in {g1.var, g2.var}:
        assertions.append(f"(>= {env[g]} 0)")
    if g1.is_lower:
        # toggled == guard holds
        assertions.append(smt.guard_term(g2, env, positive=True))
        assertions.append(smt.guard_term(g1, env, positive=False))
    else:
        # toggled == guard has fallen (is false)
        assertions.append(smt.guard_term(g2, env, positive=False))
        assertions.append(smt.guard_term(g1, env, positive=True))
    variables = _guard_vars(ta, [g1, g2])
    return smt.check_entailment(assertions, variables, cmd, timeout)


def threshold_graph(ta: ThresholdAutomaton, cmd: list[str] | None = None,
                    timeout: float = 60.0) -> ThresholdGraph:
    lowers = sorted(ta.lower_guards())
    uppers = sorted(ta.upper_guards())
    rep_of: dict[Guard, Guard] = {}
    reps: list[Guard] = []
    edges: list[tuple[Guard, Guard]] = []
    for group in (lowers, uppers):
        if not group:
            continue
        entails = {}
        for a in group:
            for b in group:
                if a is not b:
                    entails[(a, b)] = _toggle_entails(ta, a, b, cmd, timeout)
        group_reps: list[Guard] = []
        for g in group:
            rep = None
            for r in group_reps:
                if entails[(g, r)] and entails[(r, g)]:
                    rep = r
                    break
            if rep is None:
                group_reps.append(g)
                rep = g
            rep_of[g] = rep
        for a in group_reps:
            for b in group_reps:
                if a is not b and entails[(a, b)]:
                    edges.append((a, b))
        reps.extend(group_reps)
    return ThresholdGraph(tuple(reps), rep_of, tuple(edges))


# ---------------------------------------------------------------------------
# Merging with the cut graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MergedGraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    guard_of: dict[str, Guard]  # merged-vertex name -> guard representative


def merge_graphs(cut: CutGraph, th: ThresholdGraph) -> MergedGraph:
    guard_name = {g: f"guard{i}" for i, g in enumerate(th.representatives)}
    vertices = tuple(cut.vertices) + tuple(guard_name[g]
                                           for g in th.representatives)
    edges = list(cut.edges)
    for a, b in th.edges:
        edges.append((guard_name[a], guard_name[b]))
    guard_of = {name: g for g, name in guard_name.items()}
    return MergedGraph(vertices, tuple(edges), guard_of)


def dedup_shapes(orderings: list[tuple[str, ...]],
                 guard_of: dict[str, Guard]) -> list[tuple[str, ...]]:
    """Guard toggles after the loop start cannot affect the lasso (the
    loop context is fixed), so orderings differing only there collapse."""
    seen: set[tuple[str, ...]] = set()
    shapes: list[tuple[str, ...]] = []
    for order in orderings:
        out = []
        in_loop = False
        for v in order:
            if v == LOOP_START:
                in_loop = True
            if v in guard_of and in_loop:
                continue
            out.append(v)
        key = tuple(out)
        if key not in seen:
            seen.add(key)
            shapes.append(key)
    return shapes


# ---------------------------------------------------------------------------
# Multiplier detection
# ---------------------------------------------------------------------------

def _scaled_guard_assert(g: Guard, mu: int, env: dict[str, str]) -> str:
    """The guard evaluated at the configuration scaled by mu: the shared
    variable and the parameters are multiplied, the constant offset is
    not."""
    lhs = f"(* {mu} {env[g.var]})"
    scaled_bound = LinearExpr(g.bound.const,
                              tuple((n, c * mu) for n, c in g.bound.coeffs))
    rhs = smt.lin_term(scaled_bound, env)
    if g.is_lower:
        return f"(>= {lhs} {rhs})"
    return f"(< {lhs} {rhs})"


def _scale_bool(expr, mu: int):
    if isinstance(expr, Comparison):
        return Comparison(expr.lhs.scale_vars(mu), expr.op,
                          expr.rhs.scale_vars(mu))
    return BoolOp(expr.op, tuple(_scale_bool(a, mu) for a in expr.args))


def _mu_works(ta: ThresholdAutomaton, mu: int, cmd: list[str] | None,
              timeout: float) -> bool:
    env = {p: f"P_{p}" for p in ta.params}
    # resilience condition must be closed under scaling
    rc_assertions = _base_assertions(ta, env)
    if ta.resilience != BoolOp("and", ()):
        rc_assertions.append(
            smt.bool_term(smt.negate_bool(_scale_bool(ta.resilience, mu)),
                          env))
        if not smt.check_entailment(rc_assertions, _guard_vars(ta, []),
                                    cmd, timeout):
            return False
    # every guard must be preserved by scaling
    for g in sorted(set(ta.lower_guards()) | set(ta.upper_guards())):
        genv = dict(env)
        genv[g.var] = f"V_{g.var}"
        assertions = _base_assertions(ta, genv)
        assertions.append(f"(>= {genv[g.var]} 0)")
        assertions.append(smt.guard_term(g, genv, positive=True))
        assertions.append(f"(not {_scaled_guard_assert(g, mu, genv)})")
        if not smt.check_entailment(assertions, _guard_vars(ta, [g]),
                                    cmd, timeout):
            return False
    return True


def find_multiplier(ta: ThresholdAutomaton, cmd: list[str] | None = None,
                    candidates=range(2, 17), timeout: float = 60.0
                    ) -> int | None:
    """Smallest integer mu such that scaling any admissible configuration
    by mu preserves all guards and the resilience condition."""
    for mu in candidates:
        if _mu_works(ta, mu, cmd, timeout):
            return mu
    return None
