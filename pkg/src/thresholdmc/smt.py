"""Deterministic SMT-LIB2 emission of bounded lasso queries and a driver
for external (or the bundled) QF_LIA solvers."""
from __future__ import annotations

import shutil
import subprocess
from dataclasses import dataclass

from . import eltl
from .ta import (BoolExpr, BoolOp, Comparison, Guard, LinearExpr, Rule,
                 ThresholdAutomaton)


class SolverError(Exception):
    pass


# ---------------------------------------------------------------------------
# Term rendering
# ---------------------------------------------------------------------------

def smt_int(value: int) -> str:
    return str(value) if value >= 0 else f"(- {-value})"


def lin_term(expr: LinearExpr, env: dict[str, str]) -> str:
    parts: list[str] = []
    for name, coeff in expr.coeffs:
        sym = env[name]
        parts.append(sym if coeff == 1 else f"(* {smt_int(coeff)} {sym})")
    if expr.const != 0 or not parts:
        parts.append(smt_int(expr.const))
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def comparison_term(cmp: Comparison, env: dict[str, str]) -> str:
    op = {"!=": "distinct"}.get(cmp.op, cmp.op)
    lhs, rhs = lin_term(cmp.lhs, env), lin_term(cmp.rhs, env)
    if cmp.op == "!=":
        return f"(not (= {lhs} {rhs}))"
    return f"({op} {lhs} {rhs})"


def bool_term(expr: BoolExpr, env: dict[str, str]) -> str:
    if isinstance(expr, Comparison):
        return comparison_term(expr, env)
    if isinstance(expr, BoolOp):
        if not expr.args:
            return "true" if expr.op == "and" else "false"
        if len(expr.args) == 1:
            return bool_term(expr.args[0], env)
        inner = " ".join(bool_term(a, env) for a in expr.args)
        return f"({expr.op} {inner})"
    raise SolverError(f"cannot render {expr!r}")


def negate_bool(expr: BoolExpr) -> BoolExpr:
    """Negation normal form at the BoolExpr level."""
    if isinstance(expr, Comparison):
        flip = {">=": "<", "<": ">=", "<=": ">", ">": "<=", "=": "!=",
                "!=": "="}
        return Comparison(expr.lhs, flip[expr.op], expr.rhs)
    flipped = "or" if expr.op == "and" else "and"
    return BoolOp(flipped, tuple(negate_bool(a) for a in expr.args))


def guard_term(guard: Guard, env: dict[str, str], positive: bool = True
               ) -> str:
    var = env[guard.var]
    bound = lin_term(guard.bound, env)
    if guard.is_lower:
        return f"(>= {var} {bound})" if positive else f"(< {var} {bound})"
    return f"(< {var} {bound})" if positive else f"(>= {var} {bound})"


# ---------------------------------------------------------------------------
# Query builder
# ---------------------------------------------------------------------------

@dataclass
class Step:
    index: int
    rule: Rule
    frame: int  # frame reached after this step


class QueryBuilder:
    """Accumulates declarations and assertions for one lasso shape."""

    def __init__(self, ta: ThresholdAutomaton):
        self.ta = ta
        self.decls: list[str] = []
        self.asserts: list[str] = []
        self.frame = 0
        self.steps: list[Step] = []
        self.param_env = {p: f"P_{p}" for p in ta.params}
        for p in ta.params:
            self._declare(self.param_env[p])
            self.add_assert(f"(>= {self.param_env[p]} 0)")
        self._declare_frame(0)

    # -- symbols ------------------------------------------------------------
    def kappa(self, frame: int, loc: str) -> str:
        return f"K{frame}_{self.ta.loc_index(loc)}"

    def shared(self, frame: int, var: str) -> str:
        return f"S{frame}_{self.ta.shared_index(var)}"

    def delta(self, step: int) -> str:
        return f"D{step}"

    def frame_env(self, frame: int) -> dict[str, str]:
        env = dict(self.param_env)
        for var in self.ta.shared:
            env[var] = self.shared(frame, var)
        return env

    def _declare(self, name: str) -> None:
        self.decls.append(f"(declare-const {name} Int)")

    def _declare_frame(self, frame: int) -> None:
        for loc in self.ta.locations:
            name = self.kappa(frame, loc)
            self._declare(name)
            self.add_assert(f"(>= {name} 0)")
        for var in self.ta.shared:
            name = self.shared(frame, var)
            self._declare(name)
            self.add_assert(f"(>= {name} 0)")

    def add_assert(self, term: str) -> None:
        self.asserts.append(f"(assert {term})")

    def comment(self, text: str) -> None:
        self.asserts.append(f"; {text}")

    # -- structural assertions ----------------------------------------------
    def init(self) -> None:
        self.comment("initial configuration")
        size = lin_term(self.ta.size_expr, self.param_env)
        initial = [self.kappa(0, loc) for loc in self.ta.locations
                   if loc in self.ta.initial]
        others = [self.kappa(0, loc) for loc in self.ta.locations
                  if loc not in self.ta.initial]
        total = initial[0] if len(initial) == 1 else f"(+ {' '.join(initial)})"
        self.add_assert(f"(= {total} {size})")
        for name in others:
            self.add_assert(f"(= {name} 0)")
        for var in self.ta.shared:
            self.add_assert(f"(= {self.shared(0, var)} 0)")
        if self.ta.resilience != BoolOp("and", ()):
            self.add_assert(bool_term(self.ta.resilience, self.param_env))

    def pin_params(self, values: dict[str, int]) -> None:
        for name in self.ta.params:
            if name in values:
                self.add_assert(
                    f"(= {self.param_env[name]} {smt_int(values[name])})")

    def add_step(self, rule: Rule, conditional_uppers: bool = False) -> int:
        """Append one accelerated firing of `rule`; returns the new frame."""
        prev, cur = self.frame, self.frame + 1
        self.frame = cur
        step = len(self.steps)
        self.steps.append(Step(step, rule, cur))
        self._declare_frame(cur)
        d = self.delta(step)
        self._declare(d)
        self.add_assert(f"(>= {d} 0)")
        for loc in self.ta.locations:
            before, after = self.kappa(prev, loc), self.kappa(cur, loc)
            if rule.from_loc == rule.to_loc or loc not in (rule.from_loc,
                                                           rule.to_loc):
                self.add_assert(f"(= {after} {before})")
            elif loc == rule.from_loc:
                self.add_assert(f"(= {after} (- {before} {d}))")
            else:
                self.add_assert(f"(= {after} (+ {before} {d}))")
        for var in self.ta.shared:
            before, after = self.shared(prev, var), self.shared(cur, var)
            amount = rule.update_of(var)
            if amount == 0:
                self.add_assert(f"(= {after} {before})")
            else:
                self.add_assert(
                    f"(= {after} (+ {before} (* {smt_int(amount)} {d})))")
        if conditional_uppers and rule.upper:
            # upper guards must hold for every shift k < delta
            env = self.frame_env(prev)
            conj = []
            for g in rule.upper:
                amount = rule.update_of(g.var)
                shifted = (f"(+ {env[g.var]} (* (- {d} 1) "
                           f"{smt_int(amount)}))")
                conj.append(f"(< {shifted} {lin_term(g.bound, env)})")
            body = conj[0] if len(conj) == 1 else f"(and {' '.join(conj)})"
            self.add_assert(f"(or (= {d} 0) {body})")
        return cur

    def assert_guard(self, guard: Guard, frame: int, positive: bool = True
                     ) -> None:
        self.add_assert(guard_term(guard, self.frame_env(frame), positive))

    def assert_formula(self, phi, frame: int) -> None:
        self.add_assert(self.formula_term(phi, frame))

    def formula_term(self, phi, frame: int) -> str:
        env = self.frame_env(frame)
        if isinstance(phi, eltl.CounterEq0):
            parts = [f"(= {self.kappa(frame, loc)} 0)" for loc in phi.locs]
        elif isinstance(phi, eltl.CounterNe0):
            # counters are non-negative, so 'some counter nonzero' is the
            # linear constraint 'their sum is at least one'
            names = [self.kappa(frame, loc) for loc in phi.locs]
            total = names[0] if len(names) == 1 else f"(+ {' '.join(names)})"
            return f"(>= {total} 1)"
        elif isinstance(phi, Guard):
            return guard_term(phi, env)
        elif isinstance(phi, eltl.Not):
            return f"(not {self.formula_term(phi.arg, frame)})"
        elif isinstance(phi, eltl.And):
            if not phi.args:
                return "true"
            parts = [self.formula_term(a, frame) for a in phi.args]
        elif isinstance(phi, eltl.Or):
            parts = [self.formula_term(a, frame) for a in phi.args]
            return f"(or {' '.join(parts)})" if len(parts) > 1 else parts[0]
        else:
            raise SolverError(f"non-propositional formula {phi!r}")
        if len(parts) == 1:
            return parts[0]
        return f"(and {' '.join(parts)})"

    def loop_closure(self, loop_start_frame: int) -> None:
        self.comment("loop closure")
        last = self.frame
        for loc in self.ta.locations:
            self.add_assert(f"(= {self.kappa(last, loc)} "
                            f"{self.kappa(loop_start_frame, loc)})")
        for var in self.ta.shared:
            self.add_assert(f"(= {self.shared(last, var)} "
                            f"{self.shared(loop_start_frame, var)})")

    def script(self) -> str:
        lines = ["(set-logic QF_LIA)"]
        lines.extend(self.decls)
        lines.extend(self.asserts)
        lines.extend(["(check-sat)", "(get-model)", "(exit)"])
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Solver driver
# ---------------------------------------------------------------------------

def default_solver_cmd() -> list[str] | None:
    """Prefer an installed z3; otherwise fall back to the bundled solver
    running in-process (signalled by None)."""
    if shutil.which("z3"):
        return ["z3", "-in"]
    return None


def parse_model(text: str) -> dict[str, int]:
    from .minisolver import parse_sexprs
    model: dict[str, int] = {}
    for item in parse_sexprs(text):
        entries = item
        if isinstance(item, list) and item and item[0] == "model":
            entries = item[1:]
        if not isinstance(entries, list):
            continue
        for entry in entries:
            if (isinstance(entry, list) and len(entry) == 5
                    and entry[0] == "define-fun"):
                value = entry[4]
                if isinstance(value, list) and value and value[0] == "-":
                    value = -value[1]
                model[str(entry[1])] = int(value)
    return model


def run_solver(script: str, cmd: list[str] | None = None,
               timeout: float = 60.0) -> tuple[str, dict[str, int] | None]:
    """Run one SMT-LIB2 script; returns (status, model-or-None) where
    status is 'sat', 'unsat', or 'unknown'."""
    if cmd is None:
        from . import minisolver
        try:
            out = minisolver.run_script(script)
        except minisolver.MiniSolverError as exc:
            raise SolverError(str(exc)) from exc
    else:
        try:
            proc = subprocess.run(cmd, input=script, capture_output=True,
                                  text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            return "unknown", None
        except OSError as exc:
            raise SolverError(f"cannot run solver {cmd!r}: {exc}") from exc
        out = proc.stdout
    status = "unknown"
    model_text = []
    for line in out.splitlines():
        stripped = line.strip()
        if stripped in ("sat", "unsat", "unknown") and status == "unknown":
            status = stripped
        else:
            model_text.append(line)
    if status == "sat":
        return "sat", parse_model("\n".join(model_text))
    return status, None


def check_entailment(assertions: list[str], variables: list[str],
                     cmd: list[str] | None = None, timeout: float = 60.0
                     ) -> bool:
    """True iff the conjunction of `assertions` is unsatisfiable."""
    lines = ["(set-logic QF_LIA)"]
    lines.extend(f"(declare-const {v} Int)" for v in variables)
    lines.extend(f"(assert {a})" for a in assertions)
    lines.extend(["(check-sat)", "(exit)"])
    status, _ = run_solver("\n".join(lines) + "\n", cmd, timeout)
    if status == "unknown":
        raise SolverError("solver returned unknown on entailment query")
    return status == "unsat"
