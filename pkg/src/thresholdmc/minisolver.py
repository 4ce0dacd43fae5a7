"""A small QF_LIA solver speaking the SMT-LIB2 subset emitted by this
package: integer constants, linear arithmetic, and/or/not/=>, check-sat and
get-model. Feasibility of atom conjunctions is decided with scipy's MILP
(HiGHS); disjunctions are handled by deterministic DFS branching with
infeasibility pruning. Runnable as `python3 -m thresholdmc.minisolver`."""
from __future__ import annotations

import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix


class MiniSolverError(Exception):
    pass


# ---------------------------------------------------------------------------
# S-expression parsing
# ---------------------------------------------------------------------------

def parse_sexprs(text: str) -> list:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            tokens.append(c)
            i += 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            tokens.append(text[i:j + 1])
            i = j + 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '();"':
                j += 1
            tokens.append(text[i:j])
            i = j
    pos = 0

    def read() -> object:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while tokens[pos] != ")":
                items.append(read())
            pos += 1
            return items
        if tok == ")":
            raise MiniSolverError("unbalanced ')'")
        if tok.lstrip("-").isdigit() and tok not in ("-",):
            return int(tok)
        return tok

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


# ---------------------------------------------------------------------------
# Terms -> negation normal form over linear atoms
# ---------------------------------------------------------------------------
# Nodes: ("and", [nodes]) | ("or", [nodes]) | ("true",) | ("false",)
#        | ("atom", coeffs dict, const, op) with op ">=" or "=",
#          meaning sum(coeffs)+const {>=,=} 0.

def _lin(term: object) -> tuple[dict[str, int], int]:
    if isinstance(term, int):
        return {}, term
    if isinstance(term, str):
        return {term: 1}, 0
    if not isinstance(term, list) or not term:
        raise MiniSolverError(f"bad arithmetic term {term!r}")
    op = term[0]
    if op == "+":
        coeffs: dict[str, int] = {}
        const = 0
        for arg in term[1:]:
            c2, k2 = _lin(arg)
            const += k2
            for name, c in c2.items():
                coeffs[name] = coeffs.get(name, 0) + c
        return coeffs, const
    if op == "-":
        if len(term) == 2:
            c2, k2 = _lin(term[1])
            return {n: -c for n, c in c2.items()}, -k2
        coeffs, const = _lin(term[1])
        for arg in term[2:]:
            c2, k2 = _lin(arg)
            const -= k2
            for name, c in c2.items():
                coeffs[name] = coeffs.get(name, 0) - c
        return coeffs, const
    if op == "*":
        coeffs, const = {}, 1
        lin_part: tuple[dict[str, int], int] | None = None
        scale = 1
        for arg in term[1:]:
            c2, k2 = _lin(arg)
            if c2:
                if lin_part is not None:
                    raise MiniSolverError("non-linear product")
                lin_part = (c2, k2)
            else:
                scale *= k2
        if lin_part is None:
            return {}, scale
        c2, k2 = lin_part
        return {n: c * scale for n, c in c2.items()}, k2 * scale
    raise MiniSolverError(f"unknown arithmetic operator {op!r}")


def _neg_coeffs(coeffs: dict[str, int], const: int
                ) -> tuple[dict[str, int], int]:
    return {n: -c for n, c in coeffs.items()}, -const


def nnf(term: object, negate: bool = False) -> tuple:
    if term == "true":
        return ("false",) if negate else ("true",)
    if term == "false":
        return ("true",) if negate else ("false",)
    if isinstance(term, list) and term:
        op = term[0]
        if op == "not":
            return nnf(term[1], not negate)
        if op == "=>":
            # (=> a b) == (or (not a) b)
            return nnf(["or", ["not", term[1]], term[2]], negate)
        if op in ("and", "or"):
            flipped = {"and": "or", "or": "and"}[op] if negate else op
            return (flipped, [nnf(a, negate) for a in term[1:]])
        if op in ("<", "<=", ">", ">=", "="):
            ca, ka = _lin(term[1])
            cb, kb = _lin(term[2])
            coeffs = dict(ca)
            for n, c in cb.items():
                coeffs[n] = coeffs.get(n, 0) - c
            const = ka - kb  # lhs - rhs
            if op == "=":
                if not negate:
                    return ("atom", coeffs, const, "=")
                nc, nk = _neg_coeffs(coeffs, const)
                return ("or", [("atom", coeffs, const - 1, ">="),
                               ("atom", nc, nk - 1, ">=")])
            if negate:
                op = {">=": "<", ">": "<=", "<": ">=", "<=": ">"}[op]
            if op == ">=":
                return ("atom", coeffs, const, ">=")
            if op == ">":
                return ("atom", coeffs, const - 1, ">=")
            nc, nk = _neg_coeffs(coeffs, const)
            if op == "<=":
                return ("atom", nc, nk, ">=")
            return ("atom", nc, nk - 1, ">=")  # <
    raise MiniSolverError(f"unknown boolean term {term!r}")


# ---------------------------------------------------------------------------
# DFS over disjunction branches with MILP feasibility pruning
# ---------------------------------------------------------------------------

def _split(nodes: list) -> tuple[list, list, bool]:
    """Flatten 'and' nodes into (atoms, or-nodes, contains_false)."""
    atoms: list = []
    ors: list = []
    stack = list(nodes)
    while stack:
        node = stack.pop(0)
        kind = node[0]
        if kind == "true":
            continue
        if kind == "false":
            return atoms, ors, True
        if kind == "and":
            stack = list(node[1]) + stack
        elif kind == "or":
            ors.append(node)
        else:
            atoms.append(node)
    return atoms, ors, False


def _feasible(variables: list[str], atoms: list) -> dict[str, int] | None:
    index = {v: i for i, v in enumerate(variables)}
    n = len(variables)
    if not atoms:
        return {v: 0 for v in variables}
    rows, cols, data, lbs, ubs = [], [], [], [], []
    for row, (_, coeffs, const, op) in enumerate(atoms):
        for name, c in coeffs.items():
            if name not in index:
                raise MiniSolverError(f"undeclared symbol {name!r}")
            rows.append(row)
            cols.append(index[name])
            data.append(float(c))
        # sum + const >= 0  <=>  sum >= -const; '=' pins both bounds.
        lbs.append(float(-const))
        ubs.append(float(-const) if op == "=" else np.inf)
    matrix = csr_matrix((data, (rows, cols)), shape=(len(atoms), n))
    res = milp(c=np.zeros(n),
               constraints=LinearConstraint(matrix, np.array(lbs),
                                            np.array(ubs)),
               integrality=np.ones(n),
               bounds=Bounds(-np.inf, np.inf))
    if res.status == 2:  # infeasible
        return None
    if res.status != 0 or res.x is None:
        raise MiniSolverError(f"MILP solver failure (status {res.status})")
    model = {v: int(round(res.x[i])) for i, v in enumerate(index)}
    for _, coeffs, const, op in atoms:
        value = const + sum(c * model[name] for name, c in coeffs.items())
        if (op == ">=" and value < 0) or (op == "=" and value != 0):
            raise MiniSolverError("non-integral MILP solution")
    return model


def solve(variables: list[str], assertions: list) -> dict[str, int] | None:
    atoms, ors, false = _split([nnf(a) for a in assertions])
    if false:
        return None

    def dfs(atoms: list, ors: list) -> dict[str, int] | None:
        model = _feasible(variables, atoms)
        if model is None:
            return None
        if not ors:
            return model
        head, rest = ors[0], ors[1:]
        for disjunct in head[1]:
            sub_atoms, sub_ors, sub_false = _split([disjunct])
            if sub_false:
                continue
            result = dfs(atoms + sub_atoms, rest + sub_ors)
            if result is not None:
                return result
        return None

    return dfs(atoms, ors)


# ---------------------------------------------------------------------------
# SMT-LIB2 front end
# ---------------------------------------------------------------------------

def run_script(text: str) -> str:
    variables: list[str] = []
    assertions: list = []
    output: list[str] = []
    status: str | None = None
    model: dict[str, int] | None = None
    for cmd in parse_sexprs(text):
        if not isinstance(cmd, list) or not cmd:
            raise MiniSolverError(f"bad command {cmd!r}")
        head = cmd[0]
        if head in ("set-logic", "set-option", "set-info"):
            continue
        if head == "declare-const":
            variables.append(str(cmd[1]))
        elif head == "declare-fun":
            if cmd[2] != []:
                raise MiniSolverError("only zero-arity functions supported")
            variables.append(str(cmd[1]))
        elif head == "assert":
            assertions.append(cmd[1])
        elif head == "check-sat":
            model = solve(variables, assertions)
            status = "sat" if model is not None else "unsat"
            output.append(status)
        elif head == "get-model":
            if model is None:
                output.append('(error "model is not available")')
            else:
                lines = ["("]
                for v in variables:
                    value = model[v]
                    text_value = str(value) if value >= 0 else f"(- {-value})"
                    lines.append(f"  (define-fun {v} () Int {text_value})")
                lines.append(")")
                output.append("\n".join(lines))
        elif head == "echo":
            output.append(str(cmd[1]).strip('"'))
        elif head == "reset":
            variables, assertions, model, status = [], [], None, None
        elif head == "exit":
            break
        else:
            raise MiniSolverError(f"unsupported command {head!r}")
    return "\n".join(output) + ("\n" if output else "")


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if argv and argv[0] != "-in":
        with open(argv[0], "r", encoding="utf-8") as handle:
            text = handle.read()
    else:
        text = sys.stdin.read()
    try:
        sys.stdout.write(run_script(text))
    except MiniSolverError as exc:
        sys.stdout.write(f'(error "{exc}")\n')
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
