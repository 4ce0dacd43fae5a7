"""Specification logic: parsing, canonical forms, syntax trees, cut graphs,
finite-lasso semantics, and witness construction/checking."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional

from .counter import Configuration, Schedule, apply_schedule
from .ta import Guard, LinearExpr, TaError, ThresholdAutomaton, \
    TokenStream, parse_linear


class SpecError(Exception):
    pass


# ---------------------------------------------------------------------------
# Abstract syntax
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterEq0:
    """Conjunction: every counter in locs equals zero."""
    locs: tuple[str, ...]


@dataclass(frozen=True)
class CounterNe0:
    """Disjunction: some counter in locs is non-zero."""
    locs: tuple[str, ...]


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class F:
    arg: "Formula"


@dataclass(frozen=True)
class G:
    arg: "Formula"


Formula = CounterEq0 | CounterNe0 | Guard | Not | And | Or | F | G

TRUE = And(())


def render(phi: Formula) -> str:
    if isinstance(phi, CounterEq0):
        return "[" + ",".join(phi.locs) + "]=0"
    if isinstance(phi, CounterNe0):
        return "[" + ",".join(phi.locs) + "]!=0"
    if isinstance(phi, Guard):
        return phi.render()
    if isinstance(phi, Not):
        return f"!({render(phi.arg)})"
    if isinstance(phi, And):
        if not phi.args:
            return "true"
        return "(" + " & ".join(render(a) for a in phi.args) + ")"
    if isinstance(phi, Or):
        return "(" + " | ".join(render(a) for a in phi.args) + ")"
    if isinstance(phi, F):
        return f"F {render(phi.arg)}"
    if isinstance(phi, G):
        return f"G {render(phi.arg)}"
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# Grammar classification
# ---------------------------------------------------------------------------

def classify(phi: Formula) -> str:
    """Return 'gform', 'cform', 'pform', or 'temporal'; raise SpecError on
    shapes outside the grammar (e.g. a disjunction of two counter tests)."""
    if isinstance(phi, Guard):
        return "gform"
    if isinstance(phi, (CounterEq0, CounterNe0)):
        return "cform"
    if isinstance(phi, Not):
        if classify(phi.arg) != "gform":
            raise SpecError(f"negation only over guard formulas: {render(phi)}")
        return "gform"
    if isinstance(phi, Or):
        kinds = [classify(a) for a in phi.args]
        non_guard = [k for k in kinds if k != "gform"]
        if len(non_guard) > 1 or "temporal" in kinds:
            raise SpecError(
                f"disjunction must be guard-formula | counter-formula: "
                f"{render(phi)}")
        return "pform"
    if isinstance(phi, And):
        if not phi.args:
            return "cform"
        kinds = {classify(a) for a in phi.args}
        if "temporal" in kinds:
            return "temporal"
        if kinds == {"gform"}:
            return "gform"
        if kinds <= {"cform"}:
            return "cform"
        return "pform"
    if isinstance(phi, (F, G)):
        classify(phi.arg)
        return "temporal"
    raise TypeError(f"not a formula: {phi!r}")


def is_propositional(phi: Formula) -> bool:
    return classify(phi) != "temporal"


# ---------------------------------------------------------------------------
# Propositional evaluation on configurations
# ---------------------------------------------------------------------------

def eval_prop(ta: ThresholdAutomaton, sigma: Configuration,
              phi: Formula) -> bool:
    if isinstance(phi, CounterEq0):
        return all(sigma.kappa[ta.loc_index(l)] == 0 for l in phi.locs)
    if isinstance(phi, CounterNe0):
        return any(sigma.kappa[ta.loc_index(l)] != 0 for l in phi.locs)
    if isinstance(phi, Guard):
        return phi.holds(sigma.g[ta.shared_index(phi.var)],
                         ta.param_env(sigma.p))
    if isinstance(phi, Not):
        return not eval_prop(ta, sigma, phi.arg)
    if isinstance(phi, And):
        return all(eval_prop(ta, sigma, a) for a in phi.args)
    if isinstance(phi, Or):
        return any(eval_prop(ta, sigma, a) for a in phi.args)
    raise SpecError(f"not propositional: {render(phi)}")


# ---------------------------------------------------------------------------
# Concrete syntax
# ---------------------------------------------------------------------------

_SPEC_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>>=|<=|!=|->|[-+*()&|<>=\[\],!])|(?P<bad>\S))"
)


def _spec_tokens(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _SPEC_TOKEN_RE.match(text, pos)
        if not m or m.group("bad"):
            raise SpecError(f"unexpected character {text[pos:].strip()[:1]!r}")
        if m.group("int"):
            tokens.append(("int", m.group("int")))
        elif m.group("name"):
            tokens.append(("name", m.group("name")))
        else:
            tokens.append(("op", m.group("op")))
        pos = m.end()
    return tokens


class _SpecParser:
    def __init__(self, text: str, ta: ThresholdAutomaton):
        self.ts = TokenStream(_spec_tokens(text))
        self.ta = ta

    def parse(self) -> Formula:
        # Optional E(...) existential wrapper.
        if self.ts.peek() == ("name", "E"):
            self.ts.next()
            self.ts.expect("(")
            phi = self._implies()
            self.ts.expect(")")
        else:
            phi = self._implies()
        if not self.ts.done():
            raise SpecError(f"trailing tokens near {self.ts.peek()!r}")
        classify(phi)
        return phi

    def _implies(self) -> Formula:
        lhs = self._or()
        if self.ts.accept("->"):
            rhs = self._implies()
            return Or((Not(lhs), rhs))
        return lhs

    def _or(self) -> Formula:
        args = [self._and()]
        while self.ts.accept("|"):
            args.append(self._and())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def _and(self) -> Formula:
        args = [self._unary()]
        while self.ts.accept("&"):
            args.append(self._unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def _unary(self) -> Formula:
        tok = self.ts.peek()
        if tok == ("name", "F"):
            self.ts.next()
            return F(self._unary())
        if tok == ("name", "G"):
            self.ts.next()
            return G(self._unary())
        if tok == ("op", "!"):
            self.ts.next()
            return Not(self._unary())
        return self._atom()

    def _atom(self) -> Formula:
        ts = self.ts
        if ts.accept("("):
            phi = self._implies()
            ts.expect(")")
            return phi
        tok = ts.peek()
        if tok == ("name", "true"):
            ts.next()
            return TRUE
        if tok == ("op", "["):
            ts.next()
            locs: list[str] = []
            while True:
                kind, value = ts.next()
                if kind != "name" or value not in self.ta.locations:
                    raise SpecError(f"undeclared location {value!r}")
                locs.append(value)
                if not ts.accept(","):
                    break
            ts.expect("]")
            if ts.accept("="):
                eq = True
            elif ts.accept("!="):
                eq = False
            else:
                raise SpecError("expected '=0' or '!=0' after location set")
            kind, value = ts.next()
            if (kind, value) != ("int", "0"):
                raise SpecError("counters can only be compared with 0")
            return CounterEq0(tuple(locs)) if eq else CounterNe0(tuple(locs))
        if tok and tok[0] == "name" and tok[1] in self.ta.shared:
            var = ts.next()[1]
            op_tok = ts.next()
            if op_tok[0] != "op" or op_tok[1] not in (">=", "<", ">", "<="):
                raise SpecError(f"bad guard operator {op_tok[1]!r}")
            op = op_tok[1]
            try:
                bound = parse_linear(ts, set(self.ta.params))
            except TaError as exc:
                raise SpecError(str(exc)) from exc
            if op == ">":
                op, bound = ">=", bound + LinearExpr(1)
            elif op == "<=":
                op, bound = "<", bound + LinearExpr(1)
            return Guard(var, op, bound)
        raise SpecError(f"unexpected token {tok!r}")


def parse_formula(text: str, ta: ThresholdAutomaton) -> Formula:
    return _SpecParser(text, ta).parse()


def parse_spec_file(text: str, ta: ThresholdAutomaton) -> dict[str, Formula]:
    """Parse `spec NAME := E(...)` lines; '#' starts a comment."""
    specs: dict[str, Formula] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"spec\s+(\w+)\s*:=\s*(.*)", line)
        if not m:
            raise SpecError(f"line {lineno}: expected 'spec NAME := ...'")
        name, body = m.groups()
        if name in specs:
            raise SpecError(f"line {lineno}: duplicate spec {name!r}")
        try:
            specs[name] = parse_formula(body, ta)
        except SpecError as exc:
            raise SpecError(f"line {lineno}: {exc}") from exc
    return specs


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Canonical:
    """prop & F c1 & ... & F ck & G g_child (g_child None means G true)."""
    prop: Formula
    f_children: tuple["Canonical", ...]
    g_child: Optional["Canonical"]

    def to_formula(self) -> Formula:
        parts: list[Formula] = []
        if self.prop != TRUE:
            parts.append(self.prop)
        parts.extend(F(c.to_formula()) for c in self.f_children)
        parts.append(G(self.g_child.to_formula() if self.g_child else TRUE))
        return And(tuple(parts)) if len(parts) != 1 else parts[0]


def render_canonical(c: Canonical) -> str:
    parts = [render(c.prop)]
    parts.extend(f"F({render_canonical(fc)})" for fc in c.f_children)
    parts.append(f"G({render_canonical(c.g_child) if c.g_child else 'true'})")
    return " & ".join(parts)


def _conj(a: Formula, b: Formula) -> Formula:
    args: list[Formula] = []
    for part in (a, b):
        flat = part.args if isinstance(part, And) else (part,)
        for x in flat:
            if x != TRUE and x not in args:
                args.append(x)
    if not args:
        return TRUE
    return args[0] if len(args) == 1 else And(tuple(args))


def _merge(c1: Canonical, c2: Canonical) -> Canonical:
    if c1.g_child is None:
        g = c2.g_child
    elif c2.g_child is None:
        g = c1.g_child
    else:
        g = _merge(c1.g_child, c2.g_child)
    return Canonical(_conj(c1.prop, c2.prop),
                     c1.f_children + c2.f_children, g)


def _flatten_g(c: Canonical) -> Canonical:
    """G(p & F... & G psi) == G(p & F... ) merged with G psi."""
    if c.g_child is None:
        return c
    return _merge(Canonical(c.prop, c.f_children, None), _flatten_g(c.g_child))


def _canon(phi: Formula) -> Canonical:
    if isinstance(phi, And) and classify(phi) == "temporal":
        result = Canonical(TRUE, (), None)
        for arg in phi.args:
            result = _merge(result, _canon(arg))
        return result
    if isinstance(phi, F):
        return Canonical(TRUE, (_canon(phi.arg),), None)
    if isinstance(phi, G):
        return Canonical(TRUE, (), _flatten_g(_canon(phi.arg)))
    # propositional
    classify(phi)
    return Canonical(phi, (), None)


def _normalize(c: Canonical) -> Canonical:
    children = sorted((_normalize(fc) for fc in c.f_children),
                      key=render_canonical)
    dedup: list[Canonical] = []
    for child in children:
        if not dedup or dedup[-1] != child:
            dedup.append(child)
    return Canonical(c.prop, tuple(dedup),
                     _normalize(c.g_child) if c.g_child else None)


def canonicalize(phi: Formula) -> Canonical:
    return _normalize(_canon(phi))


# ---------------------------------------------------------------------------
# Canonical syntax tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeNode:
    id: tuple[int, ...]
    kind: str  # 'root' | 'F' | 'G' | 'prop' | 'gtrue'
    canon: Optional[Canonical]  # for root/F/G nodes
    prop: Optional[Formula]     # for prop leaves


@dataclass
class SyntaxTree:
    nodes: dict[tuple[int, ...], TreeNode]

    def f_node_ids(self) -> list[tuple[int, ...]]:
        return sorted(i for i, n in self.nodes.items() if n.kind == "F")

    def g_covered(self, node_id: tuple[int, ...]) -> bool:
        return any(self.nodes[node_id[:k]].kind == "G"
                   for k in range(1, len(node_id)))


def node_id_str(node_id: tuple[int, ...]) -> str:
    return ".".join(str(x) for x in node_id)


def syntax_tree(c: Canonical) -> SyntaxTree:
    nodes: dict[tuple[int, ...], TreeNode] = {}

    def expand(node_id: tuple[int, ...], psi: Canonical) -> None:
        nodes[node_id + (0,)] = TreeNode(node_id + (0,), "prop", None, psi.prop)
        k = len(psi.f_children)
        for i, child in enumerate(psi.f_children, start=1):
            cid = node_id + (i,)
            nodes[cid] = TreeNode(cid, "F", child, None)
            expand(cid, child)
        gid = node_id + (k + 1,)
        if psi.g_child is None:
            nodes[gid] = TreeNode(gid, "gtrue", None, None)
        else:
            nodes[gid] = TreeNode(gid, "G", psi.g_child, None)
            expand(gid, psi.g_child)

    root = (0,)
    # A canonical formula that is a single top-level F is represented with
    # the F-node itself as the root (its id participates in the cut graph).
    if c.prop == TRUE and len(c.f_children) == 1 and c.g_child is None:
        inner = c.f_children[0]
        nodes[root] = TreeNode(root, "F", inner, None)
        expand(root, inner)
    else:
        nodes[root] = TreeNode(root, "root", c, None)
        expand(root, c)
    return SyntaxTree(nodes)


# ---------------------------------------------------------------------------
# Cut graph
# ---------------------------------------------------------------------------

LOOP_START = "loop_start"
LOOP_END = "loop_end"


@dataclass
class CutGraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    f_formula: dict[str, Canonical]   # F-vertex -> canonical formula under F
    covered: dict[str, bool]


def cut_graph(tree: SyntaxTree) -> CutGraph:
    f_ids = tree.f_node_ids()
    f_strs = [node_id_str(i) for i in f_ids]
    covered = {node_id_str(i): tree.g_covered(i) for i in f_ids}
    f_formula = {node_id_str(i): tree.nodes[i].canon for i in f_ids}
    edges: list[tuple[str, str]] = []

    def add(e: tuple[str, str]) -> None:
        if e not in edges:
            edges.append(e)

    add((LOOP_START, LOOP_END))
    for i in f_ids:
        w = node_id_str(i)
        if not covered[w]:
            add((w, LOOP_START))
        else:
            add((LOOP_START, w))
            add((w, LOOP_END))
    for i in f_ids:
        for j in f_ids:
            if len(j) == len(i) + 1 and j[:len(i)] == i:
                if not covered[node_id_str(i)] and not covered[node_id_str(j)]:
                    add((node_id_str(i), node_id_str(j)))
    covered_sorted = [w for i, w in zip(f_ids, f_strs) if covered[w]]
    for a in range(len(covered_sorted)):
        for b in range(a + 1, len(covered_sorted)):
            add((covered_sorted[a], covered_sorted[b]))
    vertices = tuple(f_strs) + (LOOP_START, LOOP_END)
    return CutGraph(vertices, tuple(edges), f_formula, covered)


def topological_orderings(vertices: tuple[str, ...],
                          edges: tuple[tuple[str, str], ...]
                          ) -> Iterator[tuple[str, ...]]:
    """Yield every topological ordering exactly once, deterministically."""
    succ: dict[str, set[str]] = {v: set() for v in vertices}
    in_deg: dict[str, int] = {v: 0 for v in vertices}
    for a, b in edges:
        if b not in succ[a]:
            succ[a].add(b)
            in_deg[b] += 1
    order: list[str] = []

    def backtrack() -> Iterator[tuple[str, ...]]:
        ready = sorted(v for v in vertices
                       if in_deg[v] == 0 and v not in order)
        if not ready:
            if len(order) == len(vertices):
                yield tuple(order)
            return
        for v in ready:
            order.append(v)
            for w in succ[v]:
                in_deg[w] -= 1
            yield from backtrack()
            for w in succ[v]:
                in_deg[w] += 1
            order.pop()

    yield from backtrack()


# ---------------------------------------------------------------------------
# Lasso semantics
# ---------------------------------------------------------------------------

class LassoError(Exception):
    pass


def _lasso_states(ta: ThresholdAutomaton, sigma0: Configuration,
                  prefix: Schedule, loop: Schedule) -> list[Configuration]:
    states = apply_schedule(ta, sigma0, tuple(prefix) + tuple(loop)).configs
    if loop and states[-1] != states[len(prefix)]:
        raise LassoError("loop does not close")
    return states


def eval_on_lasso(ta: ThresholdAutomaton, sigma0: Configuration,
                  prefix: Schedule, loop: Schedule, phi: Formula) -> bool:
    states = _lasso_states(ta, sigma0, prefix, loop)
    n_prefix = len(prefix)
    if loop:
        positions = len(states) - 1  # last state duplicates the loop start
    else:
        positions = len(states)      # final state stutters forever
    memo: dict[tuple[Formula, int], bool] = {}

    def reach(i: int) -> range:
        return range(i, positions)

    def loop_positions() -> range:
        return range(n_prefix, positions)

    def ev(psi: Formula, i: int) -> bool:
        key = (psi, i)
        if key in memo:
            return memo[key]
        if isinstance(psi, F):
            result = any(ev(psi.arg, j) for j in reach(i)) or \
                any(ev(psi.arg, j) for j in loop_positions())
        elif isinstance(psi, G):
            result = all(ev(psi.arg, j) for j in reach(i)) and \
                all(ev(psi.arg, j) for j in loop_positions())
        elif isinstance(psi, And) and classify(psi) == "temporal":
            result = all(ev(a, i) for a in psi.args)
        else:
            result = eval_prop(ta, states[i], psi)
        memo[key] = result
        return result

    return ev(phi, 0)


# ---------------------------------------------------------------------------
# Witnesses (cut functions)
# ---------------------------------------------------------------------------

def is_cut_function(graph: CutGraph, zeta: dict[str, int],
                    n_prefix: int, n_loop: int) -> bool:
    if set(zeta) != set(graph.vertices):
        return False
    if zeta[LOOP_START] != n_prefix or zeta[LOOP_END] != n_prefix + n_loop - 1:
        return False
    if not all(0 <= zeta[v] <= n_prefix + n_loop - 1 for v in graph.vertices):
        return False
    return all(zeta[a] <= zeta[b] for a, b in graph.edges)


def _g_prop(psi: Canonical) -> Formula:
    return psi.g_child.prop if psi.g_child is not None else TRUE


def check_witness(ta: ThresholdAutomaton, sigma0: Configuration,
                  prefix: Schedule, loop: Schedule, phi: Formula,
                  zeta: dict[str, int]) -> bool:
    """Check conditions C1-C3 of the witness definition."""
    if not loop:
        raise LassoError("witness checking needs a non-empty loop")
    states = _lasso_states(ta, sigma0, prefix, loop)
    n_prefix, n_loop = len(prefix), len(loop)
    canon = canonicalize(phi)
    graph = cut_graph(syntax_tree(canon))
    if not is_cut_function(graph, zeta, n_prefix, n_loop):
        return False

    def holds_from(start: int, prop: Formula) -> bool:
        return all(eval_prop(ta, s, prop) for s in states[start:])

    # C1: root proposition at the first configuration; the root G-proposition
    # along the whole path.
    if not eval_prop(ta, states[0], canon.prop):
        return False
    if not holds_from(0, _g_prop(canon)):
        return False
    # C2 / C3 per F-vertex.
    for v in graph.vertices:
        if v in (LOOP_START, LOOP_END):
            continue
        psi = graph.f_formula[v]
        cut = zeta[v]
        if not eval_prop(ta, states[cut], psi.prop):
            return False
        if cut < n_prefix:
            if not holds_from(cut, _g_prop(psi)):
                return False
        else:
            if not holds_from(n_prefix, _g_prop(psi)):
                return False
    return True


def build_witness(ta: ThresholdAutomaton, sigma0: Configuration,
                  prefix: Schedule, loop: Schedule, phi: Formula
                  ) -> tuple[Schedule, dict[str, int]] | None:
    """Extreme-appearance construction: unroll the loop K times (K = number
    of vertices that must precede the loop start), then assign each F-vertex
    the rightmost admissible cut point, scanning in reverse topological
    order. Returns (new prefix, cut function) or None."""
    if not loop:
        raise LassoError("witness construction needs a non-empty loop")
    canon = canonicalize(phi)
    graph = cut_graph(syntax_tree(canon))
    k_unroll = sum(1 for v in graph.vertices
                   if v not in (LOOP_START, LOOP_END) and not graph.covered[v])
    new_prefix = tuple(prefix) + tuple(loop) * k_unroll
    states = _lasso_states(ta, sigma0, new_prefix, loop)
    n_prefix, n_loop = len(new_prefix), len(loop)

    order = next(topological_orderings(graph.vertices, graph.edges))
    succ: dict[str, list[str]] = {v: [] for v in graph.vertices}
    for a, b in graph.edges:
        succ[a].append(b)
    zeta: dict[str, int] = {LOOP_START: n_prefix,
                            LOOP_END: n_prefix + n_loop - 1}

    def suffix_ok(start: int, prop: Formula) -> bool:
        return all(eval_prop(ta, s, prop) for s in states[start:])

    for v in reversed(order):
        if v in (LOOP_START, LOOP_END):
            continue
        psi = graph.f_formula[v]
        upper = min(zeta[u] for u in succ[v])
        lower = n_prefix if graph.covered[v] else 0
        chosen = None
        for i in range(upper, lower - 1, -1):
            if not eval_prop(ta, states[i], psi.prop):
                continue
            g_start = i if i < n_prefix else n_prefix
            if suffix_ok(g_start, _g_prop(psi)):
                chosen = i
                break
        if chosen is None:
            return None
        zeta[v] = chosen

    if check_witness(ta, sigma0, new_prefix, loop, phi, zeta):
        return new_prefix, zeta
    return None


# ---------------------------------------------------------------------------
# Oracle pattern recognition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OraclePattern:
    kind: str       # 'unsafety' | 'non-termination' | 'non-response'
    p: Formula      # evaluated at the start of the lasso (or of the G q tail)
    q: Formula      # invariant region
    r: Formula      # fairness target (infinitely often)


def classify_pattern(phi: Formula) -> OraclePattern:
    """Match a formula against the three supported oracle patterns."""
    conjuncts = phi.args if isinstance(phi, And) and \
        classify(phi) == "temporal" else (phi,)
    props: list[Formula] = []
    f_bodies: list[Formula] = []
    g_bodies: list[Formula] = []
    for c in conjuncts:
        if isinstance(c, F):
            f_bodies.append(c.arg)
        elif isinstance(c, G):
            g_bodies.append(c.arg)
        elif is_propositional(c):
            props.append(c)
        else:
            raise SpecError(f"unsupported oracle conjunct: {render(c)}")
    p = And(tuple(props)) if len(props) != 1 else props[0]
    gf_r = [g.arg for g in g_bodies if isinstance(g, F)]
    g_plain = [g for g in g_bodies if is_propositional(g)]
    if len(gf_r) + len(g_plain) != len(g_bodies) or len(gf_r) > 1:
        raise SpecError("G-conjuncts must be propositional or a single G F")
    q = And(tuple(g_plain)) if len(g_plain) != 1 else g_plain[0]
    r = gf_r[0] if gf_r else TRUE
    if not is_propositional(r):
        raise SpecError("the G F body must be propositional")

    if not f_bodies and not gf_r and not g_plain:
        return OraclePattern("unsafety", p, TRUE, TRUE)
    if len(f_bodies) == 1 and is_propositional(f_bodies[0]) and not g_bodies:
        return OraclePattern("unsafety", p, f_bodies[0], TRUE)
    if not f_bodies:
        return OraclePattern("non-termination", p, q, r)
    if len(f_bodies) == 1:
        # non-response: F(p' & G q'), with a global G F r for fairness.
        body = f_bodies[0].args if isinstance(f_bodies[0], And) else \
            (f_bodies[0],)
        inner_props: list[Formula] = []
        inner_g: list[Formula] = []
        for c in body:
            if isinstance(c, G) and is_propositional(c.arg):
                inner_g.append(c.arg)
            elif is_propositional(c):
                inner_props.append(c)
            else:
                raise SpecError(f"unsupported F-body conjunct: {render(c)}")
        if props or g_plain:
            raise SpecError("non-response pattern cannot mix top-level "
                            "propositions with the F(p & G q) part")
        p_inner = And(tuple(inner_props)) if len(inner_props) != 1 \
            else inner_props[0]
        q_inner = And(tuple(inner_g)) if len(inner_g) != 1 else inner_g[0]
        return OraclePattern("non-response", p_inner, q_inner, r)
    raise SpecError("formula does not match a supported oracle pattern")
