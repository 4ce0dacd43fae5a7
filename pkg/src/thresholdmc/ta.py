"""Threshold automata: linear expressions, guards, rules, parsing, validation."""
from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from typing import Iterator, Mapping


class TaError(Exception):
    """Raised on malformed automaton text or invalid references."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Linear expressions over parameters (and integer constants)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class LinearExpr:
    """const + sum of coeff * name, with coeffs sorted by name and non-zero."""

    const: int = 0
    coeffs: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def make(const: int = 0, coeffs: Mapping[str, int] | None = None) -> "LinearExpr":
        items = tuple(sorted((n, c) for n, c in (coeffs or {}).items() if c != 0))
        return LinearExpr(const, items)

    @staticmethod
    def var(name: str) -> "LinearExpr":
        return LinearExpr(0, ((name, 1),))

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def eval(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[n] for n, c in self.coeffs)

    def scale(self, k: int) -> "LinearExpr":
        return LinearExpr.make(self.const * k, {n: c * k for n, c in self.coeffs})

    def scale_vars(self, k: int) -> "LinearExpr":
        """Multiply only the variable part (used by multiplier checks)."""
        return LinearExpr.make(self.const, {n: c * k for n, c in self.coeffs})

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        d = self.as_dict()
        for n, c in other.coeffs:
            d[n] = d.get(n, 0) + c
        return LinearExpr.make(self.const + other.const, d)

    def __sub__(self, other: "LinearExpr") -> "LinearExpr":
        return self + other.scale(-1)

    @property
    def is_const(self) -> bool:
        return not self.coeffs

    def render(self) -> str:
        parts: list[str] = []
        for n, c in self.coeffs:
            if c == 1:
                term = n
            elif c == -1:
                term = f"-{n}"
            else:
                term = f"{c}*{n}"
            if parts and not term.startswith("-"):
                parts.append(f"+ {term}")
            elif parts:
                parts.append(f"- {term[1:]}")
            else:
                parts.append(term)
        if self.const != 0 or not parts:
            if parts:
                sign = "+" if self.const >= 0 else "-"
                parts.append(f"{sign} {abs(self.const)}")
            else:
                parts.append(str(self.const))
        return " ".join(parts)


# ---------------------------------------------------------------------------
# Comparisons and boolean combinations (resilience conditions)
# ---------------------------------------------------------------------------

_REL_NEG = {">": "<=", ">=": "<", "<": ">=", "<=": ">", "=": "!="}


@dataclass(frozen=True)
class Comparison:
    lhs: LinearExpr
    op: str  # one of <, <=, =, >=, >
    rhs: LinearExpr

    def holds(self, env: Mapping[str, int]) -> bool:
        a, b = self.lhs.eval(env), self.rhs.eval(env)
        return {"<": a < b, "<=": a <= b, "=": a == b,
                ">=": a >= b, ">": a > b}[self.op]

    def render(self) -> str:
        return f"{self.lhs.render()} {self.op} {self.rhs.render()}"

    def atoms(self) -> Iterator["Comparison"]:
        yield self


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    args: tuple["BoolExpr", ...]

    def holds(self, env: Mapping[str, int]) -> bool:
        if self.op == "and":
            return all(a.holds(env) for a in self.args)
        return any(a.holds(env) for a in self.args)

    def render(self) -> str:
        sep = " & " if self.op == "and" else " | "
        return sep.join(f"({a.render()})" for a in self.args)

    def atoms(self) -> Iterator[Comparison]:
        for a in self.args:
            yield from a.atoms()


BoolExpr = Comparison | BoolOp

TRUE_RC = BoolOp("and", ())


# ---------------------------------------------------------------------------
# Guards and rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Guard:
    """An atomic threshold guard over a single shared variable.

    op ">=" is a lower (rising) guard  var >= bound;
    op "<"  is an upper (falling) guard var <  bound.
    """

    var: str
    op: str
    bound: LinearExpr

    @property
    def is_lower(self) -> bool:
        return self.op == ">="

    def holds(self, value: int, env: Mapping[str, int]) -> bool:
        b = self.bound.eval(env)
        return value >= b if self.op == ">=" else value < b

    def render(self) -> str:
        return f"{self.var} {self.op} {self.bound.render()}"


@dataclass(frozen=True)
class Rule:
    idx: int
    name: str
    from_loc: str
    to_loc: str
    lower: tuple[Guard, ...] = ()
    upper: tuple[Guard, ...] = ()
    update: tuple[tuple[str, int], ...] = ()  # shared var -> increment, sorted

    @property
    def guards(self) -> tuple[Guard, ...]:
        return self.lower + self.upper

    @property
    def is_self_loop(self) -> bool:
        return self.from_loc == self.to_loc

    def update_of(self, var: str) -> int:
        return dict(self.update).get(var, 0)

    def render(self) -> str:
        out = f"rule {self.name} {self.from_loc} -> {self.to_loc}"
        guards = [g.render() for g in self.lower + self.upper]
        out += " when " + (" & ".join(guards) if guards else "true")
        for var, amt in self.update:
            out += f" do {var}+={amt}"
        return out


@dataclass(frozen=True)
class ThresholdAutomaton:
    name: str
    params: tuple[str, ...]
    resilience: BoolExpr
    size_expr: LinearExpr
    shared: tuple[str, ...]
    locations: tuple[str, ...]
    initial: tuple[str, ...]
    rules: tuple[Rule, ...]

    def loc_index(self, loc: str) -> int:
        return self.locations.index(loc)

    def shared_index(self, var: str) -> int:
        return self.shared.index(var)

    def param_env(self, p: tuple[int, ...]) -> dict[str, int]:
        return dict(zip(self.params, p))

    def size(self, p: tuple[int, ...]) -> int:
        return self.size_expr.eval(self.param_env(p))

    def admissible(self, p: tuple[int, ...]) -> bool:
        env = self.param_env(p)
        return self.resilience.holds(env) and self.size_expr.eval(env) >= 0

    def lower_guards(self) -> tuple[Guard, ...]:
        seen: dict[Guard, None] = {}
        for r in self.rules:
            for g in r.lower:
                seen[g] = None
        return tuple(seen)

    def upper_guards(self) -> tuple[Guard, ...]:
        seen: dict[Guard, None] = {}
        for r in self.rules:
            for g in r.upper:
                seen[g] = None
        return tuple(seen)

    def render(self) -> str:
        lines = [f"ta {self.name}"]
        lines.append("params " + " ".join(self.params))
        lines.append("resilience " + self.resilience.render())
        lines.append("size " + self.size_expr.render())
        if self.shared:
            lines.append("shared " + " ".join(self.shared))
        lines.append("locations " + " ".join(self.locations))
        lines.append("initial " + " ".join(self.initial))
        lines.extend(r.render() for r in self.rules)
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Expression / formula parsing (recursive descent over a token stream)
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>>=|<=|!=|->|[-+*()&|<>=])|(?P<bad>\S))"
)


def tokenize(text: str, line: int | None = None) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.group("bad"):
            raise TaError(f"unexpected character {text[pos:].strip()[:1]!r}", line)
        if m.group("int"):
            tokens.append(("int", m.group("int")))
        elif m.group("name"):
            tokens.append(("name", m.group("name")))
        else:
            tokens.append(("op", m.group("op")))
        pos = m.end()
    return tokens


class TokenStream:
    def __init__(self, tokens: list[tuple[str, str]], line: int | None = None):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise TaError("unexpected end of expression", self.line)
        self.pos += 1
        return tok

    def accept(self, value: str) -> bool:
        tok = self.peek()
        if tok and tok[1] == value and tok[0] == "op":
            self.pos += 1
            return True
        return False

    def expect(self, value: str) -> None:
        if not self.accept(value):
            got = self.peek()
            raise TaError(f"expected {value!r}, got {got[1] if got else 'end'!r}",
                          self.line)

    def done(self) -> bool:
        return self.pos >= len(self.tokens)


def parse_linear(ts: TokenStream, names: set[str] | None = None) -> LinearExpr:
    """expr := term (('+'|'-') term)*"""
    expr = _parse_term(ts, names)
    while True:
        if ts.accept("+"):
            expr = expr + _parse_term(ts, names)
        elif ts.accept("-"):
            expr = expr - _parse_term(ts, names)
        else:
            return expr


def _parse_term(ts: TokenStream, names: set[str] | None) -> LinearExpr:
    """term := factor ('*' factor)*; at most one side of '*' non-constant."""
    expr = _parse_factor(ts, names)
    while ts.accept("*"):
        rhs = _parse_factor(ts, names)
        if not expr.is_const and not rhs.is_const:
            raise TaError("non-linear product", ts.line)
        if rhs.is_const:
            expr = expr.scale(rhs.const)
        else:
            expr = rhs.scale(expr.const)
    return expr


def _parse_factor(ts: TokenStream, names: set[str] | None) -> LinearExpr:
    if ts.accept("("):
        expr = parse_linear(ts, names)
        ts.expect(")")
        return expr
    if ts.accept("-"):
        return _parse_factor(ts, names).scale(-1)
    kind, value = ts.next()
    if kind == "int":
        return LinearExpr(int(value))
    if kind == "name":
        if names is not None and value not in names:
            raise TaError(f"undeclared name {value!r}", ts.line)
        return LinearExpr.var(value)
    raise TaError(f"unexpected token {value!r}", ts.line)


_REL_OPS = (">=", "<=", "<", ">", "=")


def parse_bool_expr(ts: TokenStream, names: set[str]) -> BoolExpr:
    """bool := disj; disj := conj ('|' conj)*; conj := atom ('&' atom)*"""
    args = [_parse_bool_conj(ts, names)]
    while ts.accept("|"):
        args.append(_parse_bool_conj(ts, names))
    return args[0] if len(args) == 1 else BoolOp("or", tuple(args))


def _parse_bool_conj(ts: TokenStream, names: set[str]) -> BoolExpr:
    args = [_parse_bool_atom(ts, names)]
    while ts.accept("&"):
        args.append(_parse_bool_atom(ts, names))
    return args[0] if len(args) == 1 else BoolOp("and", tuple(args))


def _parse_bool_atom(ts: TokenStream, names: set[str]) -> BoolExpr:
    # A parenthesis may open either a nested boolean or a linear expression;
    # scan ahead for a relational operator before the parenthesis closes.
    if ts.peek() == ("op", "("):
        depth = 0
        is_linear = False
        for kind, value in ts.tokens[ts.pos:]:
            if (kind, value) == ("op", "("):
                depth += 1
            elif (kind, value) == ("op", ")"):
                depth -= 1
                if depth == 0:
                    is_linear = True
                    break
            elif depth == 1 and kind == "op" and value in _REL_OPS + ("&", "|"):
                break
        if not is_linear:
            ts.expect("(")
            expr = parse_bool_expr(ts, names)
            ts.expect(")")
            return expr
    lhs = parse_linear(ts, names)
    tok = ts.peek()
    if tok is None or tok[0] != "op" or tok[1] not in _REL_OPS:
        raise TaError("expected comparison operator", ts.line)
    op = ts.next()[1]
    rhs = parse_linear(ts, names)
    return Comparison(lhs, op, rhs)


# ---------------------------------------------------------------------------
# TA file parsing
# ---------------------------------------------------------------------------

def _parse_guards(ts: TokenStream, shared: set[str], params: set[str]
                  ) -> tuple[tuple[Guard, ...], tuple[Guard, ...]]:
    if ts.peek() == ("name", "true"):
        ts.next()
        return (), ()
    lower: list[Guard] = []
    upper: list[Guard] = []
    while True:
        kind, var = ts.next()
        if kind != "name" or var not in shared:
            raise TaError(f"guard must test a shared variable, got {var!r}", ts.line)
        tok = ts.next()
        if tok[0] != "op" or tok[1] not in (">=", "<", ">", "<="):
            raise TaError(f"bad guard operator {tok[1]!r}", ts.line)
        op = tok[1]
        bound = parse_linear(ts, params)
        # Normalize strict/weak variants to >= (lower) and < (upper).
        if op == ">":
            op, bound = ">=", bound + LinearExpr(1)
        elif op == "<=":
            op, bound = "<", bound + LinearExpr(1)
        (lower if op == ">=" else upper).append(Guard(var, op, bound))
        if not ts.accept("&"):
            break
    return tuple(lower), tuple(upper)


def parse_ta(text: str) -> ThresholdAutomaton:
    name = None
    params: list[str] = []
    resilience: BoolExpr | None = None
    size_expr: LinearExpr | None = None
    shared: list[str] = []
    locations: list[str] = []
    initial: list[str] = []
    rules: list[Rule] = []

    def names_unique(names: list[str], what: str, lineno: int) -> None:
        if len(set(names)) != len(names):
            raise TaError(f"duplicate {what} name", lineno)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "ta":
            name = rest
        elif keyword == "params":
            params = rest.split()
            names_unique(params, "parameter", lineno)
        elif keyword == "resilience":
            ts = TokenStream(tokenize(rest, lineno), lineno)
            resilience = parse_bool_expr(ts, set(params))
            if not ts.done():
                raise TaError("trailing tokens in resilience", lineno)
        elif keyword == "size":
            ts = TokenStream(tokenize(rest, lineno), lineno)
            size_expr = parse_linear(ts, set(params))
            if not ts.done():
                raise TaError("trailing tokens in size", lineno)
        elif keyword == "shared":
            shared = rest.split()
            names_unique(shared, "shared variable", lineno)
        elif keyword == "locations":
            locations = rest.split()
            names_unique(locations, "location", lineno)
        elif keyword == "initial":
            initial = rest.split()
            for loc in initial:
                if loc not in locations:
                    raise TaError(f"undeclared location {loc!r}", lineno)
        elif keyword == "rule":
            m = re.match(r"(\w+)\s+(\w+)\s*->\s*(\w+)\s*(.*)", rest)
            if not m:
                raise TaError("malformed rule", lineno)
            rname, frm, to, tail = m.groups()
            if any(r.name == rname for r in rules):
                raise TaError(f"duplicate rule name {rname!r}", lineno)
            for loc in (frm, to):
                if loc not in locations:
                    raise TaError(f"undeclared location {loc!r}", lineno)
            lower: tuple[Guard, ...] = ()
            upper: tuple[Guard, ...] = ()
            update: dict[str, int] = {}
            tail = tail.strip()
            if tail.startswith("when"):
                when_part, _, do_part = tail[4:].partition(" do ")
                ts = TokenStream(tokenize(when_part, lineno), lineno)
                lower, upper = _parse_guards(ts, set(shared), set(params))
                if not ts.done():
                    raise TaError("trailing tokens in guard", lineno)
                tail = ("do " + do_part.strip()) if do_part else ""
            while tail.startswith("do"):
                m2 = re.match(r"do\s+(\w+)\s*\+=\s*(\d+)\s*(.*)", tail)
                if not m2:
                    raise TaError("malformed update", lineno)
                var, amt, tail = m2.group(1), int(m2.group(2)), m2.group(3).strip()
                if var not in shared:
                    raise TaError(f"undeclared shared variable {var!r}", lineno)
                update[var] = update.get(var, 0) + amt
            if tail:
                raise TaError(f"trailing text {tail!r}", lineno)
            rules.append(Rule(len(rules), rname, frm, to, lower, upper,
                              tuple(sorted(update.items()))))
        else:
            raise TaError(f"unknown keyword {keyword!r}", lineno)

    if name is None:
        raise TaError("missing 'ta' header")
    if not locations:
        raise TaError("missing 'locations'")
    if resilience is None:
        resilience = TRUE_RC
    if size_expr is None:
        raise TaError("missing 'size'")
    return ThresholdAutomaton(
        name=name, params=tuple(params), resilience=resilience,
        size_expr=size_expr, shared=tuple(shared), locations=tuple(locations),
        initial=tuple(initial), rules=tuple(rules))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _location_sccs(ta: ThresholdAutomaton) -> list[set[str]]:
    """Tarjan over the location graph induced by non-self-loop rules."""
    graph: dict[str, set[str]] = {l: set() for l in ta.locations}
    for r in ta.rules:
        if not r.is_self_loop:
            graph[r.from_loc].add(r.to_loc)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[set[str]] = []
    counter = [0]

    def strongconnect(v: str) -> None:
        work = [(v, iter(sorted(graph[v])))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(graph[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                scc = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.add(w)
                    if w == node:
                        break
                sccs.append(scc)

    for v in ta.locations:
        if v not in index:
            strongconnect(v)
    return sccs


def cycle_rules(ta: ThresholdAutomaton) -> set[int]:
    """Indices of rules lying on some directed cycle of the location graph."""
    cyclic: set[int] = set()
    sccs = _location_sccs(ta)
    scc_of = {loc: i for i, scc in enumerate(sccs) for loc in scc}
    cyclic_scc = {i for i, scc in enumerate(sccs)
                  if len(scc) > 1}
    for r in ta.rules:
        if r.is_self_loop:
            cyclic.add(r.idx)
        elif scc_of[r.from_loc] == scc_of[r.to_loc] and \
                scc_of[r.from_loc] in cyclic_scc:
            cyclic.add(r.idx)
    return cyclic


def validate_ta(ta: ThresholdAutomaton) -> list[str]:
    """Return the list of violated structural restrictions (empty = valid)."""
    report: list[str] = []
    if not ta.initial:
        report.append("empty initial set")
    on_cycle = cycle_rules(ta)
    for r in ta.rules:
        if r.idx in on_cycle and any(amt != 0 for _, amt in r.update):
            report.append(f"update on cycle rule {r.name}")
    # Every strongly connected component must be a single simple cycle:
    # each member location has exactly one outgoing and one incoming
    # intra-component edge, counting rule multiplicity.
    sccs = _location_sccs(ta)
    for scc in sccs:
        if len(scc) < 2:
            continue
        out_deg = {l: 0 for l in scc}
        in_deg = {l: 0 for l in scc}
        for r in ta.rules:
            if not r.is_self_loop and r.from_loc in scc and r.to_loc in scc:
                out_deg[r.from_loc] += 1
                in_deg[r.to_loc] += 1
        if any(out_deg[l] != 1 for l in scc) or any(in_deg[l] != 1 for l in scc):
            names = ",".join(sorted(scc))
            report.append(f"non-simple cycle through {{{names}}}")
    return report


# ---------------------------------------------------------------------------
# Flow classes: SCCs of the rule-precedence relation and a linear extension
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowClasses:
    class_of: dict[int, int]          # rule idx -> class id (min member idx)
    linear_order: tuple[int, ...]     # class ids in topological order
    members: dict[int, tuple[int, ...]]

    def position(self, rule_idx: int) -> int:
        return self.linear_order.index(self.class_of[rule_idx])


def flow_classes(ta: ThresholdAutomaton) -> FlowClasses:
    n = len(ta.rules)
    succ: dict[int, set[int]] = {i: set() for i in range(n)}
    for r1 in ta.rules:
        for r2 in ta.rules:
            if r1.to_loc == r2.from_loc:
                succ[r1.idx].add(r2.idx)

    # Tarjan SCC over rule indices.
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comp_of: dict[int, int] = {}
    comps: list[list[int]] = []
    counter = [0]

    def strongconnect(v: int) -> None:
        work = [(v, iter(sorted(succ[v])))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(succ[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                comps.append(sorted(comp))

    for v in range(n):
        if v not in index:
            strongconnect(v)

    members: dict[int, tuple[int, ...]] = {}
    class_of: dict[int, int] = {}
    for comp in comps:
        cid = min(comp)
        members[cid] = tuple(comp)
        for r in comp:
            class_of[r] = cid

    # Condensation edges, then Kahn's algorithm with a min-heap on class id.
    cls_succ: dict[int, set[int]] = {c: set() for c in members}
    in_deg: dict[int, int] = {c: 0 for c in members}
    for v in range(n):
        for w in succ[v]:
            c1, c2 = class_of[v], class_of[w]
            if c1 != c2 and c2 not in cls_succ[c1]:
                cls_succ[c1].add(c2)
                in_deg[c2] += 1
    heap = [c for c in members if in_deg[c] == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        c = heapq.heappop(heap)
        order.append(c)
        for c2 in sorted(cls_succ[c]):
            in_deg[c2] -= 1
            if in_deg[c2] == 0:
                heapq.heappush(heap, c2)
    return FlowClasses(class_of, tuple(order), members)
