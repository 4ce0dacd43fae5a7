"""Counter-system semantics: configurations, accelerated transitions,
schedules, reachability graphs, and the explicit-state oracle."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterator

from .ta import Rule, ThresholdAutomaton


class NotApplicable(Exception):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Configuration:
    kappa: tuple[int, ...]
    g: tuple[int, ...]
    p: tuple[int, ...]


@dataclass(frozen=True)
class Transition:
    rule: Rule
    factor: int


Schedule = tuple[Transition, ...]


@dataclass(frozen=True)
class Path:
    start: Configuration
    steps: tuple[tuple[Transition, Configuration], ...]

    @property
    def configs(self) -> list[Configuration]:
        return [self.start] + [c for _, c in self.steps]

    @property
    def final(self) -> Configuration:
        return self.steps[-1][1] if self.steps else self.start


def initial_configs(ta: ThresholdAutomaton, p: tuple[int, ...]
                    ) -> Iterator[Configuration]:
    """All concrete initial configurations: compositions of N(p) over I."""
    if not ta.admissible(p):
        raise ValueError(f"parameters {p} violate the resilience condition")
    n = ta.size(p)
    zeros_g = (0,) * len(ta.shared)
    init_idx = [ta.loc_index(l) for l in ta.initial]

    def splits(total: int, slots: int) -> Iterator[tuple[int, ...]]:
        if slots == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for rest in splits(total - head, slots - 1):
                yield (head,) + rest

    if not init_idx:
        if n == 0:
            yield Configuration((0,) * len(ta.locations), zeros_g, p)
        return
    for split in splits(n, len(init_idx)):
        kappa = [0] * len(ta.locations)
        for idx, count in zip(init_idx, split):
            kappa[idx] += count
        yield Configuration(tuple(kappa), zeros_g, p)


def is_unlocked(ta: ThresholdAutomaton, sigma: Configuration,
                t: Transition) -> bool:
    """All k-shifted guard checks for k in {0..factor-1} hold.

    Updates are non-negative, so lower guards are hardest at k=0 and upper
    guards at k=factor-1; checking the extremes is equivalent.
    """
    if t.factor == 0:
        return True
    env = ta.param_env(sigma.p)
    for guard in t.rule.lower:
        if not guard.holds(sigma.g[ta.shared_index(guard.var)], env):
            return False
    k = t.factor - 1
    for guard in t.rule.upper:
        value = sigma.g[ta.shared_index(guard.var)] + \
            k * t.rule.update_of(guard.var)
        if not guard.holds(value, env):
            return False
    return True


def is_applicable(ta: ThresholdAutomaton, sigma: Configuration,
                  t: Transition) -> bool:
    if not is_unlocked(ta, sigma, t):
        return False
    return t.factor == 0 or \
        sigma.kappa[ta.loc_index(t.rule.from_loc)] >= t.factor


def apply(ta: ThresholdAutomaton, sigma: Configuration,
          t: Transition) -> Configuration:
    if not is_applicable(ta, sigma, t):
        raise NotApplicable(
            f"transition ({t.rule.name},{t.factor}) not applicable")
    kappa = list(sigma.kappa)
    if not t.rule.is_self_loop:
        kappa[ta.loc_index(t.rule.from_loc)] -= t.factor
        kappa[ta.loc_index(t.rule.to_loc)] += t.factor
    g = list(sigma.g)
    for var, amount in t.rule.update:
        g[ta.shared_index(var)] += t.factor * amount
    return Configuration(tuple(kappa), tuple(g), sigma.p)


def apply_schedule(ta: ThresholdAutomaton, sigma: Configuration,
                   schedule: Schedule) -> Path:
    steps: list[tuple[Transition, Configuration]] = []
    current = sigma
    for i, t in enumerate(schedule):
        if not is_applicable(ta, current, t):
            raise NotApplicable(
                f"transition {i} ({t.rule.name},{t.factor}) not applicable", i)
        current = apply(ta, current, t)
        steps.append((t, current))
    return Path(sigma, tuple(steps))


# ---------------------------------------------------------------------------
# Explicit-state exploration (factor-1 transitions, fixed parameters)
# ---------------------------------------------------------------------------

@dataclass
class ReachGraph:
    initials: list[Configuration]
    edges: dict[Configuration, list[tuple[Transition, Configuration]]]


def successors(ta: ThresholdAutomaton, sigma: Configuration
               ) -> list[tuple[Transition, Configuration]]:
    out = []
    for rule in ta.rules:
        t = Transition(rule, 1)
        if is_applicable(ta, sigma, t):
            out.append((t, apply(ta, sigma, t)))
    return out


def enumerate_reachable(ta: ThresholdAutomaton, p: tuple[int, ...],
                        budget: int = 10 ** 6,
                        initials: list[Configuration] | None = None
                        ) -> ReachGraph:
    if initials is None:
        initials = list(initial_configs(ta, p))
    edges: dict[Configuration, list[tuple[Transition, Configuration]]] = {}
    queue = deque(initials)
    for sigma in initials:
        edges.setdefault(sigma, None)  # type: ignore[arg-type]
    seen = set(initials)
    while queue:
        sigma = queue.popleft()
        succ = successors(ta, sigma)
        edges[sigma] = succ
        for _, nxt in succ:
            if nxt not in seen:
                if len(seen) >= budget:
                    raise BudgetExceeded(f"more than {budget} configurations")
                seen.add(nxt)
                edges.setdefault(nxt, None)  # type: ignore[arg-type]
                queue.append(nxt)
    return ReachGraph(initials, edges)


# ---------------------------------------------------------------------------
# Oracle: lasso search for the three supported specification patterns
# ---------------------------------------------------------------------------

Pred = Callable[[Configuration], bool]


@dataclass(frozen=True)
class WitnessLasso:
    start: Configuration
    prefix: Schedule
    loop: Schedule

    def configs(self, ta: ThresholdAutomaton) -> list[Configuration]:
        return apply_schedule(ta, self.start, self.prefix + self.loop).configs

    def to_json(self, ta: ThresholdAutomaton) -> dict:
        states = self.configs(ta)
        return {
            "params": dict(zip(ta.params, self.start.p)),
            "prefix": [{"rule": t.rule.name, "factor": t.factor}
                       for t in self.prefix],
            "loop": [{"rule": t.rule.name, "factor": t.factor}
                     for t in self.loop],
            "states": [{"kappa": dict(zip(ta.locations, c.kappa)),
                        "g": dict(zip(ta.shared, c.g))} for c in states],
        }


def _idle_loop(ta: ThresholdAutomaton, sigma: Configuration) -> Schedule:
    """A non-empty loop that returns immediately to sigma."""
    for rule in ta.rules:
        t = Transition(rule, 1)
        if is_applicable(ta, sigma, t) and apply(ta, sigma, t) == sigma:
            return (t,)
    if ta.rules:
        return (Transition(ta.rules[0], 0),)
    return ()


def _bfs(ta: ThresholdAutomaton, starts: list[Configuration], goal: Pred,
         region: Pred | None, budget: int
         ) -> tuple[Configuration, Schedule, Configuration] | None:
    """Shortest transition path from a start to a goal state, staying in
    `region` (goal state included); returns (start, schedule, goal state)."""
    parents: dict[Configuration, tuple[Configuration, Transition] | None] = {}
    queue: deque[Configuration] = deque()
    for s in starts:
        if region is not None and not region(s):
            continue
        if s not in parents:
            parents[s] = None
            queue.append(s)
    while queue:
        sigma = queue.popleft()
        if goal(sigma):
            sched: list[Transition] = []
            node = sigma
            while parents[node] is not None:
                prev, t = parents[node]  # type: ignore[misc]
                sched.append(t)
                node = prev
            return node, tuple(reversed(sched)), sigma
        for t, nxt in successors(ta, sigma):
            if region is not None and not region(nxt):
                continue
            if nxt not in parents:
                if len(parents) >= budget:
                    raise BudgetExceeded(f"more than {budget} configurations")
                parents[nxt] = (sigma, t)
                queue.append(nxt)
    return None


def oracle_check(ta: ThresholdAutomaton, p: tuple[int, ...], pattern: str,
                 p_pred: Pred, q_pred: Pred, r_pred: Pred,
                 budget: int = 10 ** 6) -> WitnessLasso | None:
    """Search for a lasso witnessing one of the three patterns:

    unsafety        E(p & F q)
    non-termination E(p & GF r & G q)
    non-response    E(GF r & F(p & G q))

    Returns None when no witness exists (the property is verified).
    """
    initials = list(initial_configs(ta, p))
    if pattern == "unsafety":
        starts = [s for s in initials if p_pred(s)]
        hit = _bfs(ta, starts, q_pred, None, budget)
        if hit is None:
            return None
        start, sched, final = hit
        return WitnessLasso(start, sched, _idle_loop(ta, final))
    if pattern == "non-termination":
        starts = [s for s in initials if p_pred(s)]
        hit = _bfs(ta, starts, r_pred, q_pred, budget)
        if hit is None:
            return None
        start, sched, final = hit
        return WitnessLasso(start, sched, _idle_loop(ta, final))
    if pattern == "non-response":
        # First reach any state satisfying p & q, then stay inside q until
        # an r-state closes the fair loop.
        best: WitnessLasso | None = None
        hit = _bfs(ta, initials,
                   lambda s: p_pred(s) and q_pred(s), None, budget)
        seen_p: set[Configuration] = set()
        while hit is not None:
            start, sched, mid = hit
            seen_p.add(mid)
            tail = _bfs(ta, [mid], r_pred, q_pred, budget)
            if tail is not None:
                _, sched2, final = tail
                return WitnessLasso(start, sched + sched2,
                                    _idle_loop(ta, final))
            hit = _bfs(ta, initials,
                       lambda s: p_pred(s) and q_pred(s) and s not in seen_p,
                       None, budget)
        return best
    raise ValueError(f"unknown oracle pattern {pattern!r}")
