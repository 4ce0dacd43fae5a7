"""Schedule reduction: thread decompositions of steady schedules and the
representative-schedule constructions used to shorten lassos."""
from __future__ import annotations

from dataclasses import dataclass

from .counter import (Configuration, Schedule, Transition, apply,
                      apply_schedule)
from .ta import FlowClasses, ThresholdAutomaton, flow_classes


class ReductionError(Exception):
    pass


# ---------------------------------------------------------------------------
# Thread decomposition of factor-1 schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Naming:
    """Assignment of every schedule position to a process thread."""
    thread_of: tuple[int, ...]
    threads: tuple[tuple[int, ...], ...]  # thread id -> positions

    def thread_schedule(self, schedule: Schedule, tid: int) -> Schedule:
        return tuple(schedule[i] for i in self.threads[tid])


def decompose(ta: ThresholdAutomaton, sigma: Configuration,
              schedule: Schedule) -> Naming:
    """Greedy thread naming: each transition extends the lowest-numbered
    thread currently parked at its source location, opening a new thread
    when none exists."""
    current_loc: list[str] = []  # thread id -> location after last move
    threads: list[list[int]] = []
    thread_of: list[int] = []
    for pos, t in enumerate(schedule):
        if t.factor != 1:
            raise ReductionError(
                f"decompose expects factor-1 transitions, got {t.factor}")
        tid = None
        for cand, loc in enumerate(current_loc):
            if loc == t.rule.from_loc:
                tid = cand
                break
        if tid is None:
            tid = len(threads)
            threads.append([])
            current_loc.append(t.rule.from_loc)
        threads[tid].append(pos)
        current_loc[tid] = t.rule.to_loc
        thread_of.append(tid)
    return Naming(tuple(thread_of),
                  tuple(tuple(t) for t in threads))


def validate_naming(ta: ThresholdAutomaton, sigma: Configuration,
                    schedule: Schedule, naming: Naming) -> bool:
    """Check the naming conditions: threads are chained, and the number of
    threads opened at each location fits its initial counter."""
    if len(naming.thread_of) != len(schedule):
        return False
    opened: dict[str, int] = {}
    for positions in naming.threads:
        if not positions or list(positions) != sorted(positions):
            return False
        first = schedule[positions[0]].rule
        opened[first.from_loc] = opened.get(first.from_loc, 0) + 1
        loc = first.from_loc
        for pos in positions:
            rule = schedule[pos].rule
            if rule.from_loc != loc or schedule[pos].factor != 1:
                return False
            loc = rule.to_loc
    for loc, count in opened.items():
        if count > sigma.kappa[ta.loc_index(loc)]:
            return False
    covered = sorted(p for t in naming.threads for p in t)
    return covered == list(range(len(schedule)))


def thread_locations(ta: ThresholdAutomaton, schedule: Schedule,
                     positions: tuple[int, ...]) -> list[str]:
    """All locations a thread visits, in order (source first)."""
    locs = [schedule[positions[0]].rule.from_loc]
    for pos in positions:
        locs.append(schedule[pos].rule.to_loc)
    return locs


def classify_thread(ta: ThresholdAutomaton, schedule: Schedule,
                    positions: tuple[int, ...], locs: frozenset[str]) -> str:
    """Type of a thread relative to a location set:
    A entirely inside, B inside to outside, C outside to inside,
    D outside to outside passing through, E inside to inside leaving in
    the middle, F never inside."""
    visited = thread_locations(ta, schedule, positions)
    inside = [loc in locs for loc in visited]
    if all(inside):
        return "A"
    if not any(inside):
        return "F"
    first, last = inside[0], inside[-1]
    if first and last:
        return "E"
    if first:
        return "B"
    if last:
        return "C"
    return "D"


def move_thread_front(ta: ThresholdAutomaton, sigma: Configuration,
                      schedule: Schedule, naming: Naming, tid: int
                      ) -> Schedule:
    """Reorder the schedule so the given thread runs first; the relative
    order of all other transitions is preserved."""
    mine = set(naming.threads[tid])
    head = [schedule[i] for i in naming.threads[tid]]
    tail = [t for i, t in enumerate(schedule) if i not in mine]
    out = tuple(head + tail)
    apply_schedule(ta, sigma, out)  # raises NotApplicable if the swap fails
    return out


# ---------------------------------------------------------------------------
# srep: sort-and-compress representative of a steady schedule
# ---------------------------------------------------------------------------

def _cycle_order(ta: ThresholdAutomaton, members: tuple[int, ...]
                 ) -> list[int]:
    """Rules of a cyclic flow class in cycle order, starting at the
    smallest rule index."""
    if len(members) == 1:
        return list(members)
    succ: dict[str, int] = {}
    for idx in members:
        succ[ta.rules[idx].from_loc] = idx
    order = [min(members)]
    while len(order) < len(members):
        order.append(succ[ta.rules[order[-1]].to_loc])
    return order


def _replace_loop(ta: ThresholdAutomaton, start: Configuration,
                  block: list[Transition], members: tuple[int, ...]
                  ) -> tuple[list[Transition], Configuration]:
    """Replace the transitions of one cyclic flow class with at most two
    sweeps around the cycle reaching the same configuration."""
    end = apply_schedule(ta, start, tuple(block)).final
    # self-loops on a cycle carry no update, so they preserve the
    # configuration and can be dropped from the sweeps
    ring = tuple(r for r in members if not ta.rules[r].is_self_loop)
    block = [t for t in block if not t.rule.is_self_loop]
    if not ring:
        if start != end:
            raise ReductionError("self-loop class changed the configuration")
        return [], end
    order = _cycle_order(ta, ring)
    j = len(order)
    present = {t.rule.idx for t in block}
    replaced: list[Transition] = []
    cur = start
    if all(r in present for r in order):
        for i in range(2 * j):
            rule = ta.rules[order[i % j]]
            li = ta.loc_index(rule.from_loc)
            if i < j:
                f = cur.kappa[li] - min(start.kappa[li], end.kappa[li])
            else:
                f = cur.kappa[li] - end.kappa[li]
            if f < 0:
                raise ReductionError("negative factor in loop replacement")
            if f > 0:
                t = Transition(rule, f)
                cur = apply(ta, cur, t)
                replaced.append(t)
    else:
        # no process crosses the first missing rule, so one pass over the
        # later rules followed by one over the earlier ones suffices
        missing = next(i for i, r in enumerate(order) if r not in present)
        totals = {r: sum(t.factor for t in block if t.rule.idx == r)
                  for r in order}
        for i in range(2 * j):
            pos = i % j
            if missing < i < j or j <= i < j + missing:
                f = totals[order[pos]]
                if f > 0:
                    t = Transition(ta.rules[order[pos]], f)
                    cur = apply(ta, cur, t)
                    replaced.append(t)
    if cur != end:
        raise ReductionError("loop replacement did not reach the target")
    return replaced, end


def srep(ta: ThresholdAutomaton, sigma: Configuration, schedule: Schedule,
         flow: FlowClasses | None = None) -> Schedule:
    """Representative of a steady schedule: stable-sort by the linear order
    on flow classes, merge runs of the same rule, and replace each cyclic
    class by at most two sweeps around its cycle. Length <= 2 |R|."""
    if flow is None:
        flow = flow_classes(ta)
    target = apply_schedule(ta, sigma, schedule).final
    trans = [t for t in schedule if t.factor > 0]
    trans.sort(key=lambda t: flow.position(t.rule.idx))
    out: list[Transition] = []
    cur = sigma
    i = 0
    while i < len(trans):
        cls = flow.class_of[trans[i].rule.idx]
        j = i
        while j < len(trans) and flow.class_of[trans[j].rule.idx] == cls:
            j += 1
        block = trans[i:j]
        members = flow.members[cls]
        is_cycle = (len(members) > 1
                    or ta.rules[members[0]].is_self_loop)
        if is_cycle:
            replaced, cur = _replace_loop(ta, cur, block, members)
            out.extend(replaced)
        else:
            total = sum(t.factor for t in block)
            t = Transition(block[0].rule, total)
            cur = apply(ta, cur, t)
            out.append(t)
        i = j
    if cur != target:
        raise ReductionError("srep did not reach the target configuration")
    return tuple(out)


# ---------------------------------------------------------------------------
# Representatives preserving counter-shape invariants
# ---------------------------------------------------------------------------

def _prefix_holds_disj(ta: ThresholdAutomaton, configs: list[Configuration],
                       locs: frozenset[str]) -> bool:
    idxs = [ta.loc_index(l) for l in sorted(locs)]
    return all(any(cfg.kappa[i] > 0 for i in idxs) for cfg in configs)


def _prefix_holds_zero(ta: ThresholdAutomaton, configs: list[Configuration],
                       locs: frozenset[str]) -> bool:
    idxs = [ta.loc_index(l) for l in sorted(locs)]
    return all(all(cfg.kappa[i] == 0 for i in idxs) for cfg in configs)


@dataclass(frozen=True)
class Certificate:
    """How a representative was built, for inspection and reporting."""
    construction: str          # "boring", "case1", "case2", "case3"
    thread_types: tuple[str, ...]
    pieces: tuple[Schedule, ...]


def repr_disjunction(ta: ThresholdAutomaton, sigma: Configuration,
                     schedule: Schedule, locs: frozenset[str],
                     flow: FlowClasses | None = None,
                     with_certificate: bool = False):
    """Representative of a steady factor-1 schedule preserving the
    invariant 'some counter in locs is nonzero at every prefix'.
    Length <= 6 |R|."""
    if flow is None:
        flow = flow_classes(ta)
    configs = apply_schedule(ta, sigma, schedule).configs
    if not _prefix_holds_disj(ta, configs, locs):
        raise ReductionError("input schedule violates the invariant")

    def finish(construction, types, pieces):
        out = tuple(t for piece in pieces for t in piece)
        final = apply_schedule(ta, sigma, out)
        if final.final != configs[-1]:
            raise ReductionError("representative misses the target")
        if not _prefix_holds_disj(ta, final.configs, locs):
            raise ReductionError("representative violates the invariant")
        if with_certificate:
            return out, Certificate(construction, types, pieces)
        return out

    # boring case: one location stays occupied throughout
    for loc in sorted(locs):
        li = ta.loc_index(loc)
        if all(cfg.kappa[li] > 0 for cfg in configs):
            return finish("boring", (), (srep(ta, sigma, schedule, flow),))

    naming = decompose(ta, sigma, schedule)
    types = tuple(classify_thread(ta, schedule, positions, locs)
                  for positions in naming.threads)

    def split_off(tid: int) -> tuple[Schedule, Schedule]:
        reordered = move_thread_front(ta, sigma, schedule, naming, tid)
        head_len = len(naming.threads[tid])
        return reordered[:head_len], reordered[head_len:]

    # case 1: a thread that never leaves locs runs first
    for tid, ty in enumerate(types):
        if ty == "A":
            head, tail = split_off(tid)
            mid = apply_schedule(ta, sigma, head).final
            return finish("case1", types,
                          (srep(ta, sigma, head, flow),
                           srep(ta, mid, tail, flow)))

    # case 2: a thread ending inside locs runs first, while another thread
    # starting inside locs keeps the invariant before it completes
    waiting = [tid for tid, ty in enumerate(types) if ty in ("B", "E")]
    for tid, ty in enumerate(types):
        if ty in ("C", "E") and any(w != tid for w in waiting):
            head, tail = split_off(tid)
            mid = apply_schedule(ta, sigma, head).final
            return finish("case2", types,
                          (srep(ta, sigma, head, flow),
                           srep(ta, mid, tail, flow)))

    # case 3: a passing-through thread covers the gap left by a thread
    # that leaves locs in the middle
    e_tid = next((tid for tid, ty in enumerate(types) if ty == "E"), None)
    d_tid = next((tid for tid, ty in enumerate(types) if ty == "D"), None)
    if e_tid is not None and d_tid is not None:
        d_positions = naming.threads[d_tid]
        split = next(k + 1 for k, pos in enumerate(d_positions)
                     if schedule[pos].rule.to_loc in locs)
        part1 = tuple(schedule[p] for p in d_positions[:split])
        part2 = tuple(schedule[p] for p in d_positions[split:])
        e_sched = naming.thread_schedule(schedule, e_tid)
        skip = set(naming.threads[d_tid]) | set(naming.threads[e_tid])
        rest = tuple(t for i, t in enumerate(schedule) if i not in skip)
        c1 = apply_schedule(ta, sigma, part1).final
        c2 = apply_schedule(ta, c1, e_sched).final
        return finish("case3", types,
                      (srep(ta, sigma, part1, flow),
                       srep(ta, c1, e_sched, flow),
                       srep(ta, c2, part2 + rest, flow)))
    raise ReductionError("no representative construction applies")


def repr_all_zero(ta: ThresholdAutomaton, sigma: Configuration,
                  schedule: Schedule, locs: frozenset[str],
                  flow: FlowClasses | None = None) -> Schedule:
    """Representative preserving 'all counters in locs stay zero'.
    Length <= 2 |R|."""
    configs = apply_schedule(ta, sigma, schedule).configs
    if not _prefix_holds_zero(ta, configs, locs):
        raise ReductionError("input schedule violates the invariant")
    out = srep(ta, sigma, schedule, flow)
    if not _prefix_holds_zero(ta, apply_schedule(ta, sigma, out).configs,
                              locs):
        raise ReductionError("representative violates the invariant")
    return out


def scale_config(sigma: Configuration, mu: int) -> Configuration:
    return Configuration(tuple(k * mu for k in sigma.kappa),
                         tuple(g * mu for g in sigma.g), sigma.p)


def repr_conj_disj(ta: ThresholdAutomaton, sigma: Configuration,
                   schedule: Schedule, locs_list: list[frozenset[str]],
                   mu: int, flow: FlowClasses | None = None) -> Schedule:
    """Representative, from the configuration scaled by the multiplier mu,
    preserving a conjunction of disjunctive invariants: run srep of the
    schedule once, then srep of its (mu-1)-fold repetition.
    Length <= 4 |R|."""
    if flow is None:
        flow = flow_classes(ta)
    configs = apply_schedule(ta, sigma, schedule).configs
    for locs in locs_list:
        if not _prefix_holds_disj(ta, configs, locs):
            raise ReductionError("input schedule violates an invariant")
    scaled = scale_config(sigma, mu)
    first = srep(ta, scaled, schedule, flow)
    mid = apply_schedule(ta, scaled, first).final
    repeated = schedule * (mu - 1)
    second = srep(ta, mid, repeated, flow)
    out = first + second
    final = apply_schedule(ta, scaled, out)
    target = apply_schedule(ta, scaled, schedule * mu).final
    if final.final != target:
        raise ReductionError("representative misses the scaled target")
    for locs in locs_list:
        if not _prefix_holds_disj(ta, final.configs, locs):
            raise ReductionError("representative violates an invariant")
    return out
