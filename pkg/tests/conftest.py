"""Shared fixtures and randomized-instance generators."""
from __future__ import annotations

import random

import pytest

from thresholdmc import benchmarks, eltl
from thresholdmc.counter import Configuration, Transition, is_applicable
from thresholdmc.ta import Guard, LinearExpr, Rule, ThresholdAutomaton, \
    TRUE_RC, parse_ta, validate_ta


@pytest.fixture(scope="session")
def strb():
    return parse_ta(benchmarks.load("strb.ta"))


@pytest.fixture(scope="session")
def strb_weak():
    return parse_ta(benchmarks.load("strb_weak.ta"))


@pytest.fixture(scope="session")
def strb_n3t():
    return parse_ta(benchmarks.load("strb_n3t.ta"))


@pytest.fixture(scope="session")
def frb():
    return parse_ta(benchmarks.load("frb.ta"))


@pytest.fixture(scope="session")
def strb_specs(strb):
    return eltl.parse_spec_file(benchmarks.load("strb.spec"), strb)


# ---------------------------------------------------------------------------
# Random valid threshold automata
# ---------------------------------------------------------------------------

def random_ta(rng: random.Random, max_locs: int = 6,
              max_rules: int = 12) -> ThresholdAutomaton:
    """A random valid TA: an optional simple ring over the first locations
    (cycle rules carry no update), self-loops, and guarded forward rules.
    Guards are chosen so that they cannot change state along runs starting
    from shared variables at zero (always-risen lower bounds and unreachable
    upper bounds), which keeps every applicable schedule steady."""
    n_locs = rng.randint(2, max_locs)
    locs = [f"l{i}" for i in range(n_locs)]
    rules: list[Rule] = []

    ring = 0
    if n_locs >= 3 and rng.random() < 0.6:
        ring = rng.randint(2, min(4, n_locs))
    for i in range(ring):
        rules.append(Rule(len(rules), f"r{len(rules)}",
                          locs[i], locs[(i + 1) % ring]))

    def random_guards() -> tuple[tuple[Guard, ...], tuple[Guard, ...]]:
        choice = rng.random()
        if choice < 0.5:
            return (), ()
        if choice < 0.8:
            return (Guard("x", ">=", LinearExpr(-rng.randint(0, 3))),), ()
        return (), (Guard("x", "<", LinearExpr(10 ** 6)),)

    budget = rng.randint(0, max_rules - len(rules))
    attempts = 0
    while budget > 0 and attempts < 50:
        attempts += 1
        a = rng.randrange(n_locs)
        if rng.random() < 0.25:  # self-loop (a cycle: no update)
            rules.append(Rule(len(rules), f"r{len(rules)}",
                              locs[a], locs[a]))
            budget -= 1
            continue
        b = rng.randrange(n_locs)
        if a >= b or (a < ring and b < ring):
            continue  # keep every cycle simple
        lower, upper = random_guards()
        update = (("x", rng.randint(0, 2)),) if rng.random() < 0.6 else ()
        rules.append(Rule(len(rules), f"r{len(rules)}",
                          locs[a], locs[b], lower, upper, update))
        budget -= 1

    ta = ThresholdAutomaton(
        name="RAND", params=("n",), resilience=TRUE_RC,
        size_expr=LinearExpr.var("n"), shared=("x",),
        locations=tuple(locs), initial=(locs[0],), rules=tuple(rules))
    assert validate_ta(ta) == []
    return ta


def random_config(rng: random.Random, ta: ThresholdAutomaton,
                  max_count: int = 4) -> Configuration:
    kappa = tuple(rng.randint(0, max_count) for _ in ta.locations)
    p = (sum(kappa),)
    return Configuration(kappa, (0,) * len(ta.shared), p)


def random_schedule(rng: random.Random, ta: ThresholdAutomaton,
                    sigma: Configuration, max_len: int = 40):
    """A random applicable factor-1 schedule."""
    from thresholdmc.counter import apply
    out = []
    cur = sigma
    for _ in range(rng.randint(0, max_len)):
        candidates = [r for r in ta.rules
                      if is_applicable(ta, cur, Transition(r, 1))]
        if not candidates:
            break
        rule = rng.choice(candidates)
        t = Transition(rule, 1)
        out.append(t)
        cur = apply(ta, cur, t)
    return tuple(out)
