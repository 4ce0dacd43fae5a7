"""Counter-system semantics: configurations, accelerated transitions, BFS."""
import pytest

from thresholdmc import eltl
from thresholdmc.counter import (BudgetExceeded, Configuration, NotApplicable,
                                 Transition, apply, apply_schedule,
                                 enumerate_reachable, initial_configs,
                                 is_applicable, is_unlocked, oracle_check,
                                 successors)
from thresholdmc.ta import parse_ta

CRASH = parse_ta(
    "ta CRASH\nparams n f\nresilience (n > f) & (f >= 0)\nsize n\nshared x\n"
    "locations a b\ninitial a\n"
    "rule r1 a -> b when x < f do x+=1\n")


def _cfg(ta, kappa, g, p):
    return Configuration(tuple(kappa), tuple(g), tuple(p))


# ---------------------------------------------------------------------------
# Initial configurations
# ---------------------------------------------------------------------------

def test_initial_configs_are_compositions(strb):
    configs = list(initial_configs(strb, (4, 1, 1)))
    # N = n - f = 3 processes split over the two initial locations
    assert len(configs) == 4
    for c in configs:
        assert sum(c.kappa) == 3
        assert c.kappa[2] == c.kappa[3] == 0
        assert c.g == (0,)
        assert c.p == (4, 1, 1)
    assert len(set(configs)) == 4


def test_initial_configs_reject_inadmissible(strb):
    with pytest.raises(ValueError):
        list(initial_configs(strb, (3, 1, 1)))


# ---------------------------------------------------------------------------
# Applicability and acceleration
# ---------------------------------------------------------------------------

def test_lower_guard_blocks_until_risen(strb):
    sigma = _cfg(strb, (2, 1, 0, 0), (0,), (4, 1, 1))
    r2 = Transition(strb.rules[1], 1)   # needs x >= t+1-f = 1
    assert not is_applicable(strb, sigma, r2)
    r1 = Transition(strb.rules[0], 1)   # unguarded, bumps x
    sigma2 = apply(strb, sigma, r1)
    assert sigma2.g == (1,)
    assert sigma2.kappa == (2, 0, 1, 0)
    assert is_applicable(strb, sigma2, r2)


def test_upper_guard_limits_acceleration():
    # x < f with x starting at 0 and f = 3: the guard must hold at every
    # intermediate shift, so factor 3 fires but factor 4 does not
    sigma = _cfg(CRASH, (5, 0), (0,), (5, 3))
    assert is_unlocked(CRASH, sigma, Transition(CRASH.rules[0], 3))
    assert not is_unlocked(CRASH, sigma, Transition(CRASH.rules[0], 4))
    out = apply(CRASH, sigma, Transition(CRASH.rules[0], 3))
    assert out.kappa == (2, 3) and out.g == (3,)


def test_factor_zero_always_applicable():
    sigma = _cfg(CRASH, (0, 0), (7,), (5, 3))
    t = Transition(CRASH.rules[0], 0)
    assert is_applicable(CRASH, sigma, t)
    assert apply(CRASH, sigma, t) == sigma


def test_acceleration_equals_iteration():
    sigma = _cfg(CRASH, (5, 0), (0,), (5, 3))
    accelerated = apply(CRASH, sigma, Transition(CRASH.rules[0], 3))
    stepped = sigma
    for _ in range(3):
        stepped = apply(CRASH, stepped, Transition(CRASH.rules[0], 1))
    assert accelerated == stepped


def test_counter_capacity_limits_factor(strb):
    sigma = _cfg(strb, (2, 1, 0, 0), (0,), (4, 1, 1))
    assert is_applicable(strb, sigma, Transition(strb.rules[0], 1))
    assert not is_applicable(strb, sigma, Transition(strb.rules[0], 2))


def test_apply_raises_on_inapplicable(strb):
    sigma = _cfg(strb, (2, 1, 0, 0), (0,), (4, 1, 1))
    with pytest.raises(NotApplicable):
        apply(strb, sigma, Transition(strb.rules[1], 1))


def test_apply_schedule_path(strb):
    sigma = _cfg(strb, (2, 1, 0, 0), (0,), (4, 1, 1))
    sched = (Transition(strb.rules[0], 1),   # r1: l1 -> l2, x+=1
             Transition(strb.rules[1], 1),   # r2: l0 -> l2, x+=1
             Transition(strb.rules[3], 1))   # r4: l2 -> l3
    path = apply_schedule(strb, sigma, sched)
    assert len(path.configs) == 4
    assert path.configs[0] == sigma
    assert path.final.kappa == (1, 0, 1, 1)
    assert path.final.g == (2,)
    with pytest.raises(NotApplicable):
        apply_schedule(strb, sigma, sched[::-1])


def test_self_loops_preserve_configuration(strb):
    sigma = _cfg(strb, (2, 1, 0, 0), (0,), (4, 1, 1))
    assert apply(strb, sigma, Transition(strb.rules[5], 1)) == sigma


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------

def test_successors_are_deterministic(strb):
    sigma = _cfg(strb, (2, 1, 0, 0), (0,), (4, 1, 1))
    succ = successors(strb, sigma)
    assert succ == successors(strb, sigma)
    assert all(t.factor == 1 for t, _ in succ)


def test_enumerate_reachable_budget(strb):
    with pytest.raises(BudgetExceeded):
        enumerate_reachable(strb, (4, 1, 1), budget=3)
    graph = enumerate_reachable(strb, (4, 1, 1), budget=10 ** 5)
    assert len(graph.edges) > 4
    assert len(graph.initials) == 4


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------

def test_oracle_unsafety_witness(strb_weak):
    specs = eltl.parse_spec_file(
        open_spec(), strb_weak)
    phi = specs["unforg"]
    pattern = eltl.classify_pattern(phi)
    assert pattern.kind == "unsafety"
    lasso = oracle_check(
        strb_weak, (4, 1, 2), pattern.kind,
        lambda s: eltl.eval_prop(strb_weak, s, pattern.p),
        lambda s: eltl.eval_prop(strb_weak, s, pattern.q),
        lambda s: eltl.eval_prop(strb_weak, s, pattern.r))
    assert lasso is not None
    final = apply_schedule(strb_weak, lasso.start, lasso.prefix).final
    assert final.kappa[strb_weak.loc_index("l3")] > 0
    assert lasso.loop  # the lasso part is non-empty


def test_manual_unforgeability_run(strb_weak):
    # under the weakened resilience condition f may exceed t, so the
    # initial echo threshold t+1-f is already met at x = 0: a correct
    # process can echo and then accept without any initiator
    start = _cfg(strb_weak, (2, 0, 0, 0), (0,), (4, 1, 2))
    sched = (Transition(strb_weak.rules[1], 1),   # r2: l0 -> l2
             Transition(strb_weak.rules[3], 1))   # r4: l2 -> l3
    final = apply_schedule(strb_weak, start, sched).final
    assert final.kappa[strb_weak.loc_index("l3")] == 1


def test_oracle_finds_nothing_under_full_resilience(strb, strb_specs):
    pattern = eltl.classify_pattern(strb_specs["unforg"])
    lasso = oracle_check(
        strb, (4, 1, 1), pattern.kind,
        lambda s: eltl.eval_prop(strb, s, pattern.p),
        lambda s: eltl.eval_prop(strb, s, pattern.q),
        lambda s: eltl.eval_prop(strb, s, pattern.r))
    assert lasso is None


def open_spec():
    from thresholdmc import benchmarks
    return benchmarks.load("strb.spec")


def test_witness_lasso_json(strb_weak):
    from thresholdmc import verifier
    specs = eltl.parse_spec_file(open_spec(), strb_weak)
    lasso = verifier.oracle_for_formula(strb_weak, (4, 1, 2), specs["unforg"])
    data = lasso.to_json(strb_weak)
    assert data["params"] == {"n": 4, "t": 1, "f": 2}
    assert data["states"][0]["g"] == {"x": 0}
    assert len(data["states"]) == len(lasso.prefix) + len(lasso.loop) + 1
