"""Guard contexts, the threshold graph, shape merging, multipliers."""
from thresholdmc import benchmarks, eltl, guards
from thresholdmc.counter import Configuration, Transition, apply_schedule
from thresholdmc.guards import (context_of, dedup_shapes, find_multiplier,
                                is_steady, merge_graphs, threshold_graph)
from thresholdmc.ta import parse_ta


def _cfg(kappa, g, p):
    return Configuration(tuple(kappa), tuple(g), tuple(p))


# ---------------------------------------------------------------------------
# Contexts
# ---------------------------------------------------------------------------

def test_context_of_initial_state(strb):
    ctx = context_of(strb, _cfg((2, 1, 0, 0), (0,), (4, 1, 1)))
    assert ctx.risen == frozenset()
    assert ctx.fallen == frozenset()


def test_context_grows_with_shared(strb):
    # thresholds at (4,1,1): t+1-f = 1 and n-t-f = 2
    low = context_of(strb, _cfg((2, 1, 0, 0), (1,), (4, 1, 1)))
    assert {g.render() for g in low.risen} == {"x >= -f + t + 1"}
    high = context_of(strb, _cfg((2, 1, 0, 0), (2,), (4, 1, 1)))
    assert {g.render() for g in high.risen} == {"x >= -f + t + 1",
                                                "x >= -f + n - t"}
    assert high.fallen == frozenset()


def test_context_monotone_along_runs(strb):
    sigma = _cfg((2, 1, 0, 0), (0,), (4, 1, 1))
    sched = (Transition(strb.rules[0], 1), Transition(strb.rules[1], 1),
             Transition(strb.rules[3], 1))
    configs = apply_schedule(strb, sigma, sched).configs
    for a, b in zip(configs, configs[1:]):
        ca, cb = context_of(strb, a), context_of(strb, b)
        assert ca.risen <= cb.risen and ca.fallen <= cb.fallen


def test_is_steady(strb):
    sigma = _cfg((2, 1, 0, 0), (0,), (4, 1, 1))
    # self-loops change nothing: steady
    assert is_steady(strb, sigma, (Transition(strb.rules[5], 1),))
    # r1 raises x across the t+1-f threshold: not steady
    assert not is_steady(strb, sigma, (Transition(strb.rules[0], 1),))
    # already above both thresholds nothing can toggle
    high = _cfg((2, 1, 0, 0), (5,), (4, 1, 1))
    assert is_steady(strb, high, (Transition(strb.rules[0], 1),
                                  Transition(strb.rules[1], 1)))


# ---------------------------------------------------------------------------
# Threshold graph
# ---------------------------------------------------------------------------

def test_threshold_graph_strb(strb):
    th = threshold_graph(strb)
    assert sorted(g.render() for g in th.representatives) == \
        ["x >= -f + n - t", "x >= -f + t + 1"]
    # crossing n-t-f implies having crossed t+1-f under n > 3t, t >= f
    assert [(a.render(), b.render()) for a, b in th.edges] == \
        [("x >= -f + t + 1", "x >= -f + n - t")]
    # every syntactic guard is its own representative here
    assert all(th.rep_of[g] == g for g in th.rep_of)


def test_threshold_graph_collapses_equivalent_guards():
    # under n = 4 the bounds n and 4 coincide, so the two syntactically
    # different guards toggle together and share one representative
    ta = parse_ta(
        "ta EQ\nparams n\nresilience n = 4\nsize n\nshared x\n"
        "locations a b c\ninitial a\n"
        "rule r1 a -> b when x >= n do x+=1\n"
        "rule r2 b -> c when x >= 4 do x+=1\n")
    th = threshold_graph(ta)
    assert len(th.representatives) == 1
    assert len(th.rep_of) == 2


def test_threshold_graph_pinned():
    pinned = parse_ta(benchmarks.load("pinned.ta"))
    th = threshold_graph(pinned)
    assert len(th.representatives) == 1
    assert th.edges == ()


# ---------------------------------------------------------------------------
# Merging with the cut graph and shape deduplication
# ---------------------------------------------------------------------------

def test_merge_graphs_strb_corr(strb, strb_specs):
    cut = eltl.cut_graph(eltl.syntax_tree(
        eltl.canonicalize(strb_specs["corr"])))
    merged = merge_graphs(cut, threshold_graph(strb))
    assert set(merged.guard_of) == {"guard0", "guard1"}
    assert ("guard1", "guard0") in merged.edges
    assert set(cut.vertices) <= set(merged.vertices)


def test_dedup_shapes_drops_guards_after_loop_start():
    guard_of = {"guard0": None}
    orders = [
        ("guard0", eltl.LOOP_START, eltl.LOOP_END),
        (eltl.LOOP_START, "guard0", eltl.LOOP_END),
        (eltl.LOOP_START, eltl.LOOP_END, "guard0"),
    ]
    shapes = dedup_shapes(orders, guard_of)
    assert shapes == [("guard0", eltl.LOOP_START, eltl.LOOP_END),
                      (eltl.LOOP_START, eltl.LOOP_END)]


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------

def test_find_multiplier_strb(strb):
    assert find_multiplier(strb) == 2


def test_find_multiplier_frb(frb):
    assert find_multiplier(frb) == 2


def test_find_multiplier_absent_for_pinned_rc():
    pinned = parse_ta(benchmarks.load("pinned.ta"))
    assert find_multiplier(pinned) is None
