"""Specification language: parsing, canonical form, cut graphs, witnesses."""
import pytest

from thresholdmc import eltl
from thresholdmc.counter import Configuration, Transition
from thresholdmc.eltl import (LOOP_END, LOOP_START, SpecError, build_witness,
                              canonicalize, check_witness, classify,
                              classify_pattern, cut_graph, eval_on_lasso,
                              eval_prop, is_cut_function, node_id_str,
                              parse_formula, parse_spec_file, render,
                              render_canonical, syntax_tree,
                              topological_orderings)
from thresholdmc.ta import parse_ta

TOY = parse_ta(
    "ta TOY\nparams n\nresilience n >= 1\nsize n\nshared x\n"
    "locations a b c d e\ninitial a\nrule r1 a -> b\n")

FIG_FORMULA = "F ([a]!=0 & F [d]!=0 & F [e]!=0 & G [b]!=0 & G F [c]!=0)"


# ---------------------------------------------------------------------------
# Parsing and rendering
# ---------------------------------------------------------------------------

def test_parse_render_round_trip(strb, strb_specs):
    for phi in strb_specs.values():
        assert parse_formula(render(phi), strb) == phi


def test_parse_spec_file_names(strb_specs):
    assert set(strb_specs) == {"unforg", "corr", "relay"}


def test_parse_counter_atoms(strb):
    phi = parse_formula("[l0,l1]=0", strb)
    assert isinstance(phi, eltl.CounterEq0)
    sigma = Configuration((0, 0, 3, 0), (0,), (4, 1, 1))
    assert eval_prop(strb, sigma, phi)
    assert not eval_prop(strb, sigma, parse_formula("[l2]=0", strb))
    assert eval_prop(strb, sigma, parse_formula("[l2]!=0", strb))


def test_parse_guard_atoms_and_implication(strb):
    phi = parse_formula("x >= t+1 -> [l0]=0", strb)
    low = Configuration((1, 0, 0, 0), (0,), (4, 1, 1))
    high = Configuration((1, 0, 0, 0), (5,), (4, 1, 1))
    assert eval_prop(strb, low, phi)      # antecedent false
    assert not eval_prop(strb, high, phi)


def test_parse_errors(strb):
    with pytest.raises(SpecError):
        parse_formula("[nowhere]=0", strb)
    with pytest.raises(SpecError):
        parse_formula("F F", strb)


def test_classify(strb, strb_specs):
    assert classify(parse_formula("[l0]=0", strb)) == "cform"
    assert classify(parse_formula("x >= t+1", strb)) == "gform"
    assert classify(parse_formula("x >= t+1 -> [l0]=0", strb)) == "pform"
    assert classify(strb_specs["unforg"]) == "temporal"
    assert eltl.is_propositional(parse_formula("[l0]=0", strb))
    assert not eltl.is_propositional(strb_specs["corr"])


# ---------------------------------------------------------------------------
# Canonical form and the syntax tree
# ---------------------------------------------------------------------------

def test_canonicalize_preserves_structure(strb, strb_specs):
    # re-canonicalizing the canonical formula yields the same cut graph
    for phi in strb_specs.values():
        canon = canonicalize(phi)
        again = canonicalize(canon.to_formula())
        g1 = cut_graph(syntax_tree(canon))
        g2 = cut_graph(syntax_tree(again))
        assert g1.vertices == g2.vertices
        assert g1.edges == g2.edges
        assert render_canonical(canon)
        assert render_canonical(again)


def test_fig_formula_tree_has_fourteen_nodes():
    phi = parse_formula(FIG_FORMULA, TOY)
    tree = syntax_tree(canonicalize(phi))
    ids = sorted(node_id_str(i) for i in tree.nodes)
    assert len(ids) == 14
    assert ids == ["0", "0.0", "0.1", "0.1.0", "0.1.1", "0.2", "0.2.0",
                   "0.2.1", "0.3", "0.3.0", "0.3.1", "0.3.1.0", "0.3.1.1",
                   "0.3.2"]


def test_fig_formula_cut_graph():
    phi = parse_formula(FIG_FORMULA, TOY)
    graph = cut_graph(syntax_tree(canonicalize(phi)))
    assert set(graph.vertices) == {"0", "0.1", "0.2", "0.3.1",
                                   LOOP_START, LOOP_END}
    assert set(graph.edges) == {
        (LOOP_START, LOOP_END),
        ("0", LOOP_START), ("0.1", LOOP_START), ("0.2", LOOP_START),
        (LOOP_START, "0.3.1"), ("0.3.1", LOOP_END),
        ("0", "0.1"), ("0", "0.2"),
    }
    assert graph.covered == {"0": False, "0.1": False, "0.2": False,
                             "0.3.1": True}


def test_fig_formula_has_exactly_two_orderings():
    phi = parse_formula(FIG_FORMULA, TOY)
    graph = cut_graph(syntax_tree(canonicalize(phi)))
    orders = list(topological_orderings(graph.vertices, graph.edges))
    assert orders == [
        ("0", "0.1", "0.2", LOOP_START, "0.3.1", LOOP_END),
        ("0", "0.2", "0.1", LOOP_START, "0.3.1", LOOP_END),
    ]


def test_bare_f_root():
    phi = parse_formula("F [b]!=0", TOY)
    graph = cut_graph(syntax_tree(canonicalize(phi)))
    assert "0" in graph.f_formula
    assert ("0", LOOP_START) in graph.edges


# ---------------------------------------------------------------------------
# Lasso evaluation
# ---------------------------------------------------------------------------

def _lasso(strb):
    start = Configuration((2, 1, 0, 0), (0,), (4, 1, 1))
    prefix = (Transition(strb.rules[0], 1),   # r1: l1 -> l2, x+=1
              Transition(strb.rules[1], 1),   # r2: l0 -> l2, x+=1
              Transition(strb.rules[3], 1))   # r4: l2 -> l3
    loop = (Transition(strb.rules[7], 1),)    # r8: self-loop at l3
    return start, prefix, loop


def test_eval_on_lasso(strb):
    start, prefix, loop = _lasso(strb)
    f_accept = parse_formula("F [l3]!=0", strb)
    g_never = parse_formula("G [l3]=0", strb)
    assert eval_on_lasso(strb, start, prefix, loop, f_accept)
    assert not eval_on_lasso(strb, start, prefix, loop, g_never)
    assert eval_on_lasso(strb, start, prefix, loop,
                         parse_formula("F G [l3]!=0", strb))
    assert eval_on_lasso(strb, start, prefix, loop,
                         parse_formula("[l0]!=0 & F [l1]=0", strb))


def test_eval_on_lasso_empty_loop_stutters(strb):
    start, prefix, _ = _lasso(strb)
    assert eval_on_lasso(strb, start, prefix, (),
                         parse_formula("F G [l3]!=0", strb))


def test_is_cut_function():
    phi = parse_formula("F [b]!=0", TOY)
    graph = cut_graph(syntax_tree(canonicalize(phi)))
    assert is_cut_function(graph, {LOOP_START: 2, LOOP_END: 3, "0": 1}, 2, 2)
    # the loop-start cut must point at the loop
    assert not is_cut_function(graph, {LOOP_START: 0, LOOP_END: 3, "0": 0},
                               2, 2)
    # edges must be respected
    assert not is_cut_function(graph, {LOOP_START: 2, LOOP_END: 3, "0": 3},
                               2, 2)


def test_check_and_build_witness(strb):
    start, prefix, loop = _lasso(strb)
    phi = parse_formula("F [l3]!=0", strb)
    result = build_witness(strb, start, prefix, loop, phi)
    assert result is not None
    new_prefix, zeta = result
    assert check_witness(strb, start, new_prefix, loop, phi, zeta)
    assert eval_on_lasso(strb, start, new_prefix, loop, phi)


def test_build_witness_fails_on_false_formula(strb):
    start, prefix, loop = _lasso(strb)
    phi = parse_formula("F [l1]!=0 & G [l1]!=0", strb)
    assert build_witness(strb, start, prefix, loop, phi) is None


def test_build_witness_on_oracle_lasso(strb_weak):
    from thresholdmc import benchmarks, verifier
    specs = parse_spec_file(benchmarks.load("strb.spec"), strb_weak)
    phi = specs["unforg"]
    lasso = verifier.oracle_for_formula(strb_weak, (4, 1, 2), phi)
    result = build_witness(strb_weak, lasso.start, lasso.prefix,
                           lasso.loop, phi)
    assert result is not None
    new_prefix, zeta = result
    assert zeta == {LOOP_START: 3, LOOP_END: 3, "0.1": 3}
    assert check_witness(strb_weak, lasso.start, new_prefix, lasso.loop,
                         phi, zeta)


# ---------------------------------------------------------------------------
# Oracle patterns
# ---------------------------------------------------------------------------

def test_classify_pattern_kinds(strb_specs):
    assert classify_pattern(strb_specs["unforg"]).kind == "unsafety"
    assert classify_pattern(strb_specs["corr"]).kind == "non-termination"
    assert classify_pattern(strb_specs["relay"]).kind == "non-response"


def test_pattern_components(strb, strb_specs):
    pattern = classify_pattern(strb_specs["unforg"])
    sigma = Configuration((3, 0, 0, 0), (0,), (4, 1, 1))
    assert eval_prop(strb, sigma, pattern.p)
    assert not eval_prop(strb, sigma, pattern.q)   # q is the bad region
