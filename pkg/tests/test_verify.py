import pytest

from cril.errors import parse_pid
from cril.ltsi import BACKWARD, FORWARD
from cril.machine import ProgTransition
from cril.syntax import parse_program
from cril.verify import (
    Edge,
    LtsGraph,
    check_bti,
    check_causal_liveness,
    check_causal_safety,
    check_loop,
    check_square_property,
    compute_events,
    explore,
    run_checks,
)


@pytest.fixture(scope="module")
def shared_graph(shared_program):
    return explore(shared_program)


@pytest.fixture(scope="module")
def racy_graph(racy_program):
    return explore(racy_program)


@pytest.fixture(scope="module")
def semaphore_graph(semaphore_program):
    return explore(semaphore_program)


# ---------------------------------------------------------------------------
# exploration
# ---------------------------------------------------------------------------

def test_explore_corpus_complete(shared_graph, racy_graph, semaphore_graph):
    for g in (shared_graph, racy_graph, semaphore_graph):
        assert not g.truncated
        assert g.state_count() < 10_000
        assert g.edge_count() > g.state_count()


def test_explore_single_block_program():
    # one begin/end block: two configurations joined by one step
    g = explore(parse_program("begin main\nskip\nend main"))
    assert g.state_count() == 2
    assert len(g.forward_edges()) == 1
    assert len(g.backward_edges()) == 1


def test_explore_two_block_main():
    g = explore(parse_program("begin main\nskip\n-> l\n\nl <-\nskip\nend main"))
    assert g.state_count() == 3
    assert len(g.forward_edges()) == 2


def test_explore_truncation_flag(shared_program):
    g = explore(shared_program, max_states=5)
    assert g.truncated
    report = check_square_property(g)
    assert not report.ok and "truncated" in str(report.counterexample)


def test_explore_strict_raises_with_graph(shared_program):
    from cril.verify import BoundExceeded

    with pytest.raises(BoundExceeded) as exc:
        explore(shared_program, max_states=5, strict=True)
    assert exc.value.graph.truncated
    assert exc.value.graph.state_count() == 5
    # unbounded strict exploration is fine
    assert not explore(shared_program, strict=True).truncated


def test_explore_deterministic(shared_program):
    g1 = explore(shared_program)
    g2 = explore(shared_program)
    assert [s.key() for s in g1.states] == [s.key() for s in g2.states]
    assert [(e.src, e.dst, e.transition) for e in g1.edges] == [
        (e.src, e.dst, e.transition) for e in g2.edges
    ]


def test_terminal_store_oracle(shared_graph):
    # exhaustive enumeration: x always ends at 2; y and z range over
    # 0..2 with the schedule (nine distinct terminal stores)
    finals = {
        (s.config.rho["x"], s.config.rho["y"], s.config.rho["z"])
        for s in shared_graph.states
        if shared_graph.ltsi.is_final(s)
    }
    assert finals == {(2, y, z) for y in (0, 1, 2) for z in (0, 1, 2)}


# ---------------------------------------------------------------------------
# axiom checks on the corpus
# ---------------------------------------------------------------------------

def test_axioms_on_corpus(shared_graph, racy_graph, semaphore_graph):
    for g in (shared_graph, racy_graph, semaphore_graph):
        for report in run_checks(g, ["sp", "bti", "wf", "loop", "cpi", "cc", "ire"]):
            assert report.ok, report.pretty()


def test_bti_at_c5(shared_ltsi, shared_graph):
    # the two backward transitions after five steps are label-independent
    states, _ = shared_ltsi.run_schedule(
        shared_ltsi.initial_state(),
        [parse_pid(x) for x in ["e", "e", "1", "2", "3"]],
        FORWARD,
    )
    backs = shared_ltsi.enabled(states[-1], BACKWARD)
    assert len(backs) == 2
    from cril.ltsi import independent

    assert independent(backs[0], backs[1])


def test_wf_deltas(shared_graph):
    for e in shared_graph.edges[:50]:
        before = shared_graph.states[e.src].dag.node_count()
        after = shared_graph.states[e.dst].dag.node_count()
        assert after - before == (1 if e.direction == FORWARD else -1)


def test_uncontrolled_rollback_store_not_reachable(shared_graph):
    for s in shared_graph.states:
        assert (s.config.rho["x"], s.config.rho["y"], s.config.rho["z"]) != (0, -1, -1)


def test_mixed_reachable_state_has_forward_witness(shared_ltsi, shared_graph):
    # reversing process 2 after five steps lands on a state never seen
    # in that forward execution; a forward schedule with process 3 before
    # process 2 produces exactly it
    ps = lambda xs: [parse_pid(x) for x in xs]
    states, _ = shared_ltsi.run_schedule(
        shared_ltsi.initial_state(), ps(["e", "e", "1", "2", "3"]), FORWARD
    )
    s_prime4, _ = shared_ltsi.step_pid(states[-1], (2,), BACKWARD)
    assert s_prime4.config.rho == {"x": 1, "y": 0, "z": 1}
    fwd_states, _ = shared_ltsi.run_schedule(
        shared_ltsi.initial_state(), ps(["e", "e", "1", "3"]), FORWARD
    )
    assert fwd_states[-1] == s_prime4
    assert any(s == s_prime4 for s in shared_graph.states)


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

def test_events_merge_commuting_b6_b7(shared_ltsi, shared_graph):
    g = shared_graph
    events = compute_events(g)
    # locate the post-b4 state and the two b6 edges around the b6/b7 square
    ps = lambda xs: [parse_pid(x) for x in xs]
    states, _ = shared_ltsi.run_schedule(
        shared_ltsi.initial_state(), ps(["e", "e", "1"]), FORWARD
    )
    post_b4 = states[-1]
    idx = next(i for i, s in enumerate(g.states) if s == post_b4)
    b6_edge = next(
        e for e in g.out_edges[idx] if e.direction == FORWARD and e.transition.block_id == 6
    )
    b7_edge = next(
        e for e in g.out_edges[idx] if e.direction == FORWARD and e.transition.block_id == 7
    )
    b6_after_b7 = next(
        e
        for e in g.out_edges[b7_edge.dst]
        if e.direction == FORWARD and e.transition.block_id == 6
    )
    assert events.class_of(b6_edge.id) == events.class_of(b6_after_b7.id)
    assert events.class_of(b6_edge.id) != events.class_of(b7_edge.id)


def test_root_transitions_are_singleton_events(shared_graph):
    events = compute_events(shared_graph)
    classes = events.classes()
    for e in shared_graph.edges:
        if e.transition.pid == ():
            assert classes[events.class_of(e.id)] == [e.id]


def test_ire(shared_graph, semaphore_graph):
    for g in (shared_graph, semaphore_graph):
        assert compute_events(g).check_ire().ok


# ---------------------------------------------------------------------------
# causal safety / liveness
# ---------------------------------------------------------------------------

def test_cs_on_corpus_bound12(shared_graph, semaphore_graph):
    for g in (shared_graph, semaphore_graph):
        report = check_causal_safety(g, bound=12)
        assert report.ok, report.pretty()
        assert report.details["bound"] == 12


def test_cl_on_shared_bound12(shared_graph):
    report = check_causal_liveness(shared_graph, bound=12)
    assert report.ok, report.pretty()


# ---------------------------------------------------------------------------
# synthetic fixtures with planted violations
# ---------------------------------------------------------------------------

def _t(pid, rd, wt, direction):
    return ProgTransition(pid, direction, "inst", 1, frozenset(rd), frozenset(wt))


def _graph(n_states, edge_specs):
    edges = []
    out = [[] for _ in range(n_states)]
    for src, dst, t in edge_specs:
        e = Edge(len(edges), src, dst, t)
        edges.append(e)
        out[src].append(e)
    return LtsGraph(None, None, list(range(n_states)), edges, out)


def test_sp_fixture_missing_corner():
    g = _graph(
        3,
        [
            (0, 1, _t((1,), {"x"}, {"x"}, FORWARD)),
            (0, 2, _t((2,), {"y"}, {"y"}, FORWARD)),
            # no completions: the square has a missing corner
        ],
    )
    report = check_square_property(g)
    assert not report.ok
    assert report.counterexample["problem"] == "missing completion"


def test_sp_fixture_not_cofinal():
    g = _graph(
        5,
        [
            (0, 1, _t((1,), {"x"}, {"x"}, FORWARD)),
            (0, 2, _t((2,), {"y"}, {"y"}, FORWARD)),
            (1, 3, _t((2,), {"y"}, {"y"}, FORWARD)),
            (2, 4, _t((1,), {"x"}, {"x"}, FORWARD)),  # lands elsewhere
        ],
    )
    report = check_square_property(g)
    assert not report.ok
    assert report.counterexample["problem"] == "completions are not cofinal"


def test_bti_fixture_dependent_backwards():
    g = _graph(
        3,
        [
            (0, 1, _t((1,), {"x"}, {"x"}, BACKWARD)),
            (0, 2, _t((2,), {"x"}, {"x"}, BACKWARD)),  # writes what 1 reads
        ],
    )
    report = check_bti(g)
    assert not report.ok


def test_cs_fixture_dependent_action_outstanding():
    # a: pid1 writes x; b: pid2 reads x (depends on a); yet a can be
    # undone right after b — causal safety must object
    a = _t((1,), {"x"}, {"x"}, FORWARD)
    a_rev = _t((1,), {"x"}, {"x"}, BACKWARD)
    b = _t((2,), {"x"}, set(), FORWARD)
    b_rev = _t((2,), {"x"}, set(), BACKWARD)
    g = _graph(
        3,
        [
            (0, 1, a),        # P -> Q
            (1, 0, a_rev),    # Q -> P
            (1, 2, b),        # Q -> R
            (2, 1, b_rev),    # R -> Q
            (2, 0, a_rev),    # R -> P : undoing a while b stands
        ],
    )
    report = check_causal_safety(g, bound=6)
    assert not report.ok
    assert report.counterexample["dependent"]


def test_cl_fixture_missing_undo():
    # a and b fully independent, but after b there is no way to undo a
    a = _t((1,), {"x"}, {"x"}, FORWARD)
    a_rev = _t((1,), {"x"}, {"x"}, BACKWARD)
    b = _t((2,), {"y"}, {"y"}, FORWARD)
    b_rev = _t((2,), {"y"}, {"y"}, BACKWARD)
    g = _graph(
        3,
        [
            (0, 1, a),
            (1, 0, a_rev),
            (1, 2, b),
            (2, 1, b_rev),
            # missing: an undo of a at state 2
        ],
    )
    report = check_causal_liveness(g, bound=6)
    assert not report.ok
    assert report.counterexample["problem"] == "undo transition missing"


def test_loop_fixture_missing_reverse():
    g = _graph(2, [(0, 1, _t((1,), {"x"}, {"x"}, FORWARD))])
    report = check_loop(g)
    assert not report.ok


# ---------------------------------------------------------------------------
# counterexample replay
# ---------------------------------------------------------------------------

def test_path_from_initial_is_replayable(shared_graph, shared_ltsi):
    target = shared_graph.state_count() - 1
    path = shared_graph.path_from_initial(target)
    s = shared_ltsi.initial_state()
    for t in path:
        s = shared_ltsi.step(s, t)
    assert s == shared_graph.states[target]
