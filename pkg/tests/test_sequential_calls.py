"""Two calls in sequence reuse the child pid: the child's DAG indices
continue across invocations, and unwinding interleaves the two call
histories correctly."""

import pytest

from cril.errors import parse_pid
from cril.ltsi import BACKWARD, FORWARD, Ltsi
from cril.syntax import parse_program
from cril.verify import explore, run_checks

TWICE = (
    "begin main\nskip\n-> c1\n\n"
    "c1 <- call sub -> c2\n\n"
    "c2 <-\nskip\n-> c3\n\n"
    "c3 <- call sub -> c4\n\n"
    "c4 <-\nskip\nend main\n\n"
    "begin sub\nk += 1\nend sub\n"
)


@pytest.fixture(scope="module")
def twice_ltsi():
    return Ltsi(parse_program(TWICE))


def run_to_end(ltsi):
    s = ltsi.initial_state()
    while not ltsi.is_final(s):
        moves = ltsi.enabled(s, FORWARD)
        assert len(moves) == 1
        s = ltsi.step(s, moves[0])
    return s


def test_child_node_indices_continue_across_calls(twice_ltsi):
    s = run_to_end(twice_ltsi)
    assert s.config.rho == {"k": 2}
    dag = s.dag
    # the child ran twice under the same pid: nodes (1,0) and (1,1),
    # chained on k across the two invocations
    assert ((1,), 0) in dag.nodes and ((1,), 1) in dag.nodes
    assert (None, "k", ((1,), 0)) in dag.write_edges
    assert ((((1,), 0)), "k", ((1,), 1)) in dag.write_edges
    assert dag.max_for(()) == 6  # skip, fork, merge, skip, fork, merge, skip


def test_unfork_allowed_despite_older_child_nodes(twice_ltsi):
    # walk forward until the second call just forked: the reborn child
    # sits at its begin with nodes from the first call still recorded
    ltsi = twice_ltsi
    s = ltsi.initial_state()
    for pid_s in ["e", "e", "1", "e", "e", "e"]:
        s, t = ltsi.step_pid(s, parse_pid(pid_s), FORWARD)
    assert s.config.processes[(1,)] == ("sub", "begin")
    assert s.dag.max_for((1,)) == 0  # first call's node survives

    # the parent may unfork (its own fork node is fresh and edgeless)
    backs = ltsi.enabled(s, BACKWARD)
    assert [(t.pid, t.kind) for t in backs] == [((), "fork")]
    back = ltsi.step(s, backs[0])
    assert (1,) not in back.config.processes
    assert back.dag.max_for((1,)) == 0  # untouched history of call one


def test_full_reversal_and_axioms():
    program = parse_program(TWICE)
    graph = explore(program)
    assert not graph.truncated
    for report in run_checks(graph, ["sp", "bti", "wf", "loop", "cc", "cs"]):
        assert report.ok, report.pretty()
    # deterministic single-track program: the graph is a line
    assert len(graph.forward_edges()) == graph.state_count() - 1
