"""Acceptance suite: one test per criterion, each printing a PASS line
with its measured time (run with -s or -v to see them).

Exact integer equality everywhere; the stated time budgets are asserted.
"""

import time

import pytest

from cril.adag import BOT
from cril.errors import parse_pid
from cril.ltsi import BACKWARD, FORWARD, Ltsi, RawLtsi, random_scheduler, run
from cril.verify import (
    check_bti,
    check_causal_consistency,
    check_causal_safety,
    check_loop,
    check_square_property,
    check_wf,
    compute_events,
    explore,
)

E = ()
GOLDEN = ["e", "e", "1", "2", "3", "1", "e", "e"]


def pids(names):
    return [parse_pid(n) for n in names]


def _report(name, started):
    print(f"ACCEPTANCE {name}: PASS ({time.perf_counter() - started:.2f}s)")


@pytest.fixture(scope="module")
def graphs(shared_program, racy_program, semaphore_program):
    return {
        "shared": explore(shared_program),
        "racy": explore(racy_program),
        "semaphore": explore(semaphore_program),
    }


def test_golden_trace_store_sequence(shared_ltsi):
    """The worked schedule produces its exact store sequence."""
    started = time.perf_counter()
    states, trace = shared_ltsi.run_schedule(
        shared_ltsi.initial_state(), pids(GOLDEN), FORWARD
    )
    stores = [(s.config.rho["x"], s.config.rho["y"], s.config.rho["z"]) for s in states]
    assert stores == [
        (0, 0, 0),  # initial
        (0, 0, 0),  # b1
        (0, 0, 0),  # b2 fork
        (1, 0, 0),  # b4
        (1, 1, 0),  # b6
        (1, 1, 1),  # b7
        (2, 1, 1),  # b5
        (2, 1, 1),  # b2 merge
        (2, 1, 1),  # b3
    ]
    assert [t.block_id for t in trace] == [1, 2, 4, 6, 7, 5, 2, 3]
    assert shared_ltsi.is_final(states[-1])
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    _report("golden-trace", started)


def test_uncontrolled_reversal_divergence(shared_program, shared_ltsi):
    """With the DAG disabled, a stale-read rollback ends x=0, y=-1,
    z=-1; with it enabled, every maximal backward schedule from the
    final state lands exactly on the initial state."""
    started = time.perf_counter()

    # basic semantics alone: reverse the subprocess reads before the
    # x-increments are undone
    raw = RawLtsi(shared_program)
    fwd, _ = raw.run_schedule(raw.initial_state(), pids(GOLDEN), FORWARD)
    back, _ = raw.run_schedule(
        fwd[-1], pids(["e", "e", "2", "3", "1", "1", "e", "e"]), BACKWARD
    )
    rho = back[-1].config.rho
    assert (rho["x"], rho["y"], rho["z"]) == (0, -1, -1)
    assert back[-1].config.processes == {E: ("main", "begin")}
    assert time.perf_counter() - started < 1.0

    # controlled semantics: exhaustive enumeration of all maximal
    # backward schedules
    t2 = time.perf_counter()
    states, _ = shared_ltsi.run_schedule(shared_ltsi.initial_state(), pids(GOLDEN), FORWARD)
    endpoints = set()
    stack = [states[-1]]
    seen = set()
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        moves = shared_ltsi.enabled(s, BACKWARD)
        if not moves:
            endpoints.add(s)
        for t in moves:
            stack.append(shared_ltsi.step(s, t))
    assert endpoints == {shared_ltsi.initial_state()}
    assert time.perf_counter() - t2 < 10.0
    _report("uncontrolled-vs-controlled-reversal", started)


def test_dag_shape_after_full_run(shared_ltsi):
    """The annotation DAG after the full forward schedule, exactly."""
    started = time.perf_counter()
    states, _ = shared_ltsi.run_schedule(shared_ltsi.initial_state(), pids(GOLDEN), FORWARD)
    dag = states[-1].dag
    assert dag.node_count() == 9
    assert dag.nodes == {
        BOT, (E, 0), (E, 1), (E, 2), (E, 3),
        ((1,), 0), ((1,), 1), ((2,), 0), ((3,), 0),
    }
    assert dag.write_edges == {
        (BOT, "x", ((1,), 0)),
        (((1,), 0), "x", ((1,), 1)),
        (BOT, "y", ((2,), 0)),
        (BOT, "z", ((3,), 0)),
    }
    assert dag.read_edges == {
        (((1,), 0), "x", ((2,), 0)),
        (((1,), 0), "x", ((3,), 0)),
    }
    _report("dag-shape", started)


def test_removability(shared_ltsi):
    """Removable nodes of the final DAG; after five steps the available
    reversals are exactly processes 2 and 3, and (1,0) is rejected."""
    started = time.perf_counter()
    states, _ = shared_ltsi.run_schedule(shared_ltsi.initial_state(), pids(GOLDEN), FORWARD)
    a8 = states[-1].dag
    assert a8.removable_nodes() == {(E, 3), ((1,), 1)}

    s5 = shared_ltsi.run_schedule(
        shared_ltsi.initial_state(), pids(["e", "e", "1", "2", "3"]), FORWARD
    )[0][-1]
    a5 = s5.dag
    # the DAG rejects (1,0): it has outgoing edges although it is last(x)
    assert a5.last("x") == ((1,), 0)
    assert ((1,), 0) not in a5.removable_nodes()
    assert not a5.backward_enabled((1,), {"x"}, {"x"})
    # the configuration may reverse either process 2 or process 3
    combined = shared_ltsi.enabled(s5, BACKWARD)
    assert {a5.top_node(t.pid) for t in combined} == {((2,), 0), ((3,), 0)}
    # on the DAG alone, the suspended fork node also qualifies; the
    # program side is what keeps epsilon waiting (ledgered reading)
    assert a5.removable_nodes() == {(E, 1), ((2,), 0), ((3,), 0)}
    _report("removability-B1-B3", started)


def test_airline_fault_reproduction(racy_ltsi):
    """Some explored schedule oversells; the recorded faulty execution
    replays row for row."""
    started = time.perf_counter()
    # a seeded run reaches the faulty terminal store
    result = run(racy_ltsi, racy_ltsi.initial_state(), random_scheduler(2))
    rho = result.final.config.rho
    assert result.outcome == "terminated"
    assert (rho["seats"], rho["agent1"], rho["agent2"]) == (-1, 2, 2)

    # the recorded faulty run: (pid, block, seats, agent1, agent2)
    rows = [
        ("e", 1, 3, 0, 0), ("e", 2, 3, 0, 0),
        ("1", 4, 3, 0, 0), ("2", 9, 3, 0, 0),
        ("1", 5, 3, 0, 0), ("1", 6, 2, 0, 0), ("1", 7, 2, 1, 0),
        ("2", 10, 2, 1, 0), ("2", 11, 1, 1, 0), ("2", 12, 1, 1, 1),
        ("2", 10, 1, 1, 1), ("1", 5, 1, 1, 1),
        ("2", 11, 0, 1, 1), ("1", 6, -1, 1, 1),
        ("2", 12, -1, 1, 2), ("2", 10, -1, 1, 2), ("2", 13, -1, 1, 2),
        ("1", 7, -1, 2, 2), ("1", 5, -1, 2, 2), ("1", 8, -1, 2, 2),
        ("e", 2, -1, 2, 2), ("e", 3, -1, 2, 2),
    ]
    s = racy_ltsi.initial_state()
    for pid_s, block, seats, agent1, agent2 in rows:
        s, t = racy_ltsi.step_pid(s, parse_pid(pid_s), FORWARD)
        assert t.block_id == block
        assert (s.config.rho["seats"], s.config.rho["agent1"], s.config.rho["agent2"]) == (
            seats, agent1, agent2,
        )
    assert racy_ltsi.is_final(s)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    _report("airline-fault-replay", started)


def test_semaphore_fix(semaphore_ltsi, graphs):
    """No reachable oversell, and every maximal backward schedule from
    every terminal state returns to the initial state (exhaustive)."""
    started = time.perf_counter()
    g = graphs["semaphore"]
    assert not g.truncated
    assert all(s.config.rho.get("seats", 0) >= 0 for s in g.states)

    # memoized union of maximal-backward endpoints per state
    endpoints = {}

    def backward_endpoints(i):
        if i in endpoints:
            return endpoints[i]
        backs = [e for e in g.out_edges[i] if e.direction == BACKWARD]
        if not backs:
            result = frozenset((i,))
        else:
            acc = set()
            for e in backs:
                acc |= backward_endpoints(e.dst)
            result = frozenset(acc)
        endpoints[i] = result
        return result

    terminals = [i for i, s in enumerate(g.states) if g.ltsi.is_final(s)]
    assert terminals
    for i in terminals:
        assert backward_endpoints(i) == frozenset((g.initial,))
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _report("semaphore-fix", started)


def test_axiom_suite(graphs, shared_program, racy_program, semaphore_program):
    """SP, BTI, WF, CC on all three complete graphs; CS within path
    bound 12; write set always inside read set; every explored edge
    round-trips."""
    started = time.perf_counter()
    from cril.analysis import read_set, write_set

    for program in (shared_program, racy_program, semaphore_program):
        for b in program.blocks:
            assert write_set(b) <= read_set(b)

    for name, g in graphs.items():
        assert not g.truncated, name
        for check in (check_square_property, check_bti, check_wf, check_causal_consistency):
            report = check(g)
            assert report.ok, f"{name}: {report.pretty()}"
        assert check_loop(g).ok, name  # forward/backward round-trip per edge
        events = compute_events(g)
        cs = check_causal_safety(g, events, bound=12)
        assert cs.ok, f"{name}: {cs.pretty()}"
        assert cs.details["bound"] == 12
    _report("axiom-suite", started)


def test_dag_validator_across_explored_states(graphs):
    """Every annotation DAG produced anywhere in the explored graphs
    satisfies all five definitional conditions."""
    started = time.perf_counter()
    checked = 0
    for g in graphs.values():
        for s in g.states:
            assert s.dag.validate() == []
            checked += 1
    assert checked > 1500
    _report("dag-validator", started)
