"""The combined semantics: program steps paired with annotation steps.

A combined state is (configuration, annotation DAG).  A transition is
enabled when its program half is enabled on the configuration and its
annotation half is enabled on the DAG; forward annotation steps are
always enabled, so forward behavior equals the basic semantics while
backward behavior is gated by recorded causality.

Also provides the independence relation on transition labels, seeded
schedulers, a run driver, and the trace/replay JSON format.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .adag import AnnotationDAG
from .analysis import ProgramInfo
from .errors import NotEnabled, ReplayError, format_pid, parse_pid
from .machine import BACKWARD, FORWARD, Config, Machine, Pid, ProgTransition
from .syntax import Program

Label = Tuple[Pid, frozenset, frozenset, str]


class CombinedState:
    """Immutable (configuration, annotation DAG) pair."""

    __slots__ = ("config", "dag", "_key")

    def __init__(self, config: Config, dag: AnnotationDAG):
        self.config = config
        self.dag = dag
        self._key = None

    def key(self) -> tuple:
        if self._key is None:
            self._key = (self.config.key(), self.dag.key())
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, CombinedState) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"CombinedState({self.config!r}, {self.dag!r})"


def undirected_label(t: ProgTransition) -> Tuple[Pid, frozenset, frozenset]:
    """The underlying forward label: direction dropped."""
    return (t.pid, t.rd, t.wt)


def pid_prefix(p: Pid, q: Pid) -> bool:
    return len(p) <= len(q) and q[: len(p)] == p


def independent_labels(a, b) -> bool:
    """Independence of transition labels (computed on underlying labels).

    Two labels are independent when neither pid is an ancestor of the
    other and neither reads anything the other writes.
    """
    p1, rd1, wt1 = a[0], a[1], a[2]
    p2, rd2, wt2 = b[0], b[1], b[2]
    if pid_prefix(p1, p2) or pid_prefix(p2, p1):
        return False
    return not (rd1 & wt2) and not (rd2 & wt1)


def independent(t: ProgTransition, u: ProgTransition) -> bool:
    return independent_labels(undirected_label(t), undirected_label(u))


_KIND_ORDER = {"inst": 0, "fork": 1, "merge": 2}


class Ltsi:
    """Stepper for the combined semantics of one program."""

    def __init__(self, program: Program, info: Optional[ProgramInfo] = None):
        self.machine = Machine(program, info)
        self.program = program

    def initial_state(self) -> CombinedState:
        return CombinedState(self.machine.initial_config(), AnnotationDAG.empty())

    def is_final(self, s: CombinedState) -> bool:
        return self.machine.is_final(s.config)

    def enabled(self, s: CombinedState, direction: str) -> List[ProgTransition]:
        """Transitions enabled on both halves, ordered by (pid, kind)."""
        ts = self.machine.enabled(s.config, direction)
        if direction == BACKWARD:
            ts = [t for t in ts if s.dag.backward_enabled(t.pid, t.rd, t.wt)]
        return sorted(ts, key=lambda t: (t.pid, _KIND_ORDER[t.kind]))

    def enabled_both(self, s: CombinedState) -> Tuple[List[ProgTransition], List[ProgTransition]]:
        return self.enabled(s, FORWARD), self.enabled(s, BACKWARD)

    def step(self, s: CombinedState, t: ProgTransition) -> CombinedState:
        """Apply one combined transition (caller ensures enabledness of
        the program half; the annotation half is checked here)."""
        config = self.machine.apply(s.config, t)
        if t.direction == FORWARD:
            dag = s.dag.apply_forward(t.pid, t.rd, t.wt)
        else:
            dag = s.dag.apply_backward(t.pid, t.rd, t.wt)
        return CombinedState(config, dag)

    def step_pid(self, s: CombinedState, pid: Pid, direction: str) -> Tuple[CombinedState, ProgTransition]:
        """Apply the unique enabled transition of one process."""
        for t in self.enabled(s, direction):
            if t.pid == pid:
                return self.step(s, t), t
        raise NotEnabled(
            f"no {direction} transition enabled for pid {format_pid(pid) or 'e'}"
        )

    def run_schedule(self, s: CombinedState, pids: Sequence[Pid], direction: str):
        """Replay a pid schedule, returning (states, transitions).

        states[0] is s and states[i+1] follows by scheduling pids[i];
        relies on per-process determinism.
        """
        states = [s]
        trace = []
        for pid in pids:
            s, t = self.step_pid(s, pid, direction)
            states.append(s)
            trace.append(t)
        return states, trace


class RawLtsi(Ltsi):
    """The basic semantics alone: the annotation DAG is never consulted.

    Backward steps are unchecked, so reversal can diverge from the
    forward history (the whole point of the controlled semantics).  The
    DAG component of every state stays empty.
    """

    def enabled(self, s: CombinedState, direction: str) -> List[ProgTransition]:
        ts = self.machine.enabled(s.config, direction)
        return sorted(ts, key=lambda t: (t.pid, _KIND_ORDER[t.kind]))

    def step(self, s: CombinedState, t: ProgTransition) -> CombinedState:
        return CombinedState(self.machine.apply(s.config, t), s.dag)


# ---------------------------------------------------------------------------
# Schedulers and the run driver
# ---------------------------------------------------------------------------

Scheduler = Callable[[CombinedState, List[ProgTransition]], int]


def random_scheduler(seed: int) -> Scheduler:
    rng = random.Random(seed)

    def pick(state: CombinedState, enabled: List[ProgTransition]) -> int:
        return rng.randrange(len(enabled))

    return pick


def round_robin_scheduler() -> Scheduler:
    last_pid = [None]

    def pick(state: CombinedState, enabled: List[ProgTransition]) -> int:
        pids = [t.pid for t in enabled]
        if last_pid[0] is not None:
            for i, pid in enumerate(pids):
                if pid > last_pid[0]:
                    last_pid[0] = pid
                    return i
        last_pid[0] = pids[0]
        return 0

    return pick


TERMINATED = "terminated"
BLOCKED = "blocked"
STEP_LIMIT = "step-limit"
ASSERT_FAILED = "assert-failed"


@dataclass
class RunResult:
    trace: List[ProgTransition]
    states: List[CombinedState]
    outcome: str

    @property
    def final(self) -> CombinedState:
        return self.states[-1]


def run(
    ltsi: Ltsi,
    state: CombinedState,
    scheduler: Scheduler,
    direction: str = FORWARD,
    max_steps: int = 10_000,
) -> RunResult:
    """Drive the combined semantics until it terminates, blocks, or
    exhausts the step budget.

    Forward termination is the final configuration; backward termination
    is the initial state.  `blocked` covers deadlock (e.g. P/V misuse);
    a run facing only a failing assert reports `assert-failed`.
    """
    initial = ltsi.initial_state()
    states = [state]
    trace: List[ProgTransition] = []
    for _ in range(max_steps):
        if direction == FORWARD and ltsi.is_final(state):
            return RunResult(trace, states, TERMINATED)
        if direction == BACKWARD and state == initial:
            return RunResult(trace, states, TERMINATED)
        enabled = ltsi.enabled(state, direction)
        if not enabled:
            reasons = ltsi.machine.blocked_reasons(state.config, direction)
            if any(r.kind == "assert" for r in reasons):
                return RunResult(trace, states, ASSERT_FAILED)
            return RunResult(trace, states, BLOCKED)
        t = enabled[scheduler(state, enabled)]
        state = ltsi.step(state, t)
        states.append(state)
        trace.append(t)
    if direction == FORWARD and ltsi.is_final(state):
        return RunResult(trace, states, TERMINATED)
    if direction == BACKWARD and state == initial:
        return RunResult(trace, states, TERMINATED)
    return RunResult(trace, states, STEP_LIMIT)


# ---------------------------------------------------------------------------
# Trace JSON (also the replay file format)
# ---------------------------------------------------------------------------

def transition_to_json(t: ProgTransition) -> dict:
    return {
        "pid": format_pid(t.pid),
        "dir": t.direction,
        "block": t.block_id,
        "rd": sorted(t.rd),
        "wt": sorted(t.wt),
    }


def transition_from_json(data: dict) -> ProgTransition:
    kind = data.get("kind")
    return ProgTransition(
        parse_pid(data["pid"]),
        data["dir"],
        kind if kind else "inst",
        data["block"],
        frozenset(data.get("rd", ())),
        frozenset(data.get("wt", ())),
    )


def trace_to_json(trace: Iterable[ProgTransition]) -> list:
    return [transition_to_json(t) for t in trace]


def dump_trace(trace: Iterable[ProgTransition], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace_to_json(trace), fh, indent=2)
        fh.write("\n")


def load_trace(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def replay(ltsi: Ltsi, state: CombinedState, entries: Iterable[dict]) -> RunResult:
    """Re-apply a recorded trace, matching each entry against the
    enabled transitions of the current state."""
    states = [state]
    trace: List[ProgTransition] = []
    for i, entry in enumerate(entries):
        wanted = transition_from_json(entry) if isinstance(entry, dict) else entry
        match = None
        for t in ltsi.enabled(state, wanted.direction):
            if t.pid == wanted.pid and t.block_id == wanted.block_id:
                match = t
                break
        if match is None:
            raise ReplayError(
                f"trace step {i}: ({wanted.describe()}) is not enabled"
            )
        state = ltsi.step(state, match)
        states.append(state)
        trace.append(match)
    outcome = TERMINATED if ltsi.is_final(state) else STEP_LIMIT
    return RunResult(trace, states, outcome)
