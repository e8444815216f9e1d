"""State-space exploration and executable reversibility checks.

`explore` builds the reachable fragment of the combined transition
system (forward and backward edges) by breadth-first search with
hash-consed states.  The check_* functions test, exhaustively on the
explored graph, the properties the combined semantics is designed to
have: the square property, independence of coinitial backward
transitions, well-foundedness of reversal, causal consistency, and
bounded causal safety / liveness.  Events are computed as the closure
of transitions under commuting squares.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .analysis import ProgramInfo
from .errors import CrilError
from .ltsi import CombinedState, Ltsi, independent_labels, undirected_label
from .machine import BACKWARD, FORWARD, ProgTransition
from .syntax import Program


class BoundExceeded(CrilError):
    """Exploration hit max_states/max_depth; the truncated graph is attached."""

    def __init__(self, graph: "LtsGraph"):
        super().__init__(
            f"exploration truncated at {graph.state_count()} states; raise the bounds"
        )
        self.graph = graph


@dataclass
class Edge:
    id: int
    src: int
    dst: int
    transition: ProgTransition

    @property
    def direction(self) -> str:
        return self.transition.direction


@dataclass
class LtsGraph:
    """Explored fragment of the combined LTS."""

    program: Program
    ltsi: Ltsi
    states: List[CombinedState]
    edges: List[Edge]
    out_edges: List[List[Edge]]
    initial: int = 0
    truncated: bool = False
    _reverse: Optional[List[int]] = None

    def state_count(self) -> int:
        return len(self.states)

    def edge_count(self) -> int:
        return len(self.edges)

    def forward_edges(self) -> List[Edge]:
        return [e for e in self.edges if e.direction == FORWARD]

    def backward_edges(self) -> List[Edge]:
        return [e for e in self.edges if e.direction == BACKWARD]

    def find_edge(self, src: int, pid, direction: str) -> Optional[Edge]:
        """The unique edge from `src` with the given pid and direction."""
        for e in self.out_edges[src]:
            if e.transition.pid == pid and e.direction == direction:
                return e
        return None

    def reverse_edge_ids(self) -> List[int]:
        """reverse[e] is the edge undoing e; total by the loop property."""
        if self._reverse is not None:
            return self._reverse
        lookup: Dict[Tuple[int, tuple, str], int] = {}
        for e in self.edges:
            lookup[(e.src, e.transition.pid, e.direction)] = e.id
        rev: List[int] = []
        for e in self.edges:
            flipped = BACKWARD if e.direction == FORWARD else FORWARD
            partner = lookup.get((e.dst, e.transition.pid, flipped))
            if partner is None:
                raise CrilError(
                    f"edge {e.id} has no reverse; the explored graph is inconsistent"
                )
            rev.append(partner)
        self._reverse = rev
        return rev

    def path_from_initial(self, target: int) -> List[ProgTransition]:
        """A shortest transition path from the initial state (for replays)."""
        parent: Dict[int, Tuple[int, Edge]] = {}
        seen = {self.initial}
        queue = deque([self.initial])
        while queue:
            i = queue.popleft()
            if i == target:
                break
            for e in self.out_edges[i]:
                if e.dst not in seen:
                    seen.add(e.dst)
                    parent[e.dst] = (i, e)
                    queue.append(e.dst)
        if target not in seen:
            raise CrilError(f"state {target} unreachable from initial")
        path: List[ProgTransition] = []
        i = target
        while i != self.initial:
            i, e = parent[i]
            path.append(e.transition)
        path.reverse()
        return path


def explore(
    program: Program,
    max_states: int = 200_000,
    max_depth: Optional[int] = None,
    info: Optional[ProgramInfo] = None,
    strict: bool = False,
) -> LtsGraph:
    """BFS over forward and backward transitions from the initial state.

    Deterministic: the same program and bounds produce an identical
    graph.  If a bound truncates the search the graph is returned with
    `truncated` set (checks that need completeness refuse to run on it);
    with strict=True truncation raises BoundExceeded carrying the graph.
    """
    ltsi = Ltsi(program, info)
    s0 = ltsi.initial_state()
    states: List[CombinedState] = [s0]
    index: Dict[CombinedState, int] = {s0: 0}
    out_edges: List[List[Edge]] = [[]]
    edges: List[Edge] = []
    depth = [0]
    truncated = False
    queue = deque([0])
    while queue:
        i = queue.popleft()
        if max_depth is not None and depth[i] >= max_depth:
            truncated = True
            continue
        s = states[i]
        seen_pids = set()
        for direction in (FORWARD, BACKWARD):
            for t in ltsi.enabled(s, direction):
                key = (t.pid, direction)
                if key in seen_pids:  # per-process determinism must hold
                    raise CrilError(f"two {direction} transitions for pid {t.pid}")
                seen_pids.add(key)
                s2 = ltsi.step(s, t)
                j = index.get(s2)
                if j is None:
                    if len(states) >= max_states:
                        truncated = True
                        continue
                    j = len(states)
                    index[s2] = j
                    states.append(s2)
                    out_edges.append([])
                    depth.append(depth[i] + 1)
                    queue.append(j)
                e = Edge(len(edges), i, j, t)
                edges.append(e)
                out_edges[i].append(e)
    graph = LtsGraph(program, ltsi, states, edges, out_edges, 0, truncated)
    if truncated and strict:
        raise BoundExceeded(graph)
    return graph


# ---------------------------------------------------------------------------
# Property reports
# ---------------------------------------------------------------------------

@dataclass
class PropertyReport:
    property: str  # SP | BTI | WF | CPI | IRE | CC | CS | CL | LOOP
    ok: bool
    counterexample: Optional[dict] = None
    details: dict = field(default_factory=dict)

    def pretty(self) -> str:
        status = "ok" if self.ok else "VIOLATED"
        extra = ""
        if self.details:
            extra = " (" + ", ".join(f"{k}={v}" for k, v in sorted(self.details.items())) + ")"
        text = f"{self.property}: {status}{extra}"
        if self.counterexample:
            text += f"\n  counterexample: {self.counterexample}"
        return text


def _require_complete(g: LtsGraph, prop: str) -> Optional[PropertyReport]:
    if g.truncated:
        return PropertyReport(prop, False, {"reason": "graph truncated; raise the bounds"})
    return None


def _edge_info(g: LtsGraph, e: Edge) -> dict:
    return {
        "edge": e.id,
        "src": e.src,
        "dst": e.dst,
        "pid": ".".join(map(str, e.transition.pid)),
        "dir": e.direction,
        "block": e.transition.block_id,
        "rd": sorted(e.transition.rd),
        "wt": sorted(e.transition.wt),
    }


def _coinitial_independent_pairs(g: LtsGraph, i: int):
    outs = g.out_edges[i]
    for a in range(len(outs)):
        for b in range(a + 1, len(outs)):
            t, u = outs[a], outs[b]
            if independent_labels(
                undirected_label(t.transition), undirected_label(u.transition)
            ):
                yield t, u


def _square_corners(g: LtsGraph, t: Edge, u: Edge):
    """Completing edges (u', t') of the commuting square, if both exist."""
    u2 = g.find_edge(t.dst, u.transition.pid, u.direction)
    t2 = g.find_edge(u.dst, t.transition.pid, t.direction)
    return u2, t2


def check_square_property(g: LtsGraph) -> PropertyReport:
    """Coinitial independent transitions commute to a common state."""
    bad = _require_complete(g, "SP")
    if bad:
        return bad
    squares = 0
    for i in range(len(g.states)):
        for t, u in _coinitial_independent_pairs(g, i):
            u2, t2 = _square_corners(g, t, u)
            problem = None
            if u2 is None or t2 is None:
                problem = "missing completion"
            elif u2.dst != t2.dst:
                problem = "completions are not cofinal"
            elif (
                undirected_label(u2.transition) != undirected_label(u.transition)
                or undirected_label(t2.transition) != undirected_label(t.transition)
            ):
                problem = "completion label mismatch"
            if problem:
                return PropertyReport(
                    "SP",
                    False,
                    {"state": i, "t": _edge_info(g, t), "u": _edge_info(g, u), "problem": problem},
                )
            squares += 1
    return PropertyReport("SP", True, details={"independent_pairs": squares})


def check_bti(g: LtsGraph) -> PropertyReport:
    """All distinct coinitial backward transitions are independent."""
    bad = _require_complete(g, "BTI")
    if bad:
        return bad
    pairs = 0
    for i in range(len(g.states)):
        backs = [e for e in g.out_edges[i] if e.direction == BACKWARD]
        for a in range(len(backs)):
            for b in range(a + 1, len(backs)):
                t, u = backs[a], backs[b]
                pairs += 1
                if not independent_labels(
                    undirected_label(t.transition), undirected_label(u.transition)
                ):
                    return PropertyReport(
                        "BTI",
                        False,
                        {"state": i, "t": _edge_info(g, t), "u": _edge_info(g, u)},
                    )
    return PropertyReport("BTI", True, details={"backward_pairs": pairs})


def check_wf(g: LtsGraph) -> PropertyReport:
    """Backward steps strictly shrink the DAG (by exactly one node),
    forward steps grow it by exactly one; hence no infinite reversal."""
    for e in g.edges:
        before = g.states[e.src].dag.node_count()
        after = g.states[e.dst].dag.node_count()
        delta = after - before
        want = 1 if e.direction == FORWARD else -1
        if delta != want:
            return PropertyReport(
                "WF", False, {"edge": _edge_info(g, e), "node_delta": delta}
            )
    return PropertyReport("WF", True, details={"edges": len(g.edges)})


def check_loop(g: LtsGraph) -> PropertyReport:
    """Every explored edge has an inverse edge leading straight back."""
    try:
        rev = g.reverse_edge_ids()
    except CrilError as exc:
        return PropertyReport("LOOP", False, {"problem": str(exc)})
    for e in g.edges:
        r = g.edges[rev[e.id]]
        if (
            r.src != e.dst
            or r.dst != e.src
            or r.transition.block_id != e.transition.block_id
            or undirected_label(r.transition) != undirected_label(e.transition)
        ):
            return PropertyReport(
                "LOOP", False, {"edge": _edge_info(g, e), "reverse": _edge_info(g, r)}
            )
    return PropertyReport("LOOP", True, details={"edges": len(g.edges)})


def check_cpi(g: LtsGraph) -> PropertyReport:
    """Independence propagates around commuting squares."""
    bad = _require_complete(g, "CPI")
    if bad:
        return bad
    for i in range(len(g.states)):
        for t, u in _coinitial_independent_pairs(g, i):
            u2, t2 = _square_corners(g, t, u)
            if u2 is None or t2 is None or u2.dst != t2.dst:
                continue  # SP violations are reported by check_square_property
            reversed_t = undirected_label(t.transition)
            if not independent_labels(undirected_label(u2.transition), reversed_t):
                return PropertyReport(
                    "CPI",
                    False,
                    {"state": i, "t": _edge_info(g, t), "u_prime": _edge_info(g, u2)},
                )
    return PropertyReport("CPI", True)


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------

class EventClasses:
    """Equivalence classes of transitions under commuting squares.

    Two transitions are equivalent when one is the residual of the other
    across a square of independent coinitial transitions; forward classes
    are the events, backward classes the reverse events.
    """

    def __init__(self, g: LtsGraph):
        self.graph = g
        self._parent = list(range(len(g.edges)))
        self._build()

    def _find(self, x: int) -> int:
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def _union(self, a: int, b: int) -> None:
        ra, rb = self._find(a), self._find(b)
        if ra != rb:
            self._parent[ra] = rb

    def _build(self) -> None:
        g = self.graph
        for i in range(len(g.states)):
            for t, u in _coinitial_independent_pairs(g, i):
                u2, t2 = _square_corners(g, t, u)
                if u2 is not None and t2 is not None and u2.dst == t2.dst:
                    self._union(t.id, t2.id)
                    self._union(u.id, u2.id)

    def class_of(self, edge_id: int) -> int:
        return self._find(edge_id)

    def forward_class_of(self, edge_id: int) -> int:
        """The event of an edge: backward edges map to their reverse's class."""
        e = self.graph.edges[edge_id]
        if e.direction == FORWARD:
            return self._find(edge_id)
        return self._find(self.graph.reverse_edge_ids()[edge_id])

    def classes(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for eid in range(len(self.graph.edges)):
            out.setdefault(self._find(eid), []).append(eid)
        return out

    def check_ire(self) -> PropertyReport:
        """Transitions in one class carry one label, so independence is
        well-defined on events."""
        for root, members in self.classes().items():
            labels = {
                (
                    undirected_label(self.graph.edges[eid].transition),
                    self.graph.edges[eid].direction,
                )
                for eid in members
            }
            if len(labels) != 1:
                return PropertyReport(
                    "IRE",
                    False,
                    {"class": root, "labels": sorted(str(l) for l in labels)},
                )
        return PropertyReport("IRE", True, details={"classes": len(self.classes())})


def compute_events(g: LtsGraph) -> EventClasses:
    return EventClasses(g)


# ---------------------------------------------------------------------------
# Causal consistency
# ---------------------------------------------------------------------------

def check_causal_consistency(g: LtsGraph) -> PropertyReport:
    """Every mixed-direction-reachable state has a forward-only witness."""
    bad = _require_complete(g, "CC")
    if bad:
        return bad
    seen: Set[int] = {g.initial}
    queue = deque([g.initial])
    while queue:
        i = queue.popleft()
        for e in g.out_edges[i]:
            if e.direction == FORWARD and e.dst not in seen:
                seen.add(e.dst)
                queue.append(e.dst)
    if len(seen) != len(g.states):
        missing = min(i for i in range(len(g.states)) if i not in seen)
        return PropertyReport(
            "CC",
            False,
            {
                "state": missing,
                "store": g.states[missing].config.to_json()["rho"],
                "mixed_path": [str(t.label) for t in g.path_from_initial(missing)],
            },
        )
    return PropertyReport("CC", True, details={"states": len(g.states)})


# ---------------------------------------------------------------------------
# Causal safety / liveness (bounded path checks)
# ---------------------------------------------------------------------------

class _PathCheck:
    def __init__(self, g: LtsGraph, events: EventClasses, bound: int, check_liveness: bool):
        self.g = g
        self.events = events
        self.bound = bound
        self.check_liveness = check_liveness
        self.counterexample: Optional[dict] = None
        self.paths_checked = 0
        self.hit_bound = False
        # flat per-edge tables so the DFS stays cheap
        self._cls = [events.forward_class_of(e.id) for e in g.edges]
        self._delta = [1 if e.direction == FORWARD else -1 for e in g.edges]
        self._label = [undirected_label(e.transition) for e in g.edges]
        self._succ = [
            tuple((e.id, e.dst) for e in outs) for outs in g.out_edges
        ]
        self._undo_at = [
            tuple(e.id for e in outs if e.direction == BACKWARD) for outs in g.out_edges
        ]

    def run_from(self, t0: Edge) -> bool:
        """DFS simple paths from dst(t0); True if no violation found."""
        self.t0 = t0
        self.e0 = self._cls[t0.id]
        self.label0 = self._label[t0.id]
        net: Dict[int, int] = {}
        path: List[Edge] = []
        on_path = {t0.dst}
        return self._dfs(t0.dst, net, path, on_path)

    def _undo_edge_here(self, state: int) -> Optional[Edge]:
        for eid in self._undo_at[state]:
            if self._cls[eid] == self.e0:
                return self.g.edges[eid]
        return None

    def _violations(self, path: List[int], net: Dict[int, int]) -> List[int]:
        out = []
        for eid in path:
            if net.get(self._cls[eid], 0) > 0 and not independent_labels(
                self.label0, self._label[eid]
            ):
                out.append(eid)
        return out

    def _check_state(self, state: int, net: Dict[int, int], path: List[int]) -> bool:
        self.paths_checked += 1
        undo = self._undo_edge_here(state)
        edges = self.g.edges
        if self.check_liveness:
            # CL: if everything outstanding is independent of t0, the undo
            # transition must be available.
            if undo is None and not self._violations(path, net):
                self.counterexample = {
                    "t0": _edge_info(self.g, self.t0),
                    "path": [_edge_info(self.g, edges[eid]) for eid in path],
                    "state": state,
                    "problem": "undo transition missing",
                }
                return False
        else:
            # CS: the undo is taken only after everything that depends on
            # t0 has been undone.
            if undo is not None:
                bad = self._violations(path, net)
                if bad:
                    self.counterexample = {
                        "state": self.t0.src,
                        "t0": _edge_info(self.g, self.t0),
                        "path": [_edge_info(self.g, edges[eid]) for eid in path],
                        "undo": _edge_info(self.g, undo),
                        "dependent": [_edge_info(self.g, edges[eid]) for eid in bad],
                    }
                    return False
        return True

    def _dfs(self, state: int, net: Dict[int, int], path: List[int], on_path: Set[int]) -> bool:
        if net.get(self.e0, 0) == 0 and not self._check_state(state, net, path):
            return False
        if len(path) >= self.bound:
            self.hit_bound = True
            return True
        cls_tab = self._cls
        delta_tab = self._delta
        get = net.get
        for eid, dst in self._succ[state]:
            if dst in on_path:
                continue
            cls = cls_tab[eid]
            delta = delta_tab[eid]
            old = get(cls, 0)
            net[cls] = old + delta
            path.append(eid)
            on_path.add(dst)
            ok = self._dfs(dst, net, path, on_path)
            on_path.discard(dst)
            path.pop()
            if old == 0:
                del net[cls]
            else:
                net[cls] = old
            if not ok:
                return False
        return True


def check_causal_safety(
    g: LtsGraph, events: Optional[EventClasses] = None, bound: int = 12
) -> PropertyReport:
    """An action is reversed only after everything it caused is.

    Checks every explored forward transition against every simple path
    (of length <= bound) that ends where the action's event is undone:
    all events still outstanding along the path must be independent of
    the action.  Paths longer than the bound are not examined; the
    report says whether the bound was reached.
    """
    bad = _require_complete(g, "CS")
    if bad:
        return bad
    if events is None:
        events = compute_events(g)
    checker = _PathCheck(g, events, bound, check_liveness=False)
    for t0 in g.forward_edges():
        if not checker.run_from(t0):
            report = PropertyReport("CS", False, checker.counterexample)
            report.details["bound"] = bound
            return report
    return PropertyReport(
        "CS",
        True,
        details={
            "bound": bound,
            "paths": checker.paths_checked,
            "bound_reached": checker.hit_bound,
        },
    )


def check_causal_liveness(
    g: LtsGraph, events: Optional[EventClasses] = None, bound: int = 12
) -> PropertyReport:
    """An action can be reversed in any order its causality allows.

    Dual of check_causal_safety: along any simple path (<= bound) with
    the action's event outstanding and everything else outstanding
    independent of it, the undo transition must be enabled.  Quadratic
    in explored paths; run on demand.
    """
    bad = _require_complete(g, "CL")
    if bad:
        return bad
    if events is None:
        events = compute_events(g)
    checker = _PathCheck(g, events, bound, check_liveness=True)
    for t0 in g.forward_edges():
        if not checker.run_from(t0):
            report = PropertyReport("CL", False, checker.counterexample)
            report.details["bound"] = bound
            return report
    return PropertyReport(
        "CL",
        True,
        details={
            "bound": bound,
            "paths": checker.paths_checked,
            "bound_reached": checker.hit_bound,
        },
    )


# ---------------------------------------------------------------------------
# Bundled runs
# ---------------------------------------------------------------------------

CHECKS = {
    "sp": check_square_property,
    "bti": check_bti,
    "wf": check_wf,
    "loop": check_loop,
    "cpi": check_cpi,
    "cc": check_causal_consistency,
}


def run_checks(
    g: LtsGraph,
    names: Optional[List[str]] = None,
    cs_bound: int = 12,
    cl_bound: Optional[int] = None,
) -> List[PropertyReport]:
    """Run the named checks (default: sp, bti, wf, loop, cc, cs)."""
    if names is None:
        names = ["sp", "bti", "wf", "loop", "cc", "cs"]
    reports: List[PropertyReport] = []
    events: Optional[EventClasses] = None
    for name in names:
        name = name.lower()
        if name in CHECKS:
            reports.append(CHECKS[name](g))
        elif name == "ire":
            events = events or compute_events(g)
            reports.append(events.check_ire())
        elif name == "cs":
            events = events or compute_events(g)
            reports.append(check_causal_safety(g, events, cs_bound))
        elif name == "cl":
            events = events or compute_events(g)
            reports.append(check_causal_liveness(g, events, cl_bound or cs_bound))
        else:
            raise ValueError(f"unknown check {name!r}")
    return reports
