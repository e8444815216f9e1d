"""The annotation DAG: causality accumulated by forward steps.

Nodes are (pid, n) pairs plus a distinguished root (represented as
None).  Each forward step of a process p adds the node (p, max_p + 1)
together with one write edge per written resource (extending that
resource's write chain) and one read edge per resource read but not
written (from the resource's current last writer).  A backward step
removes exactly what the matching forward step added; it is legal only
when the node is its process's newest, has no outgoing edges, and all
its read sources are still the current last writers.

The DAG stores only (pid, read set, write set) causality; which block
produced a node is tracked by the combined semantics in `ltsi`.
"""

from __future__ import annotations

from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .errors import NotEnabled, format_pid

Pid = Tuple[int, ...]
# A node is None (the root, written ⊥) or a (pid, index) pair.
Node = Optional[Tuple[Pid, int]]
Edge = Tuple[Node, str, Node]

BOT: Node = None


def node_sort_key(v: Node):
    return (0, (), -1) if v is None else (1, v[0], v[1])


def node_str(v: Node) -> str:
    if v is None:
        return "⊥"
    return f"({format_pid(v[0]) or 'ε'},{v[1]})"


def node_json(v: Node):
    if v is None:
        return None
    return {"pid": format_pid(v[0]), "index": v[1]}


def node_from_json(data) -> Node:
    from .errors import parse_pid

    if data is None:
        return None
    return (parse_pid(data["pid"]), data["index"])


class AnnotationDAG:
    """Immutable annotation DAG value.

    `last_write[r]` caches the endpoint of r's write chain (absent means
    the chain is empty, i.e. last is the root); `max_index[p]` caches the
    newest index per process.  Both are re-derivable from the edge sets;
    `validate` recomputes them from scratch.
    """

    __slots__ = ("nodes", "write_edges", "read_edges", "last_write", "max_index", "_key")

    def __init__(
        self,
        nodes: FrozenSet[Node],
        write_edges: FrozenSet[Edge],
        read_edges: FrozenSet[Edge],
        last_write: Dict[str, Node],
        max_index: Dict[Pid, int],
    ):
        self.nodes = nodes
        self.write_edges = write_edges
        self.read_edges = read_edges
        self.last_write = last_write
        self.max_index = max_index
        self._key = None

    # -- construction ---------------------------------------------------------

    @staticmethod
    def empty() -> "AnnotationDAG":
        return AnnotationDAG(frozenset((BOT,)), frozenset(), frozenset(), {}, {})

    # -- value semantics --------------------------------------------------------

    def key(self) -> tuple:
        if self._key is None:
            self._key = (
                tuple(sorted(self.nodes, key=node_sort_key)),
                tuple(sorted(self.write_edges, key=lambda e: (node_sort_key(e[0]), e[1], node_sort_key(e[2])))),
                tuple(sorted(self.read_edges, key=lambda e: (node_sort_key(e[0]), e[1], node_sort_key(e[2])))),
            )
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, AnnotationDAG) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        ws = ", ".join(
            f"{node_str(s)}-{r}->{node_str(d)}"
            for s, r, d in sorted(self.write_edges, key=lambda e: node_sort_key(e[2]))
        )
        rs = ", ".join(
            f"{node_str(s)}-{r}-->{node_str(d)}"
            for s, r, d in sorted(self.read_edges, key=lambda e: node_sort_key(e[2]))
        )
        return f"ADag(|V|={len(self.nodes)}, W=[{ws}], R=[{rs}])"

    # -- basic queries ----------------------------------------------------------

    def max_for(self, pid: Pid) -> int:
        return self.max_index.get(pid, -1)

    def last(self, resource: str) -> Node:
        return self.last_write.get(resource)

    def node_count(self) -> int:
        return len(self.nodes)

    def top_node(self, pid: Pid) -> Node:
        n = self.max_for(pid)
        return None if n < 0 else (pid, n)

    def _incoming(self, v: Node) -> Tuple[List[Edge], List[Edge]]:
        wr = [e for e in self.write_edges if e[2] == v]
        rd = [e for e in self.read_edges if e[2] == v]
        return wr, rd

    def _has_outgoing(self, v: Node) -> bool:
        return any(e[0] == v for e in self.write_edges) or any(
            e[0] == v for e in self.read_edges
        )

    # -- the annotation relation -------------------------------------------------

    def apply_forward(self, pid: Pid, rd: Iterable[str], wt: Iterable[str]) -> "AnnotationDAG":
        """Add the node (pid, max+1) and its causality edges. Always defined."""
        rd = frozenset(rd)
        wt = frozenset(wt)
        v = (pid, self.max_for(pid) + 1)
        write_edges = set(self.write_edges)
        read_edges = set(self.read_edges)
        last_write = dict(self.last_write)
        for r in sorted(wt):
            write_edges.add((self.last_write.get(r), r, v))
            last_write[r] = v
        for r in sorted(rd - wt):
            read_edges.add((self.last_write.get(r), r, v))
        max_index = dict(self.max_index)
        max_index[pid] = v[1]
        return AnnotationDAG(
            self.nodes | {v}, frozenset(write_edges), frozenset(read_edges),
            last_write, max_index,
        )

    def backward_enabled(self, pid: Pid, rd: Iterable[str], wt: Iterable[str]) -> bool:
        """Could a forward (pid, rd, wt) step have produced this DAG?

        True iff the newest node of `pid` has no outgoing edges, its
        incoming write labels are exactly wt, its incoming read labels
        are exactly rd - wt, and each read source is still the current
        last writer of its resource.
        """
        v = self.top_node(pid)
        if v is None:
            return False
        if self._has_outgoing(v):
            return False
        wr_in, rd_in = self._incoming(v)
        if {e[1] for e in wr_in} != frozenset(wt) or len(wr_in) != len(frozenset(wt)):
            return False
        expected_reads = frozenset(rd) - frozenset(wt)
        if {e[1] for e in rd_in} != expected_reads or len(rd_in) != len(expected_reads):
            return False
        for src, r, _ in rd_in:
            if self.last_write.get(r) != src:
                return False
        return True

    def apply_backward(self, pid: Pid, rd: Iterable[str], wt: Iterable[str]) -> "AnnotationDAG":
        """Remove the newest node of `pid` and its incident edges."""
        if not self.backward_enabled(pid, rd, wt):
            raise NotEnabled(
                f"annotation DAG forbids reversing ({format_pid(pid) or 'e'}, "
                f"{sorted(rd)}, {sorted(wt)})"
            )
        v = self.top_node(pid)
        wr_in, rd_in = self._incoming(v)
        write_edges = self.write_edges - frozenset(wr_in)
        read_edges = self.read_edges - frozenset(rd_in)
        last_write = dict(self.last_write)
        for src, r, _ in wr_in:
            if src is None:
                del last_write[r]
            else:
                last_write[r] = src
        max_index = dict(self.max_index)
        if v[1] == 0:
            del max_index[pid]
        else:
            max_index[pid] = v[1] - 1
        return AnnotationDAG(
            self.nodes - {v}, write_edges, read_edges, last_write, max_index
        )

    def removable_nodes(self) -> Set[Node]:
        """Nodes whose removal is a legal backward annotation step.

        These are the per-process newest nodes with no outgoing edges
        whose read sources are all current last writers.  Which of them
        can actually be removed in a run is further restricted by the
        program configuration (a process suspended on a call cannot
        move even when its newest node qualifies).
        """
        out: Set[Node] = set()
        outgoing = {e[0] for e in self.write_edges} | {e[0] for e in self.read_edges}
        for pid, n in self.max_index.items():
            v = (pid, n)
            if v in outgoing:
                continue
            ok = True
            for src, r, dst in self.read_edges:
                if dst == v and self.last_write.get(r) != src:
                    ok = False
                    break
            if ok:
                out.add(v)
        return out

    # -- validation ----------------------------------------------------------------

    def validate(self) -> List[str]:
        """Recheck every definitional condition from scratch.

        Returns a list of violation messages; empty means the value is a
        legal annotation DAG and the caches agree with the edge sets.
        """
        errors: List[str] = []
        if BOT not in self.nodes:
            errors.append("root missing from V")

        # condition 1: per-process indexes are downward closed
        by_pid: Dict[Pid, Set[int]] = {}
        for v in self.nodes:
            if v is not None:
                by_pid.setdefault(v[0], set()).add(v[1])
        for pid, indexes in by_pid.items():
            top = max(indexes)
            if indexes != set(range(top + 1)):
                errors.append(f"indexes of pid {format_pid(pid) or 'ε'} not contiguous: {sorted(indexes)}")

        all_edges = list(self.write_edges) + list(self.read_edges)
        for src, r, dst in all_edges:
            if src not in self.nodes or dst not in self.nodes:
                errors.append(f"edge {node_str(src)}-{r}->{node_str(dst)} mentions unknown node")
            if dst is None:
                errors.append(f"edge into the root: {node_str(src)}-{r}->{node_str(dst)}")

        # condition 2: at most one incoming edge per (resource, node)
        seen: Dict[Tuple[str, Node], Node] = {}
        for src, r, dst in all_edges:
            key = (r, dst)
            if key in seen and seen[key] != src:
                errors.append(f"two {r}-edges into {node_str(dst)}")
            seen[key] = src
        for src, r, dst in self.write_edges:
            if (src, r, dst) in self.read_edges:
                errors.append(f"edge {node_str(src)}-{r}->{node_str(dst)} is both read and write")

        # condition 3: acyclic (iterative DFS; chains can be long)
        adjacency: Dict[Node, List[Node]] = {}
        for src, r, dst in all_edges:
            adjacency.setdefault(src, []).append(dst)
        state: Dict[Node, int] = {}
        cyclic = False
        for root in self.nodes:
            if state.get(root, 0) != 0:
                continue
            stack: List[Tuple[Node, int]] = [(root, 0)]
            state[root] = 1
            while stack and not cyclic:
                v, i = stack[-1]
                successors = adjacency.get(v, [])
                if i >= len(successors):
                    state[v] = 2
                    stack.pop()
                    continue
                stack[-1] = (v, i + 1)
                w = successors[i]
                s = state.get(w, 0)
                if s == 1:
                    cyclic = True
                elif s == 0:
                    state[w] = 1
                    stack.append((w, 0))
            if cyclic:
                errors.append("edge relation has a cycle")
                break

        # condition 4: write chains are rooted
        write_targets = {(e[1], e[2]) for e in self.write_edges}
        for src, r, dst in self.write_edges:
            if src is not None and (r, src) not in write_targets:
                errors.append(f"write edge from {node_str(src)} ({r}) does not continue a chain")

        # condition 5: at most one outgoing write edge per (node, resource)
        out_seen: Dict[Tuple[Node, str], Node] = {}
        for src, r, dst in self.write_edges:
            key = (src, r)
            if key in out_seen and out_seen[key] != dst:
                errors.append(f"{node_str(src)} has two outgoing {r}-write edges")
            out_seen[key] = dst

        # caches agree with the edge sets
        chain_ends: Dict[str, Node] = {}
        sources = {(e[1], e[0]) for e in self.write_edges}
        for src, r, dst in self.write_edges:
            if (r, dst) not in sources:
                if r in chain_ends:
                    errors.append(f"write chain for {r} has two maximal nodes")
                chain_ends[r] = dst
        if chain_ends != self.last_write:
            errors.append(f"last_write cache {self.last_write} != recomputed {chain_ends}")
        recomputed_max = {pid: max(idx) for pid, idx in by_pid.items()}
        if recomputed_max != self.max_index:
            errors.append(f"max_index cache {self.max_index} != recomputed {recomputed_max}")

        return errors

    # -- export ---------------------------------------------------------------------

    def to_json(self) -> dict:
        def edge_json(e: Edge) -> dict:
            return {"src": node_json(e[0]), "label": e[1], "dst": node_json(e[2])}

        ordered = sorted(self.nodes, key=node_sort_key)
        edge_key = lambda e: (node_sort_key(e[2]), e[1], node_sort_key(e[0]))
        return {
            "nodes": [node_json(v) for v in ordered],
            "write_edges": [edge_json(e) for e in sorted(self.write_edges, key=edge_key)],
            "read_edges": [edge_json(e) for e in sorted(self.read_edges, key=edge_key)],
        }

    def to_dot(self) -> str:
        """Graphviz export: write edges solid, read edges dashed."""

        def dot_id(v: Node) -> str:
            if v is None:
                return '"bot"'
            return f'"{format_pid(v[0]) or "e"}:{v[1]}"'

        lines = ["digraph annotation {", "  rankdir=LR;", '  "bot" [label="⊥", shape=circle];']
        for v in sorted(self.nodes, key=node_sort_key):
            if v is not None:
                lines.append(f'  {dot_id(v)} [label="{node_str(v)}", shape=box];')
        edge_key = lambda e: (node_sort_key(e[2]), e[1], node_sort_key(e[0]))
        for src, r, dst in sorted(self.write_edges, key=edge_key):
            lines.append(f'  {dot_id(src)} -> {dot_id(dst)} [label="{r}", style=solid];')
        for src, r, dst in sorted(self.read_edges, key=edge_key):
            lines.append(f'  {dot_id(src)} -> {dot_id(dst)} [label="{r}", style=dashed];')
        lines.append("}")
        return "\n".join(lines)


def empty_dag() -> AnnotationDAG:
    return AnnotationDAG.empty()
