"""Static semantics for CRIL programs.

Read/write sets over memory resources (variables plus the single heap
resource `M`), entry/exit label sets, the partition of blocks into
process blocks, and the well-formedness conditions a program must meet
before it can be executed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set

from . import syntax
from .syntax import (
    Assert,
    BasicBlock,
    CallStatement,
    EntryBegin,
    EntryCond,
    EntryUncond,
    Exchange,
    ExitCond,
    ExitEnd,
    ExitUncond,
    HeapRef,
    InstructionBlock,
    POp,
    Program,
    Update,
    VarRef,
    VOp,
)

HEAP = "M"


def expr_resources(e) -> FrozenSet[str]:
    """Memory resources referenced by an expression.

    A heap access M[x] contributes both the heap resource `M` and the
    index variable x.
    """
    if isinstance(e, syntax.IntLit):
        return frozenset()
    if isinstance(e, VarRef):
        return frozenset((e.name,))
    if isinstance(e, HeapRef):
        return frozenset((HEAP, e.index))
    if isinstance(e, syntax.Unary):
        return expr_resources(e.operand)
    return expr_resources(e.lhs) | expr_resources(e.rhs)


def _left_resources(left) -> FrozenSet[str]:
    if isinstance(left, VarRef):
        return frozenset((left.name,))
    return frozenset((HEAP, left.index))


def _entry_resources(entry) -> FrozenSet[str]:
    if isinstance(entry, EntryCond):
        return expr_resources(entry.cond)
    return frozenset()


def _exit_resources(exit_point) -> FrozenSet[str]:
    if isinstance(exit_point, ExitCond):
        return expr_resources(exit_point.cond)
    return frozenset()


def _instruction_resources(inst) -> FrozenSet[str]:
    if isinstance(inst, Update):
        return _left_resources(inst.left) | expr_resources(inst.expr)
    if isinstance(inst, Exchange):
        return _left_resources(inst.left1) | _left_resources(inst.left2)
    if isinstance(inst, (VOp, POp)):
        return frozenset((inst.var,))
    if isinstance(inst, Assert):
        return expr_resources(inst.cond)
    return frozenset()


def read_set(b: BasicBlock) -> FrozenSet[str]:
    """Resources the block uses: entry condition, instruction, exit condition."""
    if isinstance(b, CallStatement):
        return frozenset()
    return (
        _entry_resources(b.entry)
        | _instruction_resources(b.instruction)
        | _exit_resources(b.exit)
    )


def write_set(b: BasicBlock) -> FrozenSet[str]:
    """Resources the block updates (always a subset of read_set)."""
    if isinstance(b, CallStatement):
        return frozenset()
    inst = b.instruction
    if isinstance(inst, Update):
        if isinstance(inst.left, VarRef):
            return frozenset((inst.left.name,))
        return frozenset((HEAP,))
    if isinstance(inst, Exchange):
        heap1 = isinstance(inst.left1, HeapRef)
        heap2 = isinstance(inst.left2, HeapRef)
        if heap1 and heap2:
            return frozenset((HEAP,))
        if heap1:
            return frozenset((HEAP, inst.left2.name))
        if heap2:
            return frozenset((inst.left1.name, HEAP))
        return frozenset((inst.left1.name, inst.left2.name))
    if isinstance(inst, (VOp, POp)):
        return frozenset((inst.var,))
    return frozenset()


def in_labels(b: BasicBlock) -> FrozenSet[str]:
    if isinstance(b, CallStatement):
        return frozenset((b.entry_label,))
    entry = b.entry
    if isinstance(entry, EntryUncond):
        return frozenset((entry.label,))
    if isinstance(entry, EntryCond):
        return frozenset((entry.label_true, entry.label_false))
    return frozenset()


def out_labels(b: BasicBlock) -> FrozenSet[str]:
    if isinstance(b, CallStatement):
        return frozenset((b.exit_label,))
    exit_point = b.exit
    if isinstance(exit_point, ExitUncond):
        return frozenset((exit_point.label,))
    if isinstance(exit_point, ExitCond):
        return frozenset((exit_point.label_true, exit_point.label_false))
    return frozenset()


def begin_label(b: BasicBlock) -> Optional[str]:
    if isinstance(b, InstructionBlock) and isinstance(b.entry, EntryBegin):
        return b.entry.label
    return None


def end_label(b: BasicBlock) -> Optional[str]:
    if isinstance(b, InstructionBlock) and isinstance(b.exit, ExitEnd):
        return b.exit.label
    return None


# ---------------------------------------------------------------------------
# Process-block partition
# ---------------------------------------------------------------------------

@dataclass
class ProcessBlockPartition:
    """Equivalence classes of blocks under the connectedness relation.

    `class_of` maps block id -> class index; `classes` lists the block
    ids of each class; `labels` holds the begin/end labels seen in each
    class (exactly one for well-formed programs).
    """

    class_of: Dict[int, int]
    classes: List[List[int]]
    labels: List[List[str]]

    def label_of_class(self, index: int) -> Optional[str]:
        if len(self.labels[index]) == 1:
            return self.labels[index][0]
        return None

    def class_by_label(self, label: str) -> Optional[int]:
        for i, labels in enumerate(self.labels):
            if label in labels:
                return i
        return None


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def process_blocks(p: Program) -> ProcessBlockPartition:
    """Partition blocks by the reflexive-transitive closure of connectedness.

    Two blocks are connected when one's out labels meet the other's in
    labels; the classes are the static bodies of processes.
    """
    uf = _UnionFind([b.id for b in p.blocks])
    by_in: Dict[str, List[int]] = {}
    by_out: Dict[str, List[int]] = {}
    for b in p.blocks:
        for l in in_labels(b):
            by_in.setdefault(l, []).append(b.id)
        for l in out_labels(b):
            by_out.setdefault(l, []).append(b.id)
    for label, ins in by_in.items():
        for i in ins[1:]:
            uf.union(ins[0], i)
        for o in by_out.get(label, []):
            uf.union(ins[0], o)
    for label, outs in by_out.items():
        for o in outs[1:]:
            uf.union(outs[0], o)

    roots: Dict[int, int] = {}
    classes: List[List[int]] = []
    labels: List[List[str]] = []
    class_of: Dict[int, int] = {}
    for b in p.blocks:
        root = uf.find(b.id)
        if root not in roots:
            roots[root] = len(classes)
            classes.append([])
            labels.append([])
        idx = roots[root]
        class_of[b.id] = idx
        classes[idx].append(b.id)
        for lab in (begin_label(b), end_label(b)):
            if lab is not None and lab not in labels[idx]:
                labels[idx].append(lab)
    return ProcessBlockPartition(class_of, classes, labels)


# ---------------------------------------------------------------------------
# Well-formedness
# ---------------------------------------------------------------------------

@dataclass
class Violation:
    condition: str  # "1".."5" or a named extra rule
    blocks: List[int]
    message: str


@dataclass
class WellFormednessReport:
    ok: bool
    violations: List[Violation] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def pretty(self) -> str:
        if self.ok and not self.warnings:
            return "ok"
        lines = []
        for v in self.violations:
            lines.append(f"[{v.condition}] {v.message}")
        for w in self.warnings:
            lines.append(f"[warning] {w}")
        if self.ok:
            lines.insert(0, "ok")
        return "\n".join(lines)


def labels_l1(p: Program) -> Set[str]:
    out: Set[str] = set()
    for b in p.blocks:
        out |= in_labels(b) | out_labels(b)
    return out


def labels_l2(p: Program) -> Set[str]:
    out: Set[str] = set()
    for b in p.blocks:
        for lab in (begin_label(b), end_label(b)):
            if lab is not None:
                out.add(lab)
    return out


def check_well_formed(p: Program) -> WellFormednessReport:
    """Check conditions (1)-(5) plus the CRIL-specific usage rules.

    Violations are returned as data; nothing is raised.
    """
    violations: List[Violation] = []
    warnings: List[str] = []

    by_in: Dict[str, List[int]] = {}
    by_out: Dict[str, List[int]] = {}
    by_begin: Dict[str, List[int]] = {}
    by_end: Dict[str, List[int]] = {}
    for b in p.blocks:
        for l in in_labels(b):
            by_in.setdefault(l, []).append(b.id)
        for l in out_labels(b):
            by_out.setdefault(l, []).append(b.id)
        if begin_label(b) is not None:
            by_begin.setdefault(begin_label(b), []).append(b.id)
        if end_label(b) is not None:
            by_end.setdefault(end_label(b), []).append(b.id)

    l1 = labels_l1(p)
    l2 = labels_l2(p)

    # (1) every flow label joins exactly one entry to exactly one exit
    for label in sorted(l1):
        ins = by_in.get(label, [])
        outs = by_out.get(label, [])
        if len(ins) != 1 or len(outs) != 1:
            violations.append(
                Violation(
                    "1",
                    ins + outs,
                    f"label {label!r} must be used by exactly one entry and one exit "
                    f"(entries: {len(ins)}, exits: {len(outs)})",
                )
            )

    # (2) every process label has exactly one begin and one end
    for label in sorted(l2):
        begins = by_begin.get(label, [])
        ends = by_end.get(label, [])
        if len(begins) != 1 or len(ends) != 1:
            violations.append(
                Violation(
                    "2",
                    begins + ends,
                    f"label {label!r} must have exactly one begin and one end "
                    f"(begins: {len(begins)}, ends: {len(ends)})",
                )
            )

    # (3) flow labels and process labels are disjoint
    for label in sorted(l1 & l2):
        violations.append(
            Violation(
                "3",
                by_in.get(label, []) + by_begin.get(label, []),
                f"label {label!r} is used both as a flow label and as a process label",
            )
        )

    # (4) each process block carries exactly one process label
    partition = process_blocks(p)
    for idx, labels in enumerate(partition.labels):
        if len(labels) != 1:
            violations.append(
                Violation(
                    "4",
                    partition.classes[idx],
                    f"process block {{{', '.join('b%d' % i for i in partition.classes[idx])}}} "
                    f"has {len(labels)} begin/end labels {labels}; expected exactly 1",
                )
            )

    # (5) a main process exists
    if "main" not in l2:
        violations.append(Violation("5", [], "no block is labeled 'main'"))

    # --- extra rules -------------------------------------------------------
    call_blocks = [b for b in p.blocks if isinstance(b, CallStatement)]

    for b in call_blocks:
        seen = set()
        for target in b.targets:
            if target in seen:
                violations.append(
                    Violation(
                        "call-target-duplicate",
                        [b.id],
                        f"call in b{b.id} names target {target!r} twice",
                    )
                )
            seen.add(target)
            if target not in l2:
                violations.append(
                    Violation(
                        "call-target-unknown",
                        [b.id],
                        f"call in b{b.id} targets {target!r}, which has no begin/end blocks",
                    )
                )

    # semaphore variables appear only as P/V parameters
    sem_vars: Dict[str, int] = {}
    for b in p.blocks:
        if isinstance(b, InstructionBlock) and isinstance(b.instruction, (VOp, POp)):
            sem_vars.setdefault(b.instruction.var, b.id)
    for b in p.blocks:
        if isinstance(b, CallStatement):
            continue
        other = _entry_resources(b.entry) | _exit_resources(b.exit)
        inst = b.instruction
        if isinstance(inst, (VOp, POp)):
            pass
        else:
            other |= _instruction_resources(inst)
        for var in sorted(other & set(sem_vars)):
            violations.append(
                Violation(
                    "semaphore-use",
                    [sem_vars[var], b.id],
                    f"semaphore variable {var!r} (used by P/V in b{sem_vars[var]}) "
                    f"also occurs outside P/V in b{b.id}",
                )
            )

    # conditional entry/exit label pairs must be distinct
    for b in p.blocks:
        if not isinstance(b, InstructionBlock):
            continue
        if isinstance(b.entry, EntryCond) and b.entry.label_true == b.entry.label_false:
            violations.append(
                Violation(
                    "cond-labels-equal",
                    [b.id],
                    f"conditional entry of b{b.id} uses label {b.entry.label_true!r} twice",
                )
            )
        if isinstance(b.exit, ExitCond) and b.exit.label_true == b.exit.label_false:
            violations.append(
                Violation(
                    "cond-labels-equal",
                    [b.id],
                    f"conditional exit of b{b.id} uses label {b.exit.label_true!r} twice",
                )
            )

    # exactly one process block labeled main; main must not call itself
    main_classes = [i for i, labels in enumerate(partition.labels) if "main" in labels]
    if len(main_classes) == 1:
        root = main_classes[0]
        for bid in partition.classes[root]:
            b = p.block(bid)
            if isinstance(b, CallStatement) and "main" in b.targets:
                violations.append(
                    Violation(
                        "main-self-call",
                        [b.id],
                        f"b{b.id} in the main process block calls 'main' directly",
                    )
                )
    elif len(main_classes) > 1:
        violations.append(
            Violation(
                "main-unique",
                [],
                f"{len(main_classes)} process blocks carry the label 'main'",
            )
        )

    # warning: process blocks that are never called and are not main
    called = {t for b in call_blocks for t in b.targets}
    for idx, labels in enumerate(partition.labels):
        if len(labels) == 1 and labels[0] != "main" and labels[0] not in called:
            warnings.append(
                f"process block {labels[0]!r} is never called "
                f"({', '.join('b%d' % i for i in partition.classes[idx])})"
            )

    return WellFormednessReport(ok=not violations, violations=violations, warnings=warnings)


# ---------------------------------------------------------------------------
# Program index used by the machine
# ---------------------------------------------------------------------------

@dataclass
class ProgramInfo:
    """Lookup tables derived from a well-formed program."""

    program: Program
    partition: ProcessBlockPartition
    in_block: Dict[str, BasicBlock]     # label -> the block with label in in(b)
    out_block: Dict[str, BasicBlock]    # label -> the block with label in out(b)
    begin_block: Dict[str, BasicBlock]  # process label -> its begin block
    end_block: Dict[str, BasicBlock]    # process label -> its end block
    reads: Dict[int, FrozenSet[str]]
    writes: Dict[int, FrozenSet[str]]


def program_info(p: Program, report: Optional[WellFormednessReport] = None) -> ProgramInfo:
    """Build the execution index; requires a well-formed program."""
    from .errors import NotWellFormed

    if report is None:
        report = check_well_formed(p)
    if not report.ok:
        raise NotWellFormed(report)
    in_block: Dict[str, BasicBlock] = {}
    out_block: Dict[str, BasicBlock] = {}
    begin_block: Dict[str, BasicBlock] = {}
    end_block: Dict[str, BasicBlock] = {}
    for b in p.blocks:
        for l in in_labels(b):
            in_block[l] = b
        for l in out_labels(b):
            out_block[l] = b
        if begin_label(b) is not None:
            begin_block[begin_label(b)] = b
        if end_label(b) is not None:
            end_block[end_label(b)] = b
    reads = {b.id: read_set(b) for b in p.blocks}
    writes = {b.id: write_set(b) for b in p.blocks}
    return ProgramInfo(
        p, process_blocks(p), in_block, out_block, begin_block, end_block, reads, writes
    )
