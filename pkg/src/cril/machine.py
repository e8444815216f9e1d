"""The basic bidirectional operational semantics of CRIL.

A program configuration holds the variable store, the heap, and a
process map assigning (label, stage) pairs to active process ids.  Every
step is labeled with (pid, read set, write set) and a direction; each
forward step has an exact inverse.  This layer has no reversal control:
backward steps may diverge from the forward history (the annotation DAG
in `adag` supplies the control).

Integers are 64-bit two's complement with wrapping `+ - ^`, which makes
the update instructions exact bijections on the store.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from . import syntax
from .analysis import ProgramInfo, program_info
from .errors import (
    AssertFailure,
    NegativeHeapAddress,
    NotEnabled,
    format_pid,
)
from .syntax import (
    Assert,
    CallStatement,
    EntryCond,
    EntryUncond,
    Exchange,
    ExitCond,
    ExitUncond,
    HeapRef,
    InstructionBlock,
    POp,
    Program,
    Skip,
    Update,
    VarRef,
    VOp,
)

Pid = Tuple[int, ...]
ROOT: Pid = ()

FORWARD = "forward"
BACKWARD = "backward"

STAGE_BEGIN = "begin"
STAGE_RUN = "run"
STAGE_END = "end"

_MASK = (1 << 64) - 1
_SIGN = 1 << 63


def wrap64(value: int) -> int:
    """Reduce an integer into signed 64-bit two's complement."""
    value &= _MASK
    return value - (1 << 64) if value & _SIGN else value


@dataclass(frozen=True)
class ProgTransition:
    """One labeled step of the basic semantics.

    `kind` is 'inst', 'fork', or 'merge'; rd/wt are the block's read and
    write sets for instruction steps and empty for fork/merge.
    """

    pid: Pid
    direction: str
    kind: str
    block_id: int
    rd: FrozenSet[str]
    wt: FrozenSet[str]

    @property
    def label(self) -> Tuple[Pid, FrozenSet[str], FrozenSet[str], str]:
        return (self.pid, self.rd, self.wt, self.direction)

    def reversed(self) -> "ProgTransition":
        return ProgTransition(
            self.pid,
            BACKWARD if self.direction == FORWARD else FORWARD,
            self.kind,
            self.block_id,
            self.rd,
            self.wt,
        )

    def describe(self, program: Optional[Program] = None) -> str:
        arrow = "->" if self.direction == FORWARD else "<-"
        text = f"{arrow} b{self.block_id} [{self.kind}] pid={format_pid(self.pid) or 'e'}"
        if program is not None:
            b = program.block(self.block_id)
            if isinstance(b, InstructionBlock):
                text += f" ({syntax.render_instruction(b.instruction)})"
            else:
                text += f" (call {','.join(b.targets)})"
        return text


class Config:
    """An immutable program configuration (store, heap, process map).

    Never mutated in place; `Machine.apply` returns fresh configurations.
    Equality and hashing are structural over (rho, sigma, processes) —
    the program is fixed per machine and excluded.
    """

    __slots__ = ("rho", "sigma", "processes", "_key")

    def __init__(self, rho: Dict[str, int], sigma: Dict[int, int], processes: Dict[Pid, Tuple[str, str]]):
        self.rho = rho
        self.sigma = sigma  # sparse: zero cells are absent
        self.processes = processes
        self._key = None

    def key(self) -> tuple:
        if self._key is None:
            self._key = (
                tuple(sorted(self.rho.items())),
                tuple(sorted(self.sigma.items())),
                tuple(sorted(self.processes.items())),
            )
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, Config) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        procs = ", ".join(
            f"{format_pid(p) or 'e'}:({l},{s})" for p, (l, s) in sorted(self.processes.items())
        )
        return f"Config(rho={self.rho}, sigma={self.sigma}, Pr=[{procs}])"

    def children(self, pid: Pid) -> List[Pid]:
        n = len(pid)
        return sorted(q for q in self.processes if len(q) == n + 1 and q[:n] == pid)

    def is_leaf(self, pid: Pid) -> bool:
        n = len(pid)
        return not any(len(q) > n and q[:n] == pid for q in self.processes)

    def to_json(self) -> dict:
        return {
            "rho": dict(sorted(self.rho.items())),
            "sigma": {str(addr): val for addr, val in sorted(self.sigma.items())},
            "processes": [
                {"pid": format_pid(pid), "label": label, "stage": stage}
                for pid, (label, stage) in sorted(self.processes.items())
            ],
        }


@dataclass
class BlockedReason:
    """Why a process has no enabled transition in some direction."""

    pid: Pid
    direction: str
    kind: str  # 'semaphore', 'assert', 'guard-mismatch', 'waiting-children', 'at-boundary'
    block_id: Optional[int]
    message: str


class Machine:
    """Pure transition function over configurations of one program."""

    def __init__(self, program: Program, info: Optional[ProgramInfo] = None):
        self.program = program
        self.info = info if info is not None else program_info(program)

    # -- construction -------------------------------------------------------

    def initial_config(self) -> Config:
        rho = {v: 0 for v in sorted(self.program.vars)}
        return Config(rho, {}, {ROOT: ("main", STAGE_BEGIN)})

    def is_final(self, c: Config) -> bool:
        return c.processes == {ROOT: ("main", STAGE_END)}

    # -- expressions --------------------------------------------------------

    def eval_expr(self, e, rho: Dict[str, int], sigma: Dict[int, int]) -> int:
        if isinstance(e, syntax.IntLit):
            return e.value
        if isinstance(e, VarRef):
            return rho.get(e.name, 0)
        if isinstance(e, HeapRef):
            addr = rho.get(e.index, 0)
            if addr < 0:
                raise NegativeHeapAddress(e.index, addr)
            return sigma.get(addr, 0)
        if isinstance(e, syntax.Unary):
            return 0 if self.eval_expr(e.operand, rho, sigma) != 0 else 1
        lhs = self.eval_expr(e.lhs, rho, sigma)
        rhs = self.eval_expr(e.rhs, rho, sigma)
        op = e.op
        if op == "+":
            return wrap64(lhs + rhs)
        if op == "-":
            return wrap64(lhs - rhs)
        if op == "^":
            return wrap64(lhs ^ rhs)
        if op == "==":
            return int(lhs == rhs)
        if op == "!=":
            return int(lhs != rhs)
        if op == "<":
            return int(lhs < rhs)
        if op == "<=":
            return int(lhs <= rhs)
        if op == ">":
            return int(lhs > rhs)
        if op == ">=":
            return int(lhs >= rhs)
        if op == "&&":
            return int(lhs != 0 and rhs != 0)
        if op == "||":
            return int(lhs != 0 or rhs != 0)
        raise AssertionError(f"unknown operator {op!r}")

    # -- transition enumeration ----------------------------------------------

    def enabled(self, c: Config, direction: str) -> List[ProgTransition]:
        """All transitions the rules permit in `direction`, ordered by pid.

        At most one transition exists per process and direction; an empty
        list from every process means the configuration is terminal,
        blocked, or (forward) final.
        """
        out: List[ProgTransition] = []
        for pid in sorted(c.processes):
            t = self._process_transition(c, pid, direction)
            if t is not None:
                out.append(t)
        return out

    def enabled_for(self, c: Config, pid: Pid, direction: str) -> Optional[ProgTransition]:
        if pid not in c.processes:
            return None
        return self._process_transition(c, pid, direction)

    def blocked_reasons(self, c: Config, direction: str) -> List[BlockedReason]:
        """Diagnose every process that has no transition in `direction`."""
        reasons: List[BlockedReason] = []
        for pid in sorted(c.processes):
            if self._process_transition(c, pid, direction) is None:
                reasons.append(self._blocked_reason(c, pid, direction))
        return reasons

    def _transition_for_block(self, c: Config, pid: Pid, b, direction: str) -> Optional[ProgTransition]:
        if isinstance(b, CallStatement):
            raise AssertionError("instruction transition requested for a call block")
        if not self._instruction_applicable(c, b.instruction, direction):
            return None
        return ProgTransition(
            pid, direction, "inst", b.id, self.info.reads[b.id], self.info.writes[b.id]
        )

    def _process_transition(self, c: Config, pid: Pid, direction: str) -> Optional[ProgTransition]:
        label, stage = c.processes[pid]
        children = c.children(pid)

        if children:
            # A forking parent is suspended until its children begin (backward)
            # or end (forward) together.
            if stage != STAGE_RUN:
                return None
            b = self.info.out_block.get(label)
            if not isinstance(b, CallStatement):
                return None
            want = STAGE_END if direction == FORWARD else STAGE_BEGIN
            if len(children) != len(b.targets):
                return None
            for i, target in enumerate(b.targets):
                child = pid + (i + 1,)
                if c.processes.get(child) != (target, want):
                    return None
                if not c.is_leaf(child):
                    return None
            kind = "merge" if direction == FORWARD else "fork"
            return ProgTransition(pid, direction, kind, b.id, frozenset(), frozenset())

        if direction == FORWARD:
            if stage == STAGE_BEGIN:
                return self._transition_for_block(c, pid, self.info.begin_block[label], FORWARD)
            if stage == STAGE_RUN:
                b = self.info.in_block.get(label)
                if b is None:
                    return None
                if isinstance(b, CallStatement):
                    return ProgTransition(pid, FORWARD, "fork", b.id, frozenset(), frozenset())
                if not self._entry_consistent(c, b.entry, label):
                    return None
                return self._transition_for_block(c, pid, b, FORWARD)
            return None  # stage end: the parent merges, or the run is final

        # backward
        if stage == STAGE_END:
            return self._transition_for_block(c, pid, self.info.end_block[label], BACKWARD)
        if stage == STAGE_RUN:
            b = self.info.out_block.get(label)
            if b is None:
                return None
            if isinstance(b, CallStatement):
                # Re-create the merged children in their end stages.
                return ProgTransition(pid, BACKWARD, "merge", b.id, frozenset(), frozenset())
            if not self._exit_consistent(c, b.exit, label):
                return None
            return self._transition_for_block(c, pid, b, BACKWARD)
        return None  # stage begin: removal happens through the parent's fork

    def _entry_consistent(self, c: Config, entry, arrived_at: str) -> bool:
        # Reversibility guard: a conditional entry must agree with the label
        # the control arrived at, evaluated in the pre-instruction state.
        if isinstance(entry, EntryCond):
            value = self.eval_expr(entry.cond, c.rho, c.sigma)
            return (value != 0) == (arrived_at == entry.label_true)
        return True

    def _exit_consistent(self, c: Config, exit_point, arrived_at: str) -> bool:
        if isinstance(exit_point, ExitCond):
            value = self.eval_expr(exit_point.cond, c.rho, c.sigma)
            return (value != 0) == (arrived_at == exit_point.label_true)
        return True

    def _instruction_applicable(self, c: Config, inst, direction: str) -> bool:
        # V forward / P backward need the semaphore at 0; P forward /
        # V backward need it at 1.  A failing assert is not enabled: the
        # process waits (another process may still change the condition).
        if isinstance(inst, VOp):
            need = 0 if direction == FORWARD else 1
            return c.rho.get(inst.var, 0) == need
        if isinstance(inst, POp):
            need = 1 if direction == FORWARD else 0
            return c.rho.get(inst.var, 0) == need
        if isinstance(inst, Assert):
            return self.eval_expr(inst.cond, c.rho, c.sigma) != 0
        return True

    def _blocked_reason(self, c: Config, pid: Pid, direction: str) -> BlockedReason:
        label, stage = c.processes[pid]
        children = c.children(pid)
        if children:
            return BlockedReason(
                pid, direction, "waiting-children", None,
                f"process {format_pid(pid) or 'e'} waits for {len(children)} subprocesses",
            )
        if direction == FORWARD and stage == STAGE_END:
            return BlockedReason(pid, direction, "at-boundary", None, "process has ended")
        if direction == BACKWARD and stage == STAGE_BEGIN:
            return BlockedReason(pid, direction, "at-boundary", None, "process is at its begin")
        b = None
        guard = None
        if direction == FORWARD:
            if stage == STAGE_BEGIN:
                b = self.info.begin_block[label]
            else:
                b = self.info.in_block.get(label)
                if isinstance(b, InstructionBlock) and not self._entry_consistent(c, b.entry, label):
                    guard = "guard-mismatch"
        else:
            if stage == STAGE_END:
                b = self.info.end_block[label]
            else:
                b = self.info.out_block.get(label)
                if isinstance(b, InstructionBlock) and not self._exit_consistent(c, b.exit, label):
                    guard = "guard-mismatch"
        if b is None:
            return BlockedReason(pid, direction, "at-boundary", None, f"no block at label {label!r}")
        if guard:
            return BlockedReason(
                pid, direction, "guard-mismatch", b.id,
                f"entry/exit condition of b{b.id} contradicts the control label {label!r} "
                "(reversibility fault: ill-formed control flow)",
            )
        if isinstance(b, InstructionBlock):
            inst = b.instruction
            if isinstance(inst, (VOp, POp)):
                return BlockedReason(
                    pid, direction, "semaphore", b.id,
                    f"b{b.id} waits on semaphore {inst.var!r} "
                    f"(value {c.rho.get(inst.var, 0)})",
                )
            if isinstance(inst, Assert):
                return BlockedReason(
                    pid, direction, "assert", b.id,
                    f"assert in b{b.id} evaluates to 0",
                )
        return BlockedReason(pid, direction, "at-boundary", None, "no transition")

    # -- applying transitions -------------------------------------------------

    def apply(self, c: Config, t: ProgTransition) -> Config:
        """Apply a transition; the caller guarantees t is enabled on c."""
        if t.kind == "fork":
            return self._apply_fork(c, t)
        if t.kind == "merge":
            return self._apply_merge(c, t)
        return self._apply_inst(c, t)

    def _apply_fork(self, c: Config, t: ProgTransition) -> Config:
        b = self.program.block(t.block_id)
        processes = dict(c.processes)
        if t.direction == FORWARD:
            processes[t.pid] = (b.exit_label, STAGE_RUN)
            for i, target in enumerate(b.targets):
                processes[t.pid + (i + 1,)] = (target, STAGE_BEGIN)
        else:
            for i in range(len(b.targets)):
                del processes[t.pid + (i + 1,)]
            processes[t.pid] = (b.entry_label, STAGE_RUN)
        return Config(c.rho, c.sigma, processes)

    def _apply_merge(self, c: Config, t: ProgTransition) -> Config:
        b = self.program.block(t.block_id)
        processes = dict(c.processes)
        if t.direction == FORWARD:
            for i in range(len(b.targets)):
                del processes[t.pid + (i + 1,)]
        else:
            for i, target in enumerate(b.targets):
                processes[t.pid + (i + 1,)] = (target, STAGE_END)
        return Config(c.rho, c.sigma, processes)

    def _apply_inst(self, c: Config, t: ProgTransition) -> Config:
        b = self.program.block(t.block_id)
        rho, sigma = self._apply_instruction(c, b.instruction, t)
        processes = dict(c.processes)
        if t.direction == FORWARD:
            processes[t.pid] = self._control_after_exit(b.exit, rho, sigma)
        else:
            processes[t.pid] = self._control_after_entry(b.entry, rho, sigma)
        return Config(rho, sigma, processes)

    def _control_after_exit(self, exit_point, rho, sigma) -> Tuple[str, str]:
        if isinstance(exit_point, ExitUncond):
            return (exit_point.label, STAGE_RUN)
        if isinstance(exit_point, ExitCond):
            value = self.eval_expr(exit_point.cond, rho, sigma)
            return (exit_point.label_true if value != 0 else exit_point.label_false, STAGE_RUN)
        return (exit_point.label, STAGE_END)

    def _control_after_entry(self, entry, rho, sigma) -> Tuple[str, str]:
        if isinstance(entry, EntryUncond):
            return (entry.label, STAGE_RUN)
        if isinstance(entry, EntryCond):
            value = self.eval_expr(entry.cond, rho, sigma)
            return (entry.label_true if value != 0 else entry.label_false, STAGE_RUN)
        return (entry.label, STAGE_BEGIN)

    def _read_left(self, left, rho, sigma) -> int:
        if isinstance(left, VarRef):
            return rho.get(left.name, 0)
        addr = rho.get(left.index, 0)
        if addr < 0:
            raise NegativeHeapAddress(left.index, addr)
        return sigma.get(addr, 0)

    def _write_left(self, left, value, rho, sigma) -> None:
        if isinstance(left, VarRef):
            rho[left.name] = value
        else:
            addr = rho.get(left.index, 0)
            if addr < 0:
                raise NegativeHeapAddress(left.index, addr)
            if value == 0:
                sigma.pop(addr, None)
            else:
                sigma[addr] = value

    def _apply_instruction(self, c: Config, inst, t: ProgTransition):
        rho = dict(c.rho)
        sigma = dict(c.sigma)
        forward = t.direction == FORWARD
        if isinstance(inst, Skip):
            pass
        elif isinstance(inst, Assert):
            if self.eval_expr(inst.cond, rho, sigma) == 0:
                raise AssertFailure(t.pid, t.block_id)
        elif isinstance(inst, VOp):
            expected, new = (0, 1) if forward else (1, 0)
            if rho.get(inst.var, 0) != expected:
                raise NotEnabled(f"V {inst.var}: semaphore not {expected}")
            rho[inst.var] = new
        elif isinstance(inst, POp):
            expected, new = (1, 0) if forward else (0, 1)
            if rho.get(inst.var, 0) != expected:
                raise NotEnabled(f"P {inst.var}: semaphore not {expected}")
            rho[inst.var] = new
        elif isinstance(inst, Update):
            value = self.eval_expr(inst.expr, rho, sigma)
            old = self._read_left(inst.left, rho, sigma)
            op = inst.op if forward else {"+": "-", "-": "+", "^": "^"}[inst.op]
            if op == "+":
                new = wrap64(old + value)
            elif op == "-":
                new = wrap64(old - value)
            else:
                new = wrap64(old ^ value)
            self._write_left(inst.left, new, rho, sigma)
        elif isinstance(inst, Exchange):
            # The heap index (if any) is read once; both sides see the same
            # address, which is what makes the exchange self-inverse.
            v1 = self._read_left(inst.left1, rho, sigma)
            v2 = self._read_left(inst.left2, rho, sigma)
            self._write_left(inst.left1, v2, rho, sigma)
            self._write_left(inst.left2, v1, rho, sigma)
        else:
            raise AssertionError(f"unknown instruction {inst!r}")
        return rho, sigma
