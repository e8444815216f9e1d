"""Concrete syntax for CRIL programs: AST, parser, pretty-printer.

A program is an unordered collection of basic blocks.  The text format is
line oriented:

  * an instruction block is exactly three consecutive non-blank lines
    (entry point / instruction / exit point);
  * a call statement is a single line `l <- call l1,...,ln -> l'`;
  * blocks are separated by one or more blank lines;
  * `#` starts a comment running to the end of the line.

Entry points:   `l <-`   |   `l1;l2 <- e`   |   `begin l`
Exit points:    `-> l`   |   `e -> l1;l2`   |   `end l`
Instructions:   `left += e`, `left -= e`, `left ^= e`, `left1 <-> left2`,
                `V x`, `P x`, `assert e`, `skip`

where `left` is a variable or a heap cell `M[x]` with a variable index.
Expression operators are + - ^ == != < <= > >= && || and unary !, with
C precedence (`^` binds below comparisons).  Integers are 64-bit signed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .errors import ParseError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

KEYWORDS = {"begin", "end", "call", "skip", "assert", "V", "P", "M"}

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class HeapRef:
    """A heap cell M[x]; the index is always a single variable."""

    index: str


@dataclass(frozen=True)
class Unary:
    op: str  # only '!'
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


Expr = Union[IntLit, VarRef, HeapRef, Unary, Binary]
LeftValue = Union[VarRef, HeapRef]


@dataclass(frozen=True)
class EntryUncond:
    label: str


@dataclass(frozen=True)
class EntryCond:
    label_true: str
    label_false: str
    cond: Expr


@dataclass(frozen=True)
class EntryBegin:
    label: str


@dataclass(frozen=True)
class ExitUncond:
    label: str


@dataclass(frozen=True)
class ExitCond:
    cond: Expr
    label_true: str
    label_false: str


@dataclass(frozen=True)
class ExitEnd:
    label: str


EntryPoint = Union[EntryUncond, EntryCond, EntryBegin]
ExitPoint = Union[ExitUncond, ExitCond, ExitEnd]


@dataclass(frozen=True)
class Update:
    left: LeftValue
    op: str  # '+', '-', or '^'
    expr: Expr


@dataclass(frozen=True)
class Exchange:
    left1: LeftValue
    left2: LeftValue


@dataclass(frozen=True)
class VOp:
    var: str


@dataclass(frozen=True)
class POp:
    var: str


@dataclass(frozen=True)
class Assert:
    cond: Expr


@dataclass(frozen=True)
class Skip:
    pass


Instruction = Union[Update, Exchange, VOp, POp, Assert, Skip]


@dataclass(frozen=True)
class InstructionBlock:
    id: int
    entry: EntryPoint
    instruction: Instruction
    exit: ExitPoint


@dataclass(frozen=True)
class CallStatement:
    """`l <- call l1,...,ln -> l'`; entry and exit are unconditional."""

    id: int
    entry_label: str
    targets: tuple
    exit_label: str


BasicBlock = Union[InstructionBlock, CallStatement]


@dataclass(frozen=True)
class Program:
    blocks: tuple
    vars: frozenset

    def block(self, block_id: int) -> BasicBlock:
        return self.blocks[block_id - 1]


# ---------------------------------------------------------------------------
# Expression scanning / parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><->|<-|->|\+=|-=|\^=|&&|\|\||==|!=|<=|>=|[-+^<>!()\[\];,])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, line: int) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(line, f"unexpected character {text[pos]!r}")
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append((m.lastgroup, m.group()))
    return tokens


class _TokenStream:
    def __init__(self, tokens: list, line: int):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self) -> Optional[str]:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][1]
        return None

    def peek_kind(self) -> Optional[str]:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][0]
        return None

    def next(self) -> str:
        if self.pos >= len(self.tokens):
            raise ParseError(self.line, "unexpected end of line")
        tok = self.tokens[self.pos][1]
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.next()
        if tok != text:
            raise ParseError(self.line, f"expected {text!r}, found {tok!r}")

    def expect_ident(self) -> str:
        if self.peek_kind() != "ident":
            raise ParseError(self.line, f"expected identifier, found {self.peek()!r}")
        name = self.next()
        if name in KEYWORDS:
            raise ParseError(self.line, f"{name!r} is a reserved word")
        return name

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def require_end(self) -> None:
        if not self.at_end():
            raise ParseError(self.line, f"trailing input {self.peek()!r}")


_COMPARE_OPS = {"<", "<=", ">", ">="}
_EQUALITY_OPS = {"==", "!="}


def _parse_expr(ts: _TokenStream) -> Expr:
    return _parse_or(ts)


def _parse_or(ts: _TokenStream) -> Expr:
    e = _parse_and(ts)
    while ts.peek() == "||":
        ts.next()
        e = Binary("||", e, _parse_and(ts))
    return e


def _parse_and(ts: _TokenStream) -> Expr:
    e = _parse_xor(ts)
    while ts.peek() == "&&":
        ts.next()
        e = Binary("&&", e, _parse_xor(ts))
    return e


def _parse_xor(ts: _TokenStream) -> Expr:
    e = _parse_equality(ts)
    while ts.peek() == "^":
        ts.next()
        e = Binary("^", e, _parse_equality(ts))
    return e


def _parse_equality(ts: _TokenStream) -> Expr:
    e = _parse_compare(ts)
    while ts.peek() in _EQUALITY_OPS:
        op = ts.next()
        e = Binary(op, e, _parse_compare(ts))
    return e


def _parse_compare(ts: _TokenStream) -> Expr:
    e = _parse_add(ts)
    while ts.peek() in _COMPARE_OPS:
        op = ts.next()
        e = Binary(op, e, _parse_add(ts))
    return e


def _parse_add(ts: _TokenStream) -> Expr:
    e = _parse_unary(ts)
    while ts.peek() in ("+", "-"):
        op = ts.next()
        e = Binary(op, e, _parse_unary(ts))
    return e


def _parse_unary(ts: _TokenStream) -> Expr:
    if ts.peek() == "!":
        ts.next()
        return Unary("!", _parse_unary(ts))
    return _parse_primary(ts)


def _check_int_range(value: int, line: int) -> int:
    if not INT64_MIN <= value <= INT64_MAX:
        raise ParseError(line, f"integer literal {value} out of 64-bit range")
    return value


def _parse_primary(ts: _TokenStream) -> Expr:
    kind = ts.peek_kind()
    tok = ts.peek()
    if tok == "(":
        ts.next()
        e = _parse_expr(ts)
        ts.expect(")")
        return e
    if tok == "-":
        # A leading minus folds into an integer literal; subtraction is
        # handled one level up.
        ts.next()
        if ts.peek_kind() != "int":
            raise ParseError(ts.line, "'-' here must prefix an integer literal")
        value = -int(ts.next())
        return IntLit(_check_int_range(value, ts.line))
    if kind == "int":
        value = int(ts.next())
        return IntLit(_check_int_range(value, ts.line))
    if tok == "M":
        ts.next()
        ts.expect("[")
        index = ts.expect_ident()
        ts.expect("]")
        return HeapRef(index)
    if kind == "ident":
        return VarRef(ts.expect_ident())
    raise ParseError(ts.line, f"expected expression, found {tok!r}")


def _parse_left_value(ts: _TokenStream) -> LeftValue:
    if ts.peek() == "M":
        ts.next()
        ts.expect("[")
        index = ts.expect_ident()
        ts.expect("]")
        return HeapRef(index)
    return VarRef(ts.expect_ident())


def parse_expr(text: str, line: int = 0) -> Expr:
    """Parse a standalone expression (used by tests and tools)."""
    ts = _TokenStream(_tokenize(text, line), line)
    e = _parse_expr(ts)
    ts.require_end()
    return e


# ---------------------------------------------------------------------------
# Occurrence helpers (needed for parse-time restrictions)
# ---------------------------------------------------------------------------

def expr_vars(e: Expr) -> frozenset:
    """Variable names occurring in an expression (heap indexes included)."""
    if isinstance(e, IntLit):
        return frozenset()
    if isinstance(e, VarRef):
        return frozenset((e.name,))
    if isinstance(e, HeapRef):
        return frozenset((e.index,))
    if isinstance(e, Unary):
        return expr_vars(e.operand)
    return expr_vars(e.lhs) | expr_vars(e.rhs)


def expr_has_heap_ref(e: Expr) -> bool:
    if isinstance(e, HeapRef):
        return True
    if isinstance(e, Unary):
        return expr_has_heap_ref(e.operand)
    if isinstance(e, Binary):
        return expr_has_heap_ref(e.lhs) or expr_has_heap_ref(e.rhs)
    return False


def _left_value_vars(left: LeftValue) -> frozenset:
    if isinstance(left, VarRef):
        return frozenset((left.name,))
    return frozenset((left.index,))


def _check_instruction(inst: Instruction, line: int) -> None:
    if isinstance(inst, Update):
        if isinstance(inst.left, VarRef):
            if inst.left.name in expr_vars(inst.expr):
                raise ParseError(
                    line, f"variable {inst.left.name!r} occurs in its own update expression"
                )
        else:
            if expr_has_heap_ref(inst.expr):
                raise ParseError(line, "heap reference in the expression of a heap update")
    elif isinstance(inst, Exchange):
        shared = _left_value_vars(inst.left1) & _left_value_vars(inst.left2)
        if shared:
            name = sorted(shared)[0]
            raise ParseError(line, f"variable {name!r} occurs on both sides of <->")


# ---------------------------------------------------------------------------
# Line-level parsing
# ---------------------------------------------------------------------------

def _parse_entry(text: str, line: int) -> EntryPoint:
    ts = _TokenStream(_tokenize(text, line), line)
    if ts.peek() == "begin":
        ts.next()
        label = ts.expect_ident()
        ts.require_end()
        return EntryBegin(label)
    first = ts.expect_ident()
    if ts.peek() == ";":
        ts.next()
        second = ts.expect_ident()
        ts.expect("<-")
        cond = _parse_expr(ts)
        ts.require_end()
        return EntryCond(first, second, cond)
    ts.expect("<-")
    ts.require_end()
    return EntryUncond(first)


def _parse_exit(text: str, line: int) -> ExitPoint:
    ts = _TokenStream(_tokenize(text, line), line)
    if ts.peek() == "end":
        ts.next()
        label = ts.expect_ident()
        ts.require_end()
        return ExitEnd(label)
    if ts.peek() == "->":
        ts.next()
        label = ts.expect_ident()
        ts.require_end()
        return ExitUncond(label)
    cond = _parse_expr(ts)
    ts.expect("->")
    first = ts.expect_ident()
    ts.expect(";")
    second = ts.expect_ident()
    ts.require_end()
    return ExitCond(cond, first, second)


def _parse_instruction(text: str, line: int) -> Instruction:
    ts = _TokenStream(_tokenize(text, line), line)
    head = ts.peek()
    if head == "skip":
        ts.next()
        ts.require_end()
        return Skip()
    if head == "assert":
        ts.next()
        cond = _parse_expr(ts)
        ts.require_end()
        return Assert(cond)
    if head in ("V", "P"):
        ts.next()
        var = ts.expect_ident()
        ts.require_end()
        inst = VOp(var) if head == "V" else POp(var)
        return inst
    left = _parse_left_value(ts)
    op = ts.next()
    if op in ("+=", "-=", "^="):
        expr = _parse_expr(ts)
        ts.require_end()
        inst = Update(left, op[0], expr)
    elif op == "<->":
        right = _parse_left_value(ts)
        ts.require_end()
        inst = Exchange(left, right)
    else:
        raise ParseError(line, f"expected '+=', '-=', '^=' or '<->', found {op!r}")
    _check_instruction(inst, line)
    return inst


def _parse_call(text: str, line: int) -> tuple:
    ts = _TokenStream(_tokenize(text, line), line)
    entry = ts.expect_ident()
    ts.expect("<-")
    ts.expect("call")
    targets = [ts.expect_ident()]
    while ts.peek() == ",":
        ts.next()
        targets.append(ts.expect_ident())
    ts.expect("->")
    exit_label = ts.expect_ident()
    ts.require_end()
    return entry, tuple(targets), exit_label


def _strip(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


def _chunks(text: str) -> Iterator[list]:
    """Yield [(lineno, content), ...] groups separated by blank lines."""
    current = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = _strip(raw)
        if content:
            current.append((lineno, content))
        elif current:
            yield current
            current = []
    if current:
        yield current


def parse_program(text: str) -> Program:
    """Parse CRIL source text into a Program.

    Syntactic restrictions on instructions (a variable may not occur in
    its own update expression, heap updates may not read the heap, the
    two sides of an exchange must differ) are enforced here and raise
    ParseError with the offending line number.
    """
    blocks = []
    for chunk in _chunks(text):
        block_id = len(blocks) + 1
        if len(chunk) == 1:
            lineno, content = chunk[0]
            entry, targets, exit_label = _parse_call(content, lineno)
            blocks.append(CallStatement(block_id, entry, targets, exit_label))
        elif len(chunk) == 3:
            (l1, entry_text), (l2, inst_text), (l3, exit_text) = chunk
            entry = _parse_entry(entry_text, l1)
            instruction = _parse_instruction(inst_text, l2)
            exit_point = _parse_exit(exit_text, l3)
            blocks.append(InstructionBlock(block_id, entry, instruction, exit_point))
        else:
            raise ParseError(
                chunk[0][0],
                f"a block is one call line or three lines (entry/instruction/exit); got {len(chunk)} lines",
            )
    if not blocks:
        raise ParseError(1, "empty program: no blocks")
    return Program(tuple(blocks), frozenset(_collect_vars(blocks)))


def _collect_vars(blocks: list) -> set:
    names = set()
    for b in blocks:
        if isinstance(b, CallStatement):
            continue
        for part in (b.entry, b.exit):
            if isinstance(part, (EntryCond, ExitCond)):
                names |= expr_vars(part.cond)
        inst = b.instruction
        if isinstance(inst, Update):
            names |= _left_value_vars(inst.left) | expr_vars(inst.expr)
        elif isinstance(inst, Exchange):
            names |= _left_value_vars(inst.left1) | _left_value_vars(inst.left2)
        elif isinstance(inst, (VOp, POp)):
            names.add(inst.var)
        elif isinstance(inst, Assert):
            names |= expr_vars(inst.cond)
    return names


def parse_file(path) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_program(fh.read())


# ---------------------------------------------------------------------------
# Pretty printer
# ---------------------------------------------------------------------------

_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "^": 3,
    "==": 4,
    "!=": 4,
    "<": 5,
    "<=": 5,
    ">": 5,
    ">=": 5,
    "+": 6,
    "-": 6,
}


def render_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, IntLit):
        text = str(e.value)
        return f"({text})" if e.value < 0 and parent_prec > 0 else text
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, HeapRef):
        return f"M[{e.index}]"
    if isinstance(e, Unary):
        return "!" + render_expr(e.operand, 7)
    prec = _PRECEDENCE[e.op]
    # Left-associative operators: the right child needs parens at equal
    # precedence, the left child does not.
    lhs = render_expr(e.lhs, prec)
    rhs = render_expr(e.rhs, prec + 1)
    text = f"{lhs} {e.op} {rhs}"
    return f"({text})" if prec < parent_prec else text


def _render_left(left: LeftValue) -> str:
    if isinstance(left, VarRef):
        return left.name
    return f"M[{left.index}]"


def render_entry(entry: EntryPoint) -> str:
    if isinstance(entry, EntryBegin):
        return f"begin {entry.label}"
    if isinstance(entry, EntryUncond):
        return f"{entry.label} <-"
    return f"{entry.label_true};{entry.label_false} <- {render_expr(entry.cond)}"


def render_exit(exit_point: ExitPoint) -> str:
    if isinstance(exit_point, ExitEnd):
        return f"end {exit_point.label}"
    if isinstance(exit_point, ExitUncond):
        return f"-> {exit_point.label}"
    return f"{render_expr(exit_point.cond)} -> {exit_point.label_true};{exit_point.label_false}"


def render_instruction(inst: Instruction) -> str:
    if isinstance(inst, Skip):
        return "skip"
    if isinstance(inst, Assert):
        return f"assert {render_expr(inst.cond)}"
    if isinstance(inst, VOp):
        return f"V {inst.var}"
    if isinstance(inst, POp):
        return f"P {inst.var}"
    if isinstance(inst, Update):
        return f"{_render_left(inst.left)} {inst.op}= {render_expr(inst.expr)}"
    return f"{_render_left(inst.left1)} <-> {_render_left(inst.left2)}"


def render_block(b: BasicBlock) -> str:
    if isinstance(b, CallStatement):
        return f"{b.entry_label} <- call {','.join(b.targets)} -> {b.exit_label}"
    return "\n".join(
        (render_entry(b.entry), render_instruction(b.instruction), render_exit(b.exit))
    )


def render_program(p: Program) -> str:
    """Inverse of parse_program up to comments and blank-line layout."""
    return "\n\n".join(render_block(b) for b in p.blocks) + "\n"
