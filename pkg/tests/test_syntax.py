import pytest

from cril.errors import ParseError
from cril.syntax import (
    Binary,
    CallStatement,
    EntryBegin,
    EntryCond,
    ExitCond,
    ExitUncond,
    HeapRef,
    InstructionBlock,
    IntLit,
    Skip,
    Unary,
    Update,
    VarRef,
    parse_expr,
    parse_program,
    render_program,
)

OPERATORS = {"+", "-", "^", "==", "!=", "<", "<=", ">", ">=", "&&", "||", "!"}


def test_parse_begin_skip_block():
    p = parse_program("begin main\nskip\n-> l1")
    assert len(p.blocks) == 1
    b = p.blocks[0]
    assert isinstance(b, InstructionBlock)
    assert b.entry == EntryBegin("main")
    assert b.instruction == Skip()
    assert b.exit == ExitUncond("l1")


def test_parse_call_statement():
    p = parse_program("l1 <- call sub0,sub1,sub2 -> l2")
    b = p.blocks[0]
    assert isinstance(b, CallStatement)
    assert b.entry_label == "l1"
    assert b.targets == ("sub0", "sub1", "sub2")
    assert b.exit_label == "l2"


def test_update_variable_reads_itself_rejected():
    with pytest.raises(ParseError) as exc:
        parse_program("l <-\nx += x\n-> l2")
    assert "x" in str(exc.value)
    assert exc.value.line == 2


def test_empty_program_rejected():
    with pytest.raises(ParseError):
        parse_program("")
    with pytest.raises(ParseError):
        parse_program("\n\n# comments only\n")


def test_heap_update_cannot_read_heap():
    with pytest.raises(ParseError):
        parse_program("l <-\nM[x] += M[y]\n-> l2")
    # reading the index variable itself is fine
    p = parse_program("l <-\nM[x] += x + 1\n-> l2")
    inst = p.blocks[0].instruction
    assert inst == Update(HeapRef("x"), "+", Binary("+", VarRef("x"), IntLit(1)))


def test_exchange_same_variable_rejected():
    for bad in ("x <-> x", "x <-> M[x]", "M[x] <-> M[x]"):
        with pytest.raises(ParseError):
            parse_program(f"l <-\n{bad}\n-> l2")
    p = parse_program("l <-\nx <-> M[y]\n-> l2")
    assert p.blocks[0].instruction.left2 == HeapRef("y")


def test_conditional_entry_and_exit():
    p = parse_program("a;b <- x == 0\nskip\ny > 1 -> c;d")
    b = p.blocks[0]
    assert b.entry == EntryCond("a", "b", Binary("==", VarRef("x"), IntLit(0)))
    assert b.exit == ExitCond(Binary(">", VarRef("y"), IntLit(1)), "c", "d")


def test_cond_entry_with_equal_labels_parses():
    # purely syntactic: the well-formedness checker rejects it later
    p = parse_program("a;a <- x\nskip\n-> b")
    assert p.blocks[0].entry == EntryCond("a", "a", VarRef("x"))


def test_comments_blank_lines_and_crlf():
    text = "# header\r\nbegin main # entry\r\nskip\r\nend main\r\n\r\n"
    p = parse_program(text)
    assert len(p.blocks) == 1
    assert p.blocks[0].entry == EntryBegin("main")


def test_block_must_be_one_or_three_lines():
    with pytest.raises(ParseError):
        parse_program("begin main\nskip")
    with pytest.raises(ParseError):
        parse_program("begin main\nskip\nskip\nend main")


def test_keywords_are_reserved():
    for text in ("begin main\nV skip\nend main", "begin main\ncall += 1\nend main"):
        with pytest.raises(ParseError):
            parse_program(text)


def test_integer_literal_range():
    parse_program(f"l <-\nx += {2**63 - 1}\n-> m")
    parse_program(f"l <-\nx += -{2**63}\n-> m")
    with pytest.raises(ParseError):
        parse_program(f"l <-\nx += {2**63}\n-> m")


def test_precedence_is_c_like():
    # ^ binds below comparisons, above &&
    e = parse_expr("a ^ b == c")
    assert e == Binary("^", VarRef("a"), Binary("==", VarRef("b"), VarRef("c")))
    e = parse_expr("a && b ^ c")
    assert e == Binary("&&", VarRef("a"), Binary("^", VarRef("b"), VarRef("c")))
    e = parse_expr("!a + b < c")
    assert e == Binary(
        "<", Binary("+", Unary("!", VarRef("a")), VarRef("b")), VarRef("c")
    )
    e = parse_expr("a == b < c")  # equality below relational
    assert e == Binary("==", VarRef("a"), Binary("<", VarRef("b"), VarRef("c")))
    assert parse_expr("(a + b) ^ c") == Binary(
        "^", Binary("+", VarRef("a"), VarRef("b")), VarRef("c")
    )


def _expr_operators(e):
    if isinstance(e, Binary):
        return {e.op} | _expr_operators(e.lhs) | _expr_operators(e.rhs)
    if isinstance(e, Unary):
        return {e.op} | _expr_operators(e.operand)
    return set()


def _program_operators(p):
    ops = set()
    for b in p.blocks:
        if isinstance(b, CallStatement):
            continue
        for part in (b.entry, b.exit):
            if hasattr(part, "cond"):
                ops |= _expr_operators(part.cond)
        inst = b.instruction
        if isinstance(inst, Update):
            ops |= _expr_operators(inst.expr)
    return ops


def test_operator_set_is_closed(shared_program, racy_program, semaphore_program):
    for p in (shared_program, racy_program, semaphore_program):
        assert _program_operators(p) <= OPERATORS


def test_roundtrip_corpus(shared_program, racy_program, semaphore_program):
    for p in (shared_program, racy_program, semaphore_program):
        assert parse_program(render_program(p)) == p


def test_roundtrip_single_skip_block():
    p = parse_program("begin main\nskip\nend main")
    text = render_program(p)
    assert text == "begin main\nskip\nend main\n"
    assert parse_program(text) == p


def test_roundtrip_expression_heavy():
    text = (
        "begin main\n"
        "x += (y + -2) ^ (M[i] - 3 == z)\n"
        "x > 0 && !(y < 1) || z != 0 -> a;b\n"
        "\n"
        "a;b <- x >= y ^ 1\n"
        "M[i] <-> x\n"
        "end main\n"
    )
    p = parse_program(text)
    assert parse_program(render_program(p)) == p
