"""Shared exception types for the cril package."""


class CrilError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CrilError):
    """Malformed program text. Carries the 1-based source line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class NotWellFormed(CrilError):
    """Operation requires a well-formed program; report attached."""

    def __init__(self, report):
        super().__init__("program is not well-formed:\n" + report.pretty())
        self.report = report


class NotEnabled(CrilError):
    """A transition was applied in a state where it is not enabled."""


class AssertFailure(CrilError):
    """A forward `assert` was forced through with a zero condition.

    Assert failures abort the execution; they are not reversible steps.
    """

    def __init__(self, pid, block_id):
        super().__init__(f"assert failed in block b{block_id} (process {format_pid(pid)})")
        self.pid = pid
        self.block_id = block_id


class NegativeHeapAddress(CrilError):
    """A heap index variable evaluated to a negative address."""

    def __init__(self, var: str, value: int):
        super().__init__(f"heap index {var} = {value} is negative")
        self.var = var
        self.value = value


class ReplayError(CrilError):
    """A recorded trace does not match any enabled transition."""


def format_pid(pid) -> str:
    """Dotted process-id string; the root is the empty string."""
    return ".".join(str(i) for i in pid)


def parse_pid(text: str):
    """Inverse of format_pid. Accepts '', 'e' (root), '1', '1.2', ..."""
    text = text.strip()
    if text in ("", "e", "eps", "root"):
        return ()
    return tuple(int(part) for part in text.split("."))
