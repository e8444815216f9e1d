"""Toolchain for CRIL, a concurrent reversible intermediate language.

Parse `.cril` programs, check their static well-formedness, execute
them forward and backward under a small-step semantics whose reversal
is gated by a causality-tracking annotation DAG, explore and verify the
resulting transition system, and debug executions interactively.
"""

from .adag import AnnotationDAG, empty_dag
from .analysis import (
    ProcessBlockPartition,
    WellFormednessReport,
    check_well_formed,
    in_labels,
    out_labels,
    process_blocks,
    program_info,
    read_set,
    write_set,
)
from .errors import (
    AssertFailure,
    CrilError,
    NegativeHeapAddress,
    NotEnabled,
    NotWellFormed,
    ParseError,
    ReplayError,
)
from .ltsi import (
    CombinedState,
    Ltsi,
    RunResult,
    independent,
    independent_labels,
    random_scheduler,
    replay,
    round_robin_scheduler,
    run,
)
from .machine import BACKWARD, FORWARD, Config, Machine, ProgTransition
from .syntax import Program, parse_file, parse_program, render_program
from .verify import LtsGraph, PropertyReport, explore

__all__ = [
    "AnnotationDAG",
    "AssertFailure",
    "BACKWARD",
    "CombinedState",
    "Config",
    "CrilError",
    "FORWARD",
    "LtsGraph",
    "Ltsi",
    "Machine",
    "NegativeHeapAddress",
    "NotEnabled",
    "NotWellFormed",
    "ParseError",
    "ProcessBlockPartition",
    "ProgTransition",
    "Program",
    "PropertyReport",
    "ReplayError",
    "RunResult",
    "WellFormednessReport",
    "check_well_formed",
    "empty_dag",
    "explore",
    "in_labels",
    "independent",
    "independent_labels",
    "out_labels",
    "parse_file",
    "parse_program",
    "process_blocks",
    "program_info",
    "random_scheduler",
    "read_set",
    "render_program",
    "replay",
    "round_robin_scheduler",
    "run",
    "write_set",
]
