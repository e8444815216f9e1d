"""Parse a CRIL program and inspect its static structure.

Run from the repository root:  python demos/01_parse_and_analyze.py
"""

from pathlib import Path

from cril import check_well_formed, parse_file, process_blocks, read_set, render_program, write_set

PROGRAMS = Path(__file__).resolve().parents[1] / "programs"

program = parse_file(PROGRAMS / "shared.cril")

print("=== source (pretty-printed) ===")
print(render_program(program))

print("=== read/write sets ===")
for block in program.blocks:
    print(f"  b{block.id}: read={sorted(read_set(block))!r:24} write={sorted(write_set(block))!r}")

print("\n=== process blocks ===")
partition = process_blocks(program)
for i, ids in enumerate(partition.classes):
    label = partition.label_of_class(i)
    print(f"  {label}: {', '.join('b%d' % b for b in ids)}")

print("\n=== well-formedness ===")
report = check_well_formed(program)
print(report.pretty())

# the checker catches misuse; for example a semaphore variable used in
# arithmetic:
from cril import parse_program

bad = parse_program("begin main\ns += 1\n-> l\n\nl <-\nV s\nend main")
print("\n=== a deliberately broken program ===")
print(check_well_formed(bad).pretty())
