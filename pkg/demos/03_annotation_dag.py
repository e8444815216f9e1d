"""Watch the annotation DAG accumulate causality step by step, then roll
it back, and see which reversals it permits at each point.

Run from the repository root:  python demos/03_annotation_dag.py
"""

from pathlib import Path

from cril import parse_file
from cril.adag import node_str
from cril.errors import parse_pid
from cril.ltsi import BACKWARD, FORWARD, Ltsi

PROGRAMS = Path(__file__).resolve().parents[1] / "programs"
ltsi = Ltsi(parse_file(PROGRAMS / "shared.cril"))

schedule = ["e", "e", "1", "2", "3", "1", "e", "e"]
names = ["b1", "fork", "b4", "b6", "b7", "b5", "merge", "b3"]

state = ltsi.initial_state()
print("forward accumulation:")
for pid_s, name in zip(schedule, names):
    state, t = ltsi.step_pid(state, parse_pid(pid_s), FORWARD)
    dag = state.dag
    print(f"  after {name:5}  |V|={dag.node_count()}  {dag!r}")

print("\nremovable nodes at the end:",
      sorted(node_str(v) for v in state.dag.removable_nodes()))

print("\nbackward, showing what the DAG allows at each step:")
while True:
    moves = ltsi.enabled(state, BACKWARD)
    if not moves:
        break
    allowed = ", ".join(
        f"pid {'.'.join(map(str, t.pid)) or 'e'} (b{t.block_id})" for t in moves
    )
    print(f"  allowed: {allowed}")
    state = ltsi.step(state, moves[0])
print("  back at the initial state:", state == ltsi.initial_state())

print("\nGraphviz of the fully-accumulated DAG (write=solid, read=dashed):")
full, _ = ltsi.run_schedule(
    ltsi.initial_state(), [parse_pid(x) for x in schedule], FORWARD
)
print(full[-1].dag.to_dot())
