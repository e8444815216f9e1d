/** The debugger's view model.
 *
 * Everything displayed is derived from the JSON the service returned —
 * the model never computes CRIL semantics.  It keeps its own copies of
 * the store, process map, DAG, transition lists and history, and can
 * rebuild the server's canonical state structure from them, so hashing
 * that structure proves the view renders exactly the server state.
 */

import { canonicalJson, sha256Hex } from "./hash.js";
import type {
  BlockedJson,
  DagDelta,
  DagEdge,
  DagJson,
  DagNode,
  Direction,
  HistoryJson,
  MoveJson,
  ProcessEntry,
  ProgramJson,
  StateJson,
  TransitionJson,
  TransitionsJson,
} from "./types.js";

export function pidTuple(pid: string): number[] {
  return pid === "" ? [] : pid.split(".").map((part) => parseInt(part, 10));
}

function comparePids(a: string, b: string): number {
  const ta = pidTuple(a);
  const tb = pidTuple(b);
  const n = Math.min(ta.length, tb.length);
  for (let i = 0; i < n; i++) {
    if (ta[i] !== tb[i]) return ta[i] - tb[i];
  }
  return ta.length - tb.length;
}

/** Mirrors the server's node ordering: the root first, then by (pid, index). */
function compareNodes(a: DagNode, b: DagNode): number {
  if (a === null || b === null) {
    return (a === null ? 0 : 1) - (b === null ? 0 : 1);
  }
  const byPid = comparePids(a.pid, b.pid);
  return byPid !== 0 ? byPid : a.index - b.index;
}

function compareEdges(a: DagEdge, b: DagEdge): number {
  return (
    compareNodes(a.dst, b.dst) ||
    a.label.localeCompare(b.label) ||
    compareNodes(a.src, b.src)
  );
}

export function nodeName(node: DagNode): string {
  if (node === null) return "⊥";
  return `(${node.pid === "" ? "ε" : node.pid},${node.index})`;
}

export function pidName(pid: string): string {
  return pid === "" ? "ε" : pid;
}

/** One process row: stage plus the step moves the server offered. */
export interface ProcessPanel {
  pid: string;
  label: string;
  stage: string;
  forward: TransitionJson | null;
  backward: TransitionJson | null;
  forwardBlocked: BlockedJson | null;
  backwardBlocked: BlockedJson | null;
}

export interface DagLayoutNode {
  node: DagNode;
  x: number;
  y: number;
  fresh: boolean;
}

export interface DagLayoutEdge {
  kind: "write" | "read";
  label: string;
  from: DagLayoutNode;
  to: DagLayoutNode;
}

export interface DagLayout {
  lanes: { pid: string; y: number }[];
  nodes: DagLayoutNode[];
  edges: DagLayoutEdge[];
  width: number;
  height: number;
}

export interface SyncStatus {
  ok: boolean;
  viewHash: string;
  serverHash: string;
}

export class DebuggerViewModel {
  program: ProgramJson | null = null;

  // current-state fields (owned copies, not references into responses)
  rho = new Map<string, number>();
  sigma = new Map<string, number>();
  processes: ProcessEntry[] = [];
  dagNodes: DagNode[] = [];
  writeEdges: DagEdge[] = [];
  readEdges: DagEdge[] = [];
  final = false;
  version = -1;
  serverHash = "";

  forward: TransitionJson[] = [];
  backward: TransitionJson[] = [];
  forwardBlocked: BlockedJson[] = [];
  backwardBlocked: BlockedJson[] = [];

  /** Moves applied on the server (its authoritative history). */
  history: MoveJson[] = [];
  /** The strip the user scrubs: survives rewinding, truncated only when
   * a new step diverges from it. `cursor` = current position. */
  timeline: MoveJson[] = [];
  cursor = 0;
  lastError: { pid: string; dir: Direction; error: string; reason: string } | null = null;
  lastDelta: DagDelta | null = null;
  lastOutcome: string | null = null;

  setProgram(program: ProgramJson): void {
    this.program = program;
  }

  applyState(state: StateJson): void {
    this.rho = new Map(Object.entries(state.rho));
    this.sigma = new Map(Object.entries(state.sigma));
    this.processes = state.processes.map((p) => ({ ...p }));
    this.dagNodes = state.dag.nodes.map((n) => (n === null ? null : { ...n }));
    this.writeEdges = state.dag.write_edges.map(copyEdge);
    this.readEdges = state.dag.read_edges.map(copyEdge);
    this.final = state.final;
    this.version = state.version;
    this.serverHash = state.hash;
  }

  applyTransitions(t: TransitionsJson): void {
    this.forward = (t.forward ?? []).map((x) => ({ ...x }));
    this.backward = (t.backward ?? []).map((x) => ({ ...x }));
    this.forwardBlocked = (t.forward_blocked ?? []).map((x) => ({ ...x }));
    this.backwardBlocked = (t.backward_blocked ?? []).map((x) => ({ ...x }));
  }

  applyHistory(h: HistoryJson): void {
    this.history = h.moves.map((m) => ({ ...m }));
    if (this.isTimelinePrefix(this.history)) {
      this.cursor = this.history.length;
    } else {
      this.timeline = this.history.map((m) => ({ ...m }));
      this.cursor = this.history.length;
    }
  }

  private isTimelinePrefix(moves: MoveJson[]): boolean {
    if (moves.length > this.timeline.length) return false;
    return moves.every((m, i) => {
      const t = this.timeline[i];
      return t.pid === m.pid && t.dir === m.dir && t.block === m.block;
    });
  }

  /** Forget the scrub strip (an explicit restart, unlike scrubbing to 0). */
  clearTimeline(): void {
    this.timeline = [];
    this.cursor = 0;
  }

  noteDelta(delta: DagDelta): void {
    this.lastDelta = delta;
  }

  noteError(pid: string, dir: Direction, error: string, reason: string): void {
    this.lastError = { pid, dir, error, reason };
  }

  clearError(): void {
    this.lastError = null;
  }

  // -- canonical state ------------------------------------------------------

  /** Rebuild the exact structure the server hashes, from owned fields. */
  canonicalStruct(): unknown {
    const nodes = [...this.dagNodes].sort(compareNodes);
    const write = [...this.writeEdges].sort(compareEdges);
    const read = [...this.readEdges].sort(compareEdges);
    const processes = [...this.processes]
      .sort((a, b) => comparePids(a.pid, b.pid))
      .map((p) => ({ pid: p.pid, label: p.label, stage: p.stage }));
    const rho: Record<string, number> = {};
    for (const [k, v] of [...this.rho.entries()].sort((a, b) =>
      a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0,
    )) {
      rho[k] = v;
    }
    const sigma: Record<string, number> = {};
    for (const [k, v] of [...this.sigma.entries()].sort((a, b) =>
      a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0,
    )) {
      sigma[k] = v;
    }
    return {
      dag: {
        nodes,
        write_edges: write.map(plainEdge),
        read_edges: read.map(plainEdge),
      },
      processes,
      rho,
      sigma,
    };
  }

  /** sha256 of the canonical struct — must equal /api/state's hash. */
  displayedStateHash(): Promise<string> {
    return sha256Hex(canonicalJson(this.canonicalStruct()));
  }

  async syncStatus(): Promise<SyncStatus> {
    const viewHash = await this.displayedStateHash();
    return { ok: viewHash === this.serverHash, viewHash, serverHash: this.serverHash };
  }

  // -- render models ----------------------------------------------------------

  storeRows(): { name: string; value: number }[] {
    return [...this.rho.entries()]
      .sort((a, b) => (a[0] < b[0] ? -1 : 1))
      .map(([name, value]) => ({ name, value }));
  }

  heapRows(): { addr: string; value: number }[] {
    return [...this.sigma.entries()]
      .sort((a, b) => Number(a[0]) - Number(b[0]))
      .map(([addr, value]) => ({ addr, value }));
  }

  processPanels(): ProcessPanel[] {
    const byPid = new Map<string, ProcessPanel>();
    for (const p of [...this.processes].sort((a, b) => comparePids(a.pid, b.pid))) {
      byPid.set(p.pid, {
        pid: p.pid,
        label: p.label,
        stage: p.stage,
        forward: null,
        backward: null,
        forwardBlocked: null,
        backwardBlocked: null,
      });
    }
    for (const t of this.forward) {
      const panel = byPid.get(t.pid);
      if (panel) panel.forward = t;
    }
    for (const t of this.backward) {
      const panel = byPid.get(t.pid);
      if (panel) panel.backward = t;
    }
    for (const b of this.forwardBlocked) {
      const panel = byPid.get(b.pid);
      if (panel) panel.forwardBlocked = b;
    }
    for (const b of this.backwardBlocked) {
      const panel = byPid.get(b.pid);
      if (panel) panel.backwardBlocked = b;
    }
    return [...byPid.values()];
  }

  /** One horizontal lane per pid; node (p, n) sits at column n, ⊥ leftmost. */
  dagLayout(cellWidth = 96, laneHeight = 56): DagLayout {
    const pids = [...new Set(
      this.dagNodes.filter((n): n is { pid: string; index: number } => n !== null)
        .map((n) => n.pid),
    )].sort(comparePids);
    const laneOf = new Map<string, number>();
    pids.forEach((pid, i) => laneOf.set(pid, i));

    const fresh = new Set(
      (this.lastDelta?.added_nodes ?? [])
        .filter((n): n is { pid: string; index: number } => n !== null)
        .map((n) => `${n.pid}:${n.index}`),
    );

    const placed = new Map<string, DagLayoutNode>();
    const nodes: DagLayoutNode[] = [];
    const botY = pids.length ? 24 + ((pids.length - 1) * laneHeight) / 2 : 24;
    const bot: DagLayoutNode = { node: null, x: 36, y: botY, fresh: false };
    nodes.push(bot);
    placed.set("bot", bot);
    let maxCol = 0;
    for (const node of this.dagNodes) {
      if (node === null) continue;
      const lane = laneOf.get(node.pid) ?? 0;
      const laid: DagLayoutNode = {
        node,
        x: 120 + node.index * cellWidth,
        y: 24 + lane * laneHeight,
        fresh: fresh.has(`${node.pid}:${node.index}`),
      };
      maxCol = Math.max(maxCol, node.index);
      nodes.push(laid);
      placed.set(`${node.pid}:${node.index}`, laid);
    }

    const edgeOf = (kind: "write" | "read") => (e: DagEdge): DagLayoutEdge => ({
      kind,
      label: e.label,
      from: placed.get(e.src === null ? "bot" : `${e.src.pid}:${e.src.index}`)!,
      to: placed.get(e.dst === null ? "bot" : `${e.dst.pid}:${e.dst.index}`)!,
    });
    const edges = [
      ...[...this.writeEdges].sort(compareEdges).map(edgeOf("write")),
      ...[...this.readEdges].sort(compareEdges).map(edgeOf("read")),
    ];
    return {
      lanes: pids.map((pid, i) => ({ pid, y: 24 + i * laneHeight })),
      nodes,
      edges,
      width: 120 + (maxCol + 1) * cellWidth + 60,
      height: Math.max(24 + pids.length * laneHeight, 96),
    };
  }

  historyStrip(): { position: number; move: MoveJson; done: boolean }[] {
    return this.timeline.map((move, i) => ({
      position: i + 1,
      move,
      done: i < this.cursor,
    }));
  }
}

function copyEdge(e: DagEdge): DagEdge {
  return {
    src: e.src === null ? null : { ...e.src },
    label: e.label,
    dst: e.dst === null ? null : { ...e.dst },
  };
}

function plainEdge(e: DagEdge): { src: DagNode; label: string; dst: DagNode } {
  return { src: e.src, label: e.label, dst: e.dst };
}
