/** Wire types of the cril debug service JSON API. */

/** A DAG node; null is the root (⊥). Pids are dotted strings, "" = root process. */
export type DagNode = { pid: string; index: number } | null;

export interface DagEdge {
  src: DagNode;
  label: string;
  dst: DagNode;
}

export interface DagJson {
  nodes: DagNode[];
  write_edges: DagEdge[];
  read_edges: DagEdge[];
}

export type Stage = "begin" | "run" | "end";

export interface ProcessEntry {
  pid: string;
  label: string;
  stage: Stage;
}

export interface StateJson {
  rho: Record<string, number>;
  sigma: Record<string, number>;
  processes: ProcessEntry[];
  dag: DagJson;
  hash: string;
  final: boolean;
  history_length: number;
  version: number;
}

export type Direction = "forward" | "backward";

export interface TransitionJson {
  index: number;
  pid: string;
  dir: Direction;
  block: number;
  rd: string[];
  wt: string[];
  kind: "inst" | "fork" | "merge";
  description: string;
}

export interface DagBlockInfo {
  node: DagNode;
  blockers: DagNode[];
  message: string;
}

export interface BlockedJson {
  pid: string;
  dir: Direction;
  error: "not-enabled-prog" | "not-enabled-dag";
  kind: string;
  block: number | null;
  reason: string;
  dag?: DagBlockInfo;
}

export interface TransitionsJson {
  version: number;
  hash: string;
  forward?: TransitionJson[];
  backward?: TransitionJson[];
  forward_blocked?: BlockedJson[];
  backward_blocked?: BlockedJson[];
}

export interface BlockJson {
  id: number;
  kind: "inst" | "call";
  lines: string[];
  read: string[];
  write: string[];
  process_block: number;
}

export interface ProcessBlockJson {
  id: number;
  label: string | null;
  blocks: number[];
}

export interface ProgramJson {
  blocks: BlockJson[];
  process_blocks: ProcessBlockJson[];
  vars: string[];
  source: string;
}

export interface MoveJson {
  pid: string;
  dir: Direction;
  block: number;
  rd: string[];
  wt: string[];
}

export interface HistoryJson {
  moves: MoveJson[];
  length: number;
  version: number;
}

export interface DeltaEdge {
  kind: "write" | "read";
  src: DagNode;
  label: string;
  dst: DagNode;
}

export interface DagDelta {
  added_nodes: DagNode[];
  removed_nodes: DagNode[];
  added_edges: DeltaEdge[];
  removed_edges: DeltaEdge[];
}

export interface StepResponse {
  applied: MoveJson;
  state: StateJson;
  dag_delta: DagDelta;
  transitions: TransitionsJson;
}

export interface RunResponse extends Omit<StepResponse, "applied"> {
  outcome: string;
  steps: number;
  trace: MoveJson[];
}

export interface ErrorJson {
  error: string;
  reason: string;
  dag?: DagBlockInfo;
}
