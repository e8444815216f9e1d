/** DOM rendering. Pure function of the view model: wipe and rebuild the
 * panels on every update (debugger-scale state, no need for diffing). */

import { DebuggerViewModel, nodeName, pidName } from "./model.js";
import type { DagLayout, SyncStatus } from "./model.js";
import type { Direction } from "./types.js";

export interface Handlers {
  step(pid: string, dir: Direction): void;
  run(dir: Direction, steps: number): void;
  reset(): void;
  scrub(position: number): void;
}

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderApp(
  root: HTMLElement,
  vm: DebuggerViewModel,
  sync: SyncStatus | null,
  handlers: Handlers,
): void {
  root.textContent = "";
  root.appendChild(renderHeader(vm, sync, handlers));
  const columns = el("div", "columns");
  const left = el("div", "col col-left");
  left.appendChild(renderProcesses(vm, handlers));
  left.appendChild(renderStore(vm));
  left.appendChild(renderProgram(vm));
  const right = el("div", "col col-right");
  right.appendChild(renderDag(vm));
  right.appendChild(renderHistory(vm, handlers));
  columns.append(left, right);
  root.appendChild(columns);
}

function renderHeader(
  vm: DebuggerViewModel,
  sync: SyncStatus | null,
  handlers: Handlers,
): HTMLElement {
  const header = el("header", "header");
  header.appendChild(el("h1", "title", "cril reversible debugger"));

  const status = el("span", "status");
  status.appendChild(
    el("span", vm.final ? "badge badge-final" : "badge", vm.final ? "final" : "running"),
  );
  if (sync) {
    const badge = el(
      "span",
      sync.ok ? "badge badge-sync" : "badge badge-desync",
      sync.ok ? "view = server" : "VIEW OUT OF SYNC",
    );
    badge.title = `view ${sync.viewHash.slice(0, 12)}… / server ${sync.serverHash.slice(0, 12)}…`;
    badge.dataset.sync = sync.ok ? "ok" : "bad";
    status.appendChild(badge);
  }
  header.appendChild(status);

  const controls = el("div", "controls");
  const mkButton = (label: string, onClick: () => void) => {
    const b = el("button", "btn", label);
    b.addEventListener("click", onClick);
    controls.appendChild(b);
  };
  mkButton("run →", () => handlers.run("forward", 1000));
  mkButton("← unwind", () => handlers.run("backward", 1000));
  mkButton("reset", () => handlers.reset());
  header.appendChild(controls);

  if (vm.lastOutcome) {
    header.appendChild(el("span", "outcome", `outcome: ${vm.lastOutcome}`));
  }
  if (vm.lastError) {
    const msg = `${vm.lastError.error}: ${vm.lastError.reason}`;
    const banner = el("div", "error-banner", msg);
    banner.dataset.error = vm.lastError.error;
    header.appendChild(banner);
  }
  return header;
}

function renderProcesses(vm: DebuggerViewModel, handlers: Handlers): HTMLElement {
  const section = el("section", "panel processes");
  section.appendChild(el("h2", undefined, "processes"));
  const list = el("div", "process-list");
  for (const panel of vm.processPanels()) {
    const row = el("div", "process-row");
    row.dataset.pid = panel.pid;
    const depth = panel.pid === "" ? 0 : panel.pid.split(".").length;
    row.style.marginLeft = `${depth * 18}px`;
    row.appendChild(
      el("span", "pid", `${pidName(panel.pid)} @ (${panel.label}, ${panel.stage})`),
    );

    for (const dir of ["backward", "forward"] as const) {
      const move = dir === "forward" ? panel.forward : panel.backward;
      const blocked = dir === "forward" ? panel.forwardBlocked : panel.backwardBlocked;
      const btn = el("button", `btn step-${dir}`, dir === "forward" ? "step →" : "← undo");
      btn.dataset.pid = panel.pid;
      btn.dataset.dir = dir;
      if (move) {
        btn.title = move.description;
        btn.addEventListener("click", () => handlers.step(panel.pid, dir));
      } else {
        btn.disabled = true;
        btn.title = blocked
          ? blocked.dag
            ? blocked.dag.message
            : blocked.reason
          : "no transition";
        if (blocked) btn.dataset.blockReason = blocked.error;
      }
      row.appendChild(btn);
    }
    list.appendChild(row);
  }
  section.appendChild(list);
  return section;
}

function renderStore(vm: DebuggerViewModel): HTMLElement {
  const section = el("section", "panel store");
  section.appendChild(el("h2", undefined, "store"));
  const table = el("table", "store-table");
  for (const { name, value } of vm.storeRows()) {
    const tr = el("tr");
    tr.append(el("td", "var", name), el("td", "val", String(value)));
    table.appendChild(tr);
  }
  for (const { addr, value } of vm.heapRows()) {
    const tr = el("tr", "heap");
    tr.append(el("td", "var", `M[${addr}]`), el("td", "val", String(value)));
    table.appendChild(tr);
  }
  section.appendChild(table);
  return section;
}

function renderProgram(vm: DebuggerViewModel): HTMLElement {
  const section = el("section", "panel program");
  section.appendChild(el("h2", undefined, "program"));
  if (vm.program) {
    for (const block of vm.program.blocks) {
      const div = el("div", "block");
      div.appendChild(el("div", "block-id", `b${block.id}`));
      const body = el("pre", "block-body", block.lines.join("\n"));
      div.appendChild(body);
      div.title = `read {${block.read.join(", ")}}  write {${block.write.join(", ")}}`;
      section.appendChild(div);
    }
  }
  return section;
}

function renderDag(vm: DebuggerViewModel): HTMLElement {
  const section = el("section", "panel dag");
  section.appendChild(el("h2", undefined, "annotation DAG (solid = write, dashed = read)"));
  const layout = vm.dagLayout();
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(layout.width));
  svg.setAttribute("height", String(layout.height + 24));
  svg.setAttribute("class", "dag-svg");

  for (const lane of layout.lanes) {
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", "4");
    label.setAttribute("y", String(lane.y + 4));
    label.setAttribute("class", "lane-label");
    label.textContent = pidName(lane.pid);
    svg.appendChild(label);
  }
  for (const edge of layout.edges) {
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(edge.from.x));
    line.setAttribute("y1", String(edge.from.y));
    line.setAttribute("x2", String(edge.to.x));
    line.setAttribute("y2", String(edge.to.y));
    line.setAttribute("class", `edge edge-${edge.kind}`);
    svg.appendChild(line);
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String((edge.from.x + edge.to.x) / 2));
    text.setAttribute("y", String((edge.from.y + edge.to.y) / 2 - 4));
    text.setAttribute("class", "edge-label");
    text.textContent = edge.label;
    svg.appendChild(text);
  }
  for (const laid of layout.nodes) {
    const g = document.createElementNS(SVG_NS, "g");
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(laid.x));
    circle.setAttribute("cy", String(laid.y));
    circle.setAttribute("r", "14");
    circle.setAttribute("class", laid.fresh ? "node node-fresh" : "node");
    g.appendChild(circle);
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(laid.x));
    text.setAttribute("y", String(laid.y + 28));
    text.setAttribute("class", "node-label");
    text.setAttribute("text-anchor", "middle");
    text.textContent = nodeName(laid.node);
    g.appendChild(text);
    svg.appendChild(g);
  }
  section.appendChild(svg);
  return section;
}

function renderHistory(vm: DebuggerViewModel, handlers: Handlers): HTMLElement {
  const section = el("section", "panel history");
  section.appendChild(
    el("h2", undefined, `history (position ${vm.cursor} of ${vm.timeline.length})`),
  );
  const strip = el("div", "history-strip");
  const start = el("button", vm.cursor === 0 ? "chip chip-here" : "chip", "⟲ 0");
  start.title = "scrub to the initial state";
  start.addEventListener("click", () => handlers.scrub(0));
  strip.appendChild(start);
  for (const { position, move, done } of vm.historyStrip()) {
    const classes = [
      "chip",
      move.dir === "forward" ? "chip-fwd" : "chip-bwd",
      done ? "" : "chip-undone",
      position === vm.cursor ? "chip-here" : "",
    ]
      .filter(Boolean)
      .join(" ");
    const chip = el("button", classes, `${move.dir === "forward" ? "" : "¬"}b${move.block}`);
    chip.dataset.position = String(position);
    chip.title = `${position}: pid ${pidName(move.pid)} ${move.dir} b${move.block} — click to scrub here`;
    chip.addEventListener("click", () => handlers.scrub(position));
    strip.appendChild(chip);
  }
  section.appendChild(strip);
  return section;
}
