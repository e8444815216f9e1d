/** DOM rendering of the view model (happy-dom environment). */
// @vitest-environment happy-dom

import { describe, expect, it } from "vitest";
import { DebuggerViewModel } from "../src/model.js";
import { renderApp } from "../src/render.js";
import type { StateJson, TransitionsJson } from "../src/types.js";

function c6State(): StateJson {
  // the shared program with all children ended: only pid 1 reversible
  return {
    rho: { x: 2, y: 1, z: 1 },
    sigma: {},
    processes: [
      { pid: "", label: "l2", stage: "run" },
      { pid: "1", label: "sub0", stage: "end" },
      { pid: "2", label: "sub1", stage: "end" },
      { pid: "3", label: "sub2", stage: "end" },
    ],
    dag: {
      nodes: [
        null,
        { pid: "", index: 0 }, { pid: "", index: 1 },
        { pid: "1", index: 0 }, { pid: "1", index: 1 },
        { pid: "2", index: 0 }, { pid: "3", index: 0 },
      ],
      write_edges: [
        { src: null, label: "x", dst: { pid: "1", index: 0 } },
        { src: { pid: "1", index: 0 }, label: "x", dst: { pid: "1", index: 1 } },
        { src: null, label: "y", dst: { pid: "2", index: 0 } },
        { src: null, label: "z", dst: { pid: "3", index: 0 } },
      ],
      read_edges: [
        { src: { pid: "1", index: 0 }, label: "x", dst: { pid: "2", index: 0 } },
        { src: { pid: "1", index: 0 }, label: "x", dst: { pid: "3", index: 0 } },
      ],
    },
    hash: "abc",
    final: false,
    history_length: 6,
    version: 6,
  };
}

function c6Transitions(): TransitionsJson {
  return {
    version: 6,
    hash: "abc",
    forward: [],
    backward: [
      {
        index: 0, pid: "1", dir: "backward", block: 5, rd: ["x"], wt: ["x"],
        kind: "inst", description: "<- b5 [inst] pid=1 (x += 1)",
      },
    ],
    forward_blocked: [],
    backward_blocked: [
      {
        pid: "2", dir: "backward", error: "not-enabled-dag", kind: "dag", block: 6,
        reason: "causality: (1,1) must be reversed first",
        dag: {
          node: { pid: "2", index: 0 },
          blockers: [{ pid: "1", index: 1 }],
          message: "causality: (1,1) must be reversed first",
        },
      },
      {
        pid: "3", dir: "backward", error: "not-enabled-dag", kind: "dag", block: 7,
        reason: "causality: (1,1) must be reversed first",
        dag: {
          node: { pid: "3", index: 0 },
          blockers: [{ pid: "1", index: 1 }],
          message: "causality: (1,1) must be reversed first",
        },
      },
    ],
  };
}

const noop = { step() {}, run() {}, reset() {}, scrub() {} };

describe("renderApp", () => {
  it("renders blocked reversals disabled with the causality tooltip", () => {
    const vm = new DebuggerViewModel();
    vm.applyState(c6State());
    vm.applyTransitions(c6Transitions());
    const root = document.createElement("div");
    renderApp(root, vm, { ok: true, viewHash: "abc", serverHash: "abc" }, noop);

    const buttonFor = (pid: string) =>
      root.querySelector<HTMLButtonElement>(
        `button.step-backward[data-pid="${pid}"]`,
      )!;
    expect(buttonFor("1").disabled).toBe(false);
    const b2 = buttonFor("2");
    expect(b2.disabled).toBe(true);
    expect(b2.title).toBe("causality: (1,1) must be reversed first");
    expect(b2.dataset.blockReason).toBe("not-enabled-dag");
    expect(buttonFor("3").disabled).toBe(true);

    // sync badge reflects the hash comparison
    const badge = root.querySelector<HTMLElement>("[data-sync]")!;
    expect(badge.dataset.sync).toBe("ok");
    expect(badge.textContent).toBe("view = server");

    // the DAG panel draws all nodes and both edge styles
    expect(root.querySelectorAll(".dag-svg circle").length).toBe(7);
    expect(root.querySelectorAll(".dag-svg .edge-write").length).toBe(4);
    expect(root.querySelectorAll(".dag-svg .edge-read").length).toBe(2);

    // store table shows the post-run store
    const cells = [...root.querySelectorAll(".store-table .val")].map(
      (td) => td.textContent,
    );
    expect(cells).toEqual(["2", "1", "1"]);
  });

  it("renders the error banner and desync badge", () => {
    const vm = new DebuggerViewModel();
    vm.applyState(c6State());
    vm.applyTransitions(c6Transitions());
    vm.noteError("2", "backward", "not-enabled-dag", "causality: (1,1) must be reversed first");
    const root = document.createElement("div");
    renderApp(root, vm, { ok: false, viewHash: "x", serverHash: "y" }, noop);
    const banner = root.querySelector<HTMLElement>(".error-banner")!;
    expect(banner.textContent).toContain("(1,1) must be reversed first");
    expect(banner.dataset.error).toBe("not-enabled-dag");
    expect(root.querySelector<HTMLElement>("[data-sync]")!.dataset.sync).toBe("bad");
  });

  it("renders the history strip with cursor and undone chips", () => {
    const vm = new DebuggerViewModel();
    vm.applyState(c6State());
    vm.applyTransitions(c6Transitions());
    vm.timeline = [
      { pid: "", dir: "forward", block: 1, rd: [], wt: [] },
      { pid: "", dir: "forward", block: 2, rd: [], wt: [] },
      { pid: "1", dir: "forward", block: 4, rd: ["x"], wt: ["x"] },
    ];
    vm.cursor = 2;
    const root = document.createElement("div");
    renderApp(root, vm, null, noop);
    const chips = [...root.querySelectorAll<HTMLButtonElement>(".history-strip .chip")];
    expect(chips).toHaveLength(4); // ⟲0 plus three moves
    expect(chips[2].className).toContain("chip-here");
    expect(chips[3].className).toContain("chip-undone");
  });
});
