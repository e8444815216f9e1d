/** Browser entry point: wire the controller to the DOM. */

import { ApiClient } from "./api.js";
import { DebuggerController } from "./controller.js";
import { DebuggerViewModel } from "./model.js";
import type { SyncStatus } from "./model.js";
import { renderApp } from "./render.js";
import type { Direction } from "./types.js";

const api = new ApiClient("");
const vm = new DebuggerViewModel();
const controller = new DebuggerController(api, vm);

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app element");
}

let rendering = Promise.resolve();

function rerender(): Promise<void> {
  rendering = rendering.then(async () => {
    let sync: SyncStatus | null = null;
    try {
      sync = await controller.verifySync();
    } catch {
      sync = null;
    }
    renderApp(root as HTMLElement, vm, sync, handlers);
  });
  return rendering;
}

async function act(action: () => Promise<unknown>): Promise<void> {
  try {
    await action();
  } catch (err) {
    vm.noteError("", "forward", "network", String(err));
  }
  await rerender();
}

const handlers = {
  step: (pid: string, dir: Direction) => void act(() => controller.stepPid(pid, dir)),
  run: (dir: Direction, steps: number) => void act(() => controller.runSteps(dir, steps)),
  reset: () => void act(() => controller.reset()),
  scrub: (position: number) => void act(() => controller.scrub(position)),
};

void act(() => controller.load());
