/** Orchestrates the view model against the API: every mutation goes to
 * the service, then the model refetches — the client never advances
 * state on its own.  Conflicts (409) trigger a refetch; rejections (400)
 * are surfaced on the model and change nothing. */

import { ApiClient, ApiError } from "./api.js";
import { DebuggerViewModel, SyncStatus } from "./model.js";
import type { Direction } from "./types.js";

export class DebuggerController {
  constructor(
    readonly api: ApiClient,
    readonly vm: DebuggerViewModel,
  ) {}

  async load(): Promise<void> {
    this.vm.setProgram(await this.api.getProgram());
    await this.refresh();
  }

  /** Refetch state, transitions, and history (the polling model). */
  async refresh(): Promise<void> {
    this.vm.applyState(await this.api.getState());
    this.vm.applyTransitions(await this.api.getTransitions("both"));
    this.vm.applyHistory(await this.api.getHistory());
  }

  /** Step one process; false (with vm.lastError set) if the service refused. */
  async stepPid(pid: string, dir: Direction): Promise<boolean> {
    this.vm.clearError();
    try {
      const resp = await this.api.step({
        pid,
        dir,
        expected_version: this.vm.version,
      });
      this.vm.noteDelta(resp.dag_delta);
      this.vm.lastOutcome = null;
      await this.refresh();
      return true;
    } catch (err) {
      await this.rejected(err, pid, dir);
      return false;
    }
  }

  async runSteps(dir: Direction, steps: number, seed?: number): Promise<void> {
    this.vm.clearError();
    try {
      const resp = await this.api.run({ dir, steps, seed });
      this.vm.noteDelta(resp.dag_delta);
      this.vm.lastOutcome = resp.outcome;
      await this.refresh();
    } catch (err) {
      await this.rejected(err, "", dir);
    }
  }

  async reset(): Promise<void> {
    this.vm.clearError();
    await this.api.reset();
    this.vm.clearTimeline();
    this.vm.lastDelta = null;
    this.vm.lastOutcome = null;
    await this.refresh();
  }

  /** Rewind (or re-advance) to a timeline position by resetting and
   * replaying that prefix server-side.  The strip itself survives, so
   * scrubbing forward again is possible until a step diverges; then the
   * timeline truncates to the new branch. */
  async scrub(position: number): Promise<void> {
    const prefix = this.vm.timeline.slice(0, position);
    this.vm.clearError();
    await this.api.reset();
    for (const move of prefix) {
      await this.api.step({ pid: move.pid, dir: move.dir });
    }
    this.vm.lastDelta = null;
    this.vm.lastOutcome = null;
    await this.refresh();
  }

  /** Recompute the view-model hash and compare with the server's. */
  verifySync(): Promise<SyncStatus> {
    return this.vm.syncStatus();
  }

  private async rejected(err: unknown, pid: string, dir: Direction): Promise<void> {
    if (err instanceof ApiError) {
      if (err.status === 409) {
        // stale view: someone else moved the session; resync silently
        await this.refresh();
        this.vm.noteError(pid, dir, err.body.error, "view was stale; refreshed");
        return;
      }
      this.vm.noteError(pid, dir, err.body.error, err.body.reason);
      return;
    }
    throw err;
  }
}
