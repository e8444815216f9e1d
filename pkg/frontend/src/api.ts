/** Typed client for the debug service endpoints. */

import type {
  Direction,
  ErrorJson,
  HistoryJson,
  ProgramJson,
  RunResponse,
  StateJson,
  StepResponse,
  TransitionsJson,
} from "./types.js";

/** A non-2xx answer; carries the server's structured reason. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ErrorJson,
  ) {
    super(`${body.error}: ${body.reason}`);
  }
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    const data: unknown = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, data as ErrorJson);
    }
    return data as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getProgram(): Promise<ProgramJson> {
    return this.request<ProgramJson>("/api/program");
  }

  getState(): Promise<StateJson> {
    return this.request<StateJson>("/api/state");
  }

  getTransitions(dir: Direction | "both" = "both"): Promise<TransitionsJson> {
    return this.request<TransitionsJson>(`/api/transitions?dir=${dir}`);
  }

  getHistory(): Promise<HistoryJson> {
    return this.request<HistoryJson>("/api/history");
  }

  step(payload: {
    pid?: string;
    index?: number;
    dir: Direction;
    expected_version?: number;
  }): Promise<StepResponse> {
    return this.post<StepResponse>("/api/step", payload);
  }

  run(payload: { dir: Direction; steps: number; seed?: number }): Promise<RunResponse> {
    return this.post<RunResponse>("/api/run", payload);
  }

  reset(): Promise<Omit<StepResponse, "applied">> {
    return this.post<Omit<StepResponse, "applied">>("/api/reset", {});
  }
}
