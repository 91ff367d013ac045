// The single typed client layer: every service interaction in the app goes
// through a ServiceClient, so tests can substitute a recorded mock.

import { DatasetStats, SynthesizeResponse, TargetSelection } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface ServiceClient {
  synthesize(selection: TargetSelection, signal?: AbortSignal): Promise<SynthesizeResponse>;
  datasetStats(): Promise<DatasetStats>;
}

export class HttpServiceClient implements ServiceClient {
  constructor(private baseUrl: string = "") {}

  private async parse<T>(resp: Response): Promise<T> {
    let body: unknown;
    try {
      body = await resp.json();
    } catch {
      body = undefined;
    }
    if (!resp.ok) {
      const err = (body as { error?: { code?: string; message?: string } })?.error;
      throw new ApiError(resp.status, err?.code ?? "unknown", err?.message ?? resp.statusText);
    }
    return body as T;
  }

  async synthesize(selection: TargetSelection, signal?: AbortSignal): Promise<SynthesizeResponse> {
    const resp = await fetch(`${this.baseUrl}/api/synthesize`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        d_t: selection.d_t,
        eta_t: selection.eta_t,
        n: selection.n,
        seed: selection.seed,
      }),
      signal,
    });
    return this.parse<SynthesizeResponse>(resp);
  }

  async datasetStats(): Promise<DatasetStats> {
    const resp = await fetch(`${this.baseUrl}/api/dataset/stats`);
    return this.parse<DatasetStats>(resp);
  }
}
