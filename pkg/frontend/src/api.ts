// Typed client for the documented HTTP endpoints. All analysis happens
// server-side; this module only moves JSON.

import type {
  FpcaRequest,
  FpcaResult,
  LayoutResponse,
  SeriesResponse,
  ServerConfig,
  Snapshot,
  TopkResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  msplot(): Promise<Snapshot> {
    return this.request<Snapshot>("/msplot");
  }

  series(ids: string[], start?: number, end?: number): Promise<SeriesResponse> {
    const params = new URLSearchParams({ ids: ids.join(",") });
    if (start !== undefined) params.set("start", String(start));
    if (end !== undefined) params.set("end", String(end));
    return this.request<SeriesResponse>(`/series?${params}`);
  }

  fpca(ids: string[], config: FpcaRequest = {}): Promise<FpcaResult> {
    return this.request<FpcaResult>("/fpca", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ series_ids: ids, ...config }),
    });
  }

  topk(
    ids: string[],
    component: number,
    k: number,
    mode: "top" | "bottom" = "top",
    threshold?: number,
  ): Promise<TopkResponse> {
    const params = new URLSearchParams({
      ids: ids.join(","),
      component: String(component),
      k: String(k),
      mode,
    });
    if (threshold !== undefined) params.set("threshold", String(threshold));
    return this.request<TopkResponse>(`/fpca/topk?${params}`);
  }

  config(): Promise<ServerConfig> {
    return this.request<ServerConfig>("/config");
  }

  putConfig(patch: object): Promise<ServerConfig> {
    return this.request<ServerConfig>("/config", {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(patch),
    });
  }

  /** Sensor topology, or null when the server has none configured. */
  async layout(): Promise<LayoutResponse | null> {
    try {
      return await this.request<LayoutResponse>("/layout");
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) return null;
      throw error;
    }
  }
}
