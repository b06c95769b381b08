// Typed client for the engine's HTTP facade. Concurrent requests with the
// same method+path+body share one in-flight promise.

import type {
  ChoroplethFC,
  ComponentDescriptor,
  EvalMetrics,
  EventRow,
  OptimizeResult,
  PipelineConfigJson,
  RunStatus,
  SeriesResponse,
  Suggestion,
  SweepRow,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private inflight = new Map<string, Promise<unknown>>();

  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const key = `${method} ${path} ${body === undefined ? "" : JSON.stringify(body)}`;
    const existing = this.inflight.get(key);
    if (existing) return existing as Promise<T>;
    const promise = (async () => {
      const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
      if (body !== undefined) init.body = JSON.stringify(body);
      const resp = await this.fetchFn(this.baseUrl + path, init);
      const payload = await resp.json();
      if (!resp.ok) {
        const err = (payload as { error?: { code?: string; message?: string } }).error ?? {};
        throw new ApiError(resp.status, err.code ?? "error", err.message ?? resp.statusText);
      }
      return payload as T;
    })();
    this.inflight.set(key, promise);
    promise.finally(() => this.inflight.delete(key)).catch(() => undefined);
    return promise;
  }

  components(): Promise<{ components: ComponentDescriptor[] }> {
    return this.request("GET", "/api/components");
  }

  evaluate(config: PipelineConfigJson, corpusId: string, sampleId?: string): Promise<EvalMetrics> {
    return this.request("POST", "/api/pipeline/evaluate", {
      config, corpus_id: corpusId, sample_id: sampleId ?? null,
    });
  }

  sweep(
    config: PipelineConfigJson,
    corpusId: string,
    componentId: string,
    param: string,
    grid?: number[],
  ): Promise<{ rows: SweepRow[] }> {
    return this.request("POST", "/api/pipeline/sweep", {
      config, corpus_id: corpusId, component_id: componentId, param, grid: grid ?? null,
    });
  }

  optimize(config: PipelineConfigJson): Promise<OptimizeResult> {
    return this.request("POST", "/api/pipeline/optimize", { config });
  }

  startRun(config: PipelineConfigJson, corpusId: string): Promise<{ run_id: string }> {
    return this.request("POST", "/api/pipeline/run", { config, corpus_id: corpusId });
  }

  runStatus(runId: string): Promise<RunStatus> {
    return this.request("GET", `/api/runs/${encodeURIComponent(runId)}`);
  }

  triggerSeries(term: string, opts: { corpusId?: string; from?: string; to?: string; bucket?: number } = {}):
    Promise<SeriesResponse> {
    const params = new URLSearchParams({ term });
    if (opts.corpusId) params.set("corpus_id", opts.corpusId);
    if (opts.from) params.set("from", opts.from);
    if (opts.to) params.set("to", opts.to);
    if (opts.bucket) params.set("bucket", String(opts.bucket));
    return this.request("GET", `/api/trigger/series?${params}`);
  }

  triggerEvents(corpusId?: string): Promise<{ events: EventRow[] }> {
    const suffix = corpusId ? `?corpus_id=${encodeURIComponent(corpusId)}` : "";
    return this.request("GET", `/api/trigger/events${suffix}`);
  }

  aggregate(runId: string, bucket: "day" | "hour" = "day"): Promise<ChoroplethFC> {
    return this.request("GET", `/api/aggregate?run_id=${encodeURIComponent(runId)}&bucket=${bucket}`);
  }

  suggestions(runId: string): Promise<{ suggestions: Suggestion[] }> {
    return this.request("GET", `/api/suggestions?run_id=${encodeURIComponent(runId)}`);
  }
}
