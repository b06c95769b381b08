// API wire types, mirroring the engine's JSON responses.

export interface ParamSchema {
  name: string;
  type: "float" | "int" | "str" | "str-list";
  default: unknown;
  lo?: number;
  hi?: number;
  choices?: string[];
}

export interface ComponentDescriptor {
  component_id: string;
  scorer_id: string | null;
  params: ParamSchema[];
  requires: string[];
  description: string;
}

export interface ComponentEntry {
  component: string;
  params: Record<string, unknown>;
  pinned?: number;
  precedence?: string[];
}

export interface CostEntry {
  cost_ms: number;
  selectivity?: number;
}

export interface ScorerEntry {
  scorer_id: string;
  kind: string;
  endpoint?: string;
  timeout_ms: number;
  default_score_on_failure: number | string;
}

export interface PipelineConfigJson {
  components: ComponentEntry[];
  corpus?: string;
  sample?: string;
  costs?: Record<string, CostEntry>;
  scorers?: ScorerEntry[];
  failure_budget?: number;
}

export interface EvalMetrics {
  precision: number;
  recall: number;
  reduction_rate: number;
  kept: number;
  removed: number;
  total: number;
  kept_zero: boolean;
  component_selectivity: Record<string, number>;
  component_cost_ms: Record<string, number>;
  expected_cost_per_item: number;
}

export interface SweepRow {
  value: number;
  metrics: EvalMetrics;
}

export interface OptimizeResult {
  config: PipelineConfigJson;
  order: string[];
  original_cost: number;
  optimized_cost: number;
  ratio: number;
  method: string;
}

export interface Suggestion {
  kind: "reorder" | "threshold" | "remove";
  component_id: string | null;
  detail: Record<string, unknown>;
  evidence: string[];
}

export interface SeriesRow {
  bucket_start: string;
  count: number;
}

export interface SeriesResponse {
  term: string;
  bucket_width: number;
  origin: string;
  rows: SeriesRow[];
}

export interface EventRow {
  event_id: string;
  event_type: string;
  country: string;
  start: string;
  end: string;
  name: string;
}

export interface ChoroplethFeature {
  type: "Feature";
  geometry: { type: "Polygon"; coordinates: number[][][] };
  properties: {
    region_id: string;
    name: string;
    population: number;
    count: number;
    rate_per_100k: number;
  };
}

export interface ChoroplethFC {
  type: "FeatureCollection";
  metadata: {
    rate_unit: string;
    impact?: Record<string, number>;
    spearman_rho?: number | null;
    excluded_regions?: string[];
  };
  features: ChoroplethFeature[];
}

export interface RunStatus {
  run_id: string;
  corpus_id: string;
  status: "pending" | "running" | "done" | "failed";
  error: string | null;
  summary: Record<string, unknown> | null;
  metrics?: EvalMetrics | null;
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
