// Facade-only metrics panel: every displayed value is the verbatim string
// form of a field in the evaluate response; nothing is computed here.

import type { EvalMetrics } from "../types.js";

export interface MetricRow {
  label: string;
  value: string;
}

export function metricRows(m: EvalMetrics): MetricRow[] {
  const rows: MetricRow[] = [
    { label: "precision", value: String(m.precision) },
    { label: "recall", value: String(m.recall) },
    { label: "reduction_rate", value: String(m.reduction_rate) },
    { label: "kept", value: String(m.kept) },
    { label: "removed", value: String(m.removed) },
    { label: "total", value: String(m.total) },
    { label: "expected_cost_per_item", value: String(m.expected_cost_per_item) },
  ];
  if (m.kept_zero) rows.push({ label: "kept_zero", value: "true" });
  return rows;
}

export function componentRows(m: EvalMetrics): MetricRow[] {
  return Object.keys(m.component_selectivity)
    .sort()
    .map((cid) => ({
      label: cid,
      value: `selectivity ${String(m.component_selectivity[cid])}, cost ${String(
        m.component_cost_ms[cid],
      )} ms`,
    }));
}

export function renderMetricsPanel(m: EvalMetrics | null, dirty: boolean): string {
  if (!m) return `<p class="empty">No evaluation yet.</p>`;
  const badge = dirty ? `<span class="badge stale">draft changed</span>` : "";
  const rows = metricRows(m)
    .map((r) => `<tr><th>${r.label}</th><td data-metric="${r.label}">${r.value}</td></tr>`)
    .join("");
  const comps = componentRows(m)
    .map((r) => `<tr><th>${r.label}</th><td>${r.value}</td></tr>`)
    .join("");
  return `${badge}<table class="metrics">${rows}</table>` +
    `<h4>components</h4><table class="components">${comps}</table>`;
}
