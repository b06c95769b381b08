// Threshold studio: sweep curves cached per (upstream-config-hash,
// component, param) so slider moves never re-fetch; a curve is refetched
// only when a component upstream of the swept one changes.

import type { ApiClient } from "./api.js";
import type { PipelineDraft } from "./draft.js";
import { configHash } from "./draft.js";
import type { SweepRow } from "./types.js";

export function upstreamHash(draft: PipelineDraft, componentId: string): string {
  const idx = draft.cardIndex(componentId);
  if (idx < 0) throw new Error(`component ${componentId} not on the canvas`);
  return configHash(draft.serialize().components.slice(0, idx));
}

export function cacheKey(draft: PipelineDraft, componentId: string, param: string): string {
  return `${upstreamHash(draft, componentId)}:${componentId}:${param}`;
}

export class ThresholdStudio {
  private cache = new Map<string, SweepRow[]>();
  fetches = 0;

  constructor(private api: ApiClient) {}

  async curves(
    draft: PipelineDraft,
    corpusId: string,
    componentId: string,
    param = "threshold",
  ): Promise<SweepRow[]> {
    const key = cacheKey(draft, componentId, param);
    const cached = this.cache.get(key);
    if (cached) return cached;
    this.fetches += 1;
    const { rows } = await this.api.sweep(draft.serialize(), corpusId, componentId, param);
    this.cache.set(key, rows);
    return rows;
  }

  apply(draft: PipelineDraft, componentId: string, value: number, param = "threshold"): void {
    draft.setParam(componentId, param, value);
  }
}

export interface MarkerPosition {
  index: number;
  value: number;
}

// nearest grid point for the current slider value; pure, no fetching
export function markerFor(rows: SweepRow[], current: number): MarkerPosition {
  let best = 0;
  for (let i = 1; i < rows.length; i++) {
    if (Math.abs(rows[i].value - current) < Math.abs(rows[best].value - current)) {
      best = i;
    }
  }
  return { index: best, value: rows[best].value };
}
