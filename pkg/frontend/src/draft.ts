// In-browser pipeline draft: ordered component cards plus the engine-side
// config fields the canvas does not edit (costs, scorers, corpus, sample).
// serialize() emits exactly the engine's canonical config JSON so a draft
// round-trips through the server-side parser unchanged.

import type {
  ComponentDescriptor,
  ComponentEntry,
  CostEntry,
  EvalMetrics,
  PipelineConfigJson,
  ScorerEntry,
} from "./types.js";

export interface CardState {
  component: string;
  params: Record<string, unknown>;
  pinned?: number;
  precedence?: string[];
}

const DEFAULT_FAILURE_BUDGET = 0.1;

export class PipelineDraft {
  cards: CardState[] = [];
  corpus?: string;
  sample?: string;
  costs?: Record<string, CostEntry>;
  scorers?: ScorerEntry[];
  failureBudget: number = DEFAULT_FAILURE_BUDGET;

  dirty = false;
  lastEvaluation: EvalMetrics | null = null;
  inlineError: string | null = null;

  static fromConfig(config: PipelineConfigJson): PipelineDraft {
    const draft = new PipelineDraft();
    draft.cards = config.components.map((c) => {
      const card: CardState = { component: c.component, params: { ...(c.params ?? {}) } };
      if (c.pinned !== undefined && c.pinned !== null) card.pinned = c.pinned;
      if (c.precedence && c.precedence.length) card.precedence = [...c.precedence];
      return card;
    });
    draft.corpus = config.corpus;
    draft.sample = config.sample;
    draft.costs = config.costs ? structuredClone(config.costs) : undefined;
    draft.scorers = config.scorers ? structuredClone(config.scorers) : undefined;
    draft.failureBudget = config.failure_budget ?? DEFAULT_FAILURE_BUDGET;
    return draft;
  }

  private touch(): void {
    this.dirty = true;
    this.inlineError = null;
  }

  addCard(component: string, params: Record<string, unknown> = {}): void {
    this.cards.push({ component, params: { ...params } });
    this.touch();
  }

  removeCard(index: number): void {
    this.cards.splice(index, 1);
    this.touch();
  }

  moveCard(from: number, to: number): void {
    if (from === to) return;
    const [card] = this.cards.splice(from, 1);
    this.cards.splice(to, 0, card);
    this.touch();
  }

  reorderTo(order: string[]): void {
    const byId = new Map(this.cards.map((c) => [c.component, c]));
    const next: CardState[] = [];
    for (const id of order) {
      const card = byId.get(id);
      if (!card) throw new Error(`no card for component ${id}`);
      next.push(card);
    }
    if (next.length !== this.cards.length) {
      throw new Error("order does not cover every card");
    }
    this.cards = next;
    this.touch();
  }

  setParam(component: string, name: string, value: unknown): void {
    const card = this.cards.find((c) => c.component === component);
    if (!card) throw new Error(`no card for component ${component}`);
    card.params[name] = value;
    this.touch();
  }

  cardIndex(component: string): number {
    return this.cards.findIndex((c) => c.component === component);
  }

  markEvaluated(metrics: EvalMetrics): void {
    this.lastEvaluation = metrics;
    this.dirty = false;
    this.inlineError = null;
  }

  markInvalid(message: string): void {
    this.inlineError = message;
  }

  serialize(): PipelineConfigJson {
    const out: PipelineConfigJson = {
      components: this.cards.map((c) => {
        const entry: ComponentEntry = { component: c.component, params: { ...c.params } };
        if (c.pinned !== undefined && c.pinned !== null) entry.pinned = c.pinned;
        if (c.precedence && c.precedence.length) entry.precedence = [...c.precedence];
        return entry;
      }),
    };
    if (this.corpus !== undefined) out.corpus = this.corpus;
    if (this.sample !== undefined) out.sample = this.sample;
    if (this.costs && Object.keys(this.costs).length) out.costs = structuredClone(this.costs);
    if (this.scorers && this.scorers.length) out.scorers = structuredClone(this.scorers);
    if (this.failureBudget !== DEFAULT_FAILURE_BUDGET) out.failure_budget = this.failureBudget;
    return out;
  }

  // client-side pre-check; the authoritative diagnostics come from the
  // engine's 422 responses and land in inlineError verbatim
  validate(descriptors: ComponentDescriptor[]): string | null {
    const known = new Map(descriptors.map((d) => [d.component_id, d]));
    const seen = new Set<string>();
    for (const card of this.cards) {
      const descriptor = known.get(card.component);
      if (!descriptor && !this.scorers?.some((s) => s.scorer_id === card.component)) {
        return `unknown component '${card.component}'`;
      }
      if (seen.has(card.component)) return `duplicate component '${card.component}'`;
      seen.add(card.component);
      if (!descriptor) continue;
      const schemas = new Map(descriptor.params.map((p) => [p.name, p]));
      for (const [name, value] of Object.entries(card.params)) {
        const schema = schemas.get(name);
        if (!schema) return `unknown param '${name}' for '${card.component}'`;
        if (typeof value === "number") {
          if (schema.lo !== undefined && value < schema.lo) {
            return `${card.component}.${name}=${value} below ${schema.lo}`;
          }
          if (schema.hi !== undefined && value > schema.hi) {
            return `${card.component}.${name}=${value} above ${schema.hi}`;
          }
        }
      }
    }
    return null;
  }
}

export function configHash(value: unknown): string {
  // stable stringify (sorted keys) + FNV-1a; cheap cache key for drafts
  const text = stableStringify(value);
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash.toString(16).padStart(8, "0");
}

export function stableStringify(value: unknown): string {
  if (value === null || typeof value !== "object") return JSON.stringify(value);
  if (Array.isArray(value)) return `[${value.map(stableStringify).join(",")}]`;
  const entries = Object.entries(value as Record<string, unknown>)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([k, v]) => `${JSON.stringify(k)}:${stableStringify(v)}`);
  return `{${entries.join(",")}}`;
}
