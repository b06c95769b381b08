// Suggestion inbox: list optimizer/sweep suggestions, apply them to the
// draft, archive dismissals, and flag suggestions that predate the current
// draft as stale.

import type { PipelineDraft } from "../draft.js";
import { configHash } from "../draft.js";
import type { Suggestion } from "../types.js";

export interface InboxItem {
  suggestion: Suggestion;
  stale: boolean;
  dismissed: boolean;
}

export class SuggestionInbox {
  items: InboxItem[] = [];
  fetchedForHash: string | null = null;

  load(suggestions: Suggestion[], draft: PipelineDraft): void {
    this.fetchedForHash = configHash(draft.serialize());
    this.items = suggestions.map((s) => ({ suggestion: s, stale: false, dismissed: false }));
  }

  refreshStaleness(draft: PipelineDraft): void {
    const now = configHash(draft.serialize());
    for (const item of this.items) {
      item.stale = this.fetchedForHash !== null && now !== this.fetchedForHash;
    }
  }

  dismiss(index: number): void {
    this.items[index].dismissed = true;
  }

  get active(): InboxItem[] {
    return this.items.filter((i) => !i.dismissed);
  }
}

export function applySuggestion(draft: PipelineDraft, s: Suggestion): void {
  if (s.kind === "reorder") {
    const order = s.detail.order as string[];
    draft.reorderTo(order);
  } else if (s.kind === "threshold") {
    const param = s.detail.param as string;
    const value = s.detail.value as number;
    draft.setParam(s.component_id as string, param, value);
  } else if (s.kind === "remove") {
    const idx = draft.cardIndex(s.component_id as string);
    if (idx >= 0) draft.removeCard(idx);
  } else {
    throw new Error(`unknown suggestion kind ${(s as Suggestion).kind}`);
  }
}

export function describe(s: Suggestion): string {
  if (s.kind === "reorder") {
    const ratio = s.detail.ratio as number;
    const order = (s.detail.order as string[]).join(" > ");
    return `Reorder to ${order} (expected cost ratio ${String(ratio)})`;
  }
  if (s.kind === "threshold") {
    return `Set ${s.component_id}.${String(s.detail.param)} = ${String(s.detail.value)}`;
  }
  return `Remove ${s.component_id} (selectivity ${String(s.detail.selectivity)})`;
}

export function renderInbox(inbox: SuggestionInbox): string {
  const items = inbox.active;
  if (!items.length) return `<p class="empty">No suggestions.</p>`;
  return (
    `<ul class="inbox">` +
    items
      .map((item, i) => {
        const stale = item.stale ? `<span class="badge stale">stale</span>` : "";
        return (
          `<li data-kind="${item.suggestion.kind}">${describe(item.suggestion)} ${stale}` +
          `<button data-accept="${i}">accept</button>` +
          `<button data-dismiss="${i}">dismiss</button></li>`
        );
      })
      .join("") +
    `</ul>`
  );
}
