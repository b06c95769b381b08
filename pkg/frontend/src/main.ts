// Browser wiring: connects the pure draft/render modules to the DOM.
// All numbers on screen come from API responses (rendered verbatim by the
// render modules); this file only moves data around.

import { ApiClient, ApiError } from "./api.js";
import { PipelineDraft } from "./draft.js";
import { renderMetricsPanel } from "./render/metrics.js";
import { renderThresholdStudio } from "./render/curves.js";
import { renderTimeline } from "./render/timeline.js";
import { renderImpactMap } from "./render/map.js";
import { SuggestionInbox, applySuggestion, renderInbox } from "./render/inbox.js";
import { ThresholdStudio } from "./studio.js";
import type { ComponentDescriptor, SweepRow } from "./types.js";

const api = new ApiClient("");
const draft = new PipelineDraft();
const studio = new ThresholdStudio(api);
const inbox = new SuggestionInbox();

let descriptors: ComponentDescriptor[] = [];
let studioRows: SweepRow[] = [];
let studioComponent = "photo";
let lastRunId: string | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

function corpusId(): string {
  return ($("corpus") as HTMLInputElement).value.trim() || "bench";
}

function renderCanvas(): void {
  const host = $("canvas");
  host.innerHTML = draft.cards
    .map((card, i) => {
      const descriptor = descriptors.find((d) => d.component_id === card.component);
      const params = (descriptor?.params ?? [])
        .filter((p) => p.type === "float" || p.type === "int")
        .map((p) => {
          const value = card.params[p.name] ?? p.default;
          return (
            `<label>${p.name} <input data-card="${i}" data-param="${p.name}" ` +
            `type="number" step="${p.type === "int" ? 1 : 0.05}" value="${value}"/></label>`
          );
        })
        .join(" ");
      return (
        `<div class="card" draggable="true" data-index="${i}">` +
        `<header><strong>${card.component}</strong>` +
        `<span class="actions">` +
        `<button data-up="${i}" title="move up">&uarr;</button>` +
        `<button data-down="${i}" title="move down">&darr;</button>` +
        `<button data-remove="${i}" title="remove">&times;</button>` +
        `</span></header>${params}</div>`
      );
    })
    .join("");
  $("dirty").textContent = draft.dirty ? "draft changed since last evaluation" : "";
  $("draft-error").textContent = draft.inlineError ?? "";
  renderMetrics();
  inbox.refreshStaleness(draft);
  $("inbox").innerHTML = renderInbox(inbox);
}

function renderMetrics(): void {
  $("metrics").innerHTML = renderMetricsPanel(draft.lastEvaluation, draft.dirty);
}

async function evaluateDraft(): Promise<void> {
  const problem = draft.validate(descriptors);
  if (problem) {
    draft.markInvalid(problem);
    renderCanvas();
    return;
  }
  try {
    const metrics = await api.evaluate(draft.serialize(), corpusId());
    draft.markEvaluated(metrics);
  } catch (err) {
    if (err instanceof ApiError) draft.markInvalid(err.message);
    else throw err;
  }
  renderCanvas();
}

async function refreshStudio(refetch: boolean): Promise<void> {
  const slider = $("slider") as HTMLInputElement;
  if (refetch) {
    studioRows = await studio.curves(draft, corpusId(), studioComponent);
  }
  const view = renderThresholdStudio(studioRows, Number(slider.value));
  $("curves").innerHTML = view.svg;
  $("slider-value").textContent = slider.value;
}

async function refreshTimeline(): Promise<void> {
  const term = ($("term") as HTMLInputElement).value.trim() || "flood";
  const [series, events] = await Promise.all([
    api.triggerSeries(term, { corpusId: corpusId() }),
    api.triggerEvents(corpusId()),
  ]);
  const view = renderTimeline(series, events.events);
  $("timeline").innerHTML = view.empty ? `<p class="empty">${view.message}</p>` : view.svg;
}

async function startRun(): Promise<void> {
  const { run_id } = await api.startRun(draft.serialize(), corpusId());
  lastRunId = run_id;
  $("run-status").textContent = `run ${run_id}: pending`;
  const poll = async (): Promise<void> => {
    const status = await api.runStatus(run_id);
    $("run-status").textContent = `run ${run_id}: ${status.status}` +
      (status.error ? ` (${status.error})` : "");
    if (status.status === "pending" || status.status === "running") {
      setTimeout(() => void poll(), 500);
      return;
    }
    if (status.status === "done") {
      await Promise.all([refreshMap(), refreshInbox()]);
    }
  };
  await poll();
}

async function refreshMap(): Promise<void> {
  if (!lastRunId) return;
  const fc = await api.aggregate(lastRunId, "day");
  $("map").innerHTML = renderImpactMap(fc).html;
}

async function refreshInbox(): Promise<void> {
  if (!lastRunId) return;
  const { suggestions } = await api.suggestions(lastRunId);
  inbox.load(suggestions, draft);
  $("inbox").innerHTML = renderInbox(inbox);
}

function wire(): void {
  $("canvas").addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    if (target.dataset.remove !== undefined) {
      draft.removeCard(Number(target.dataset.remove));
    } else if (target.dataset.up !== undefined) {
      const i = Number(target.dataset.up);
      if (i > 0) draft.moveCard(i, i - 1);
    } else if (target.dataset.down !== undefined) {
      const i = Number(target.dataset.down);
      if (i < draft.cards.length - 1) draft.moveCard(i, i + 1);
    } else {
      return;
    }
    renderCanvas();
  });
  $("canvas").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.dataset.param === undefined) return;
    const card = draft.cards[Number(input.dataset.card)];
    draft.setParam(card.component, input.dataset.param, Number(input.value));
    renderCanvas();
  });

  // drag-and-drop reorder
  let dragFrom = -1;
  $("canvas").addEventListener("dragstart", (ev) => {
    const card = (ev.target as HTMLElement).closest(".card") as HTMLElement | null;
    dragFrom = card ? Number(card.dataset.index) : -1;
  });
  $("canvas").addEventListener("dragover", (ev) => ev.preventDefault());
  $("canvas").addEventListener("drop", (ev) => {
    ev.preventDefault();
    const card = (ev.target as HTMLElement).closest(".card") as HTMLElement | null;
    if (card && dragFrom >= 0) {
      draft.moveCard(dragFrom, Number(card.dataset.index));
      renderCanvas();
    }
    dragFrom = -1;
  });

  $("add-component").addEventListener("click", () => {
    const select = $("component-select") as HTMLSelectElement;
    draft.addCard(select.value);
    renderCanvas();
  });
  $("evaluate").addEventListener("click", () => void evaluateDraft());
  $("run").addEventListener("click", () => void startRun());

  $("studio-component").addEventListener("change", (ev) => {
    studioComponent = (ev.target as HTMLSelectElement).value;
    studioRows = [];
    void refreshStudio(true);
  });
  $("slider").addEventListener("input", () => void refreshStudio(false));
  $("studio-fetch").addEventListener("click", () => void refreshStudio(true));
  $("apply-threshold").addEventListener("click", () => {
    const slider = $("slider") as HTMLInputElement;
    studio.apply(draft, studioComponent, Number(slider.value));
    renderCanvas();
  });

  $("plot-term").addEventListener("click", () => void refreshTimeline());
  $("inbox").addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    if (target.dataset.accept !== undefined) {
      const item = inbox.active[Number(target.dataset.accept)];
      applySuggestion(draft, item.suggestion);
      renderCanvas();
      void evaluateDraft();
    } else if (target.dataset.dismiss !== undefined) {
      inbox.dismiss(Number(target.dataset.dismiss));
      $("inbox").innerHTML = renderInbox(inbox);
    }
  });
}

async function boot(): Promise<void> {
  descriptors = (await api.components()).components;
  const select = $("component-select") as HTMLSelectElement;
  select.innerHTML = descriptors
    .map((d) => `<option value="${d.component_id}">${d.component_id}</option>`)
    .join("");
  for (const cid of ["dedup", "photo", "nsfw", "geolocate"]) {
    draft.addCard(cid);
  }
  draft.dirty = false;
  wire();
  renderCanvas();
  void refreshStudio(true);
  void refreshTimeline();
}

void boot();
