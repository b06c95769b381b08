// Term-occurrence timeline with event-span overlays.

import type { EventRow, SeriesResponse } from "../types.js";

export const TL_W = 640;
export const TL_H = 180;
const PAD = 24;

export interface TimelineView {
  svg: string;
  empty: boolean;
  message?: string;
  eventSpans: { event_id: string; x1: number; x2: number }[];
}

export function renderTimeline(series: SeriesResponse, events: EventRow[]): TimelineView {
  const rows = series.rows;
  const maxCount = rows.reduce((m, r) => Math.max(m, r.count), 0);
  if (!rows.length || maxCount === 0) {
    return {
      svg: `<svg class="timeline"></svg>`,
      empty: true,
      message: `No '${series.term}' activity in the selected range.`,
      eventSpans: [],
    };
  }
  const t0 = Date.parse(rows[0].bucket_start);
  const t1 = Date.parse(rows[rows.length - 1].bucket_start) + series.bucket_width * 1000;
  const xOf = (ms: number): number =>
    PAD + ((ms - t0) / (t1 - t0 || 1)) * (TL_W - 2 * PAD);
  const yOf = (count: number): number =>
    TL_H - PAD - (count / maxCount) * (TL_H - 2 * PAD);

  const spans = events
    .map((ev) => {
      const a = Math.max(t0, Date.parse(ev.start));
      const b = Math.min(t1, Date.parse(ev.end));
      return { event_id: ev.event_id, x1: xOf(a), x2: xOf(b), visible: b > a };
    })
    .filter((s) => s.visible)
    .map(({ event_id, x1, x2 }) => ({ event_id, x1, x2 }));

  const rects = spans
    .map(
      (s) =>
        `<rect class="event" data-event="${s.event_id}" x="${s.x1.toFixed(2)}" y="${PAD}" ` +
        `width="${(s.x2 - s.x1).toFixed(2)}" height="${TL_H - 2 * PAD}"><title>${s.event_id}</title></rect>`,
    )
    .join("");
  const points = rows
    .map((r) => `${xOf(Date.parse(r.bucket_start)).toFixed(2)},${yOf(r.count).toFixed(2)}`)
    .join(" ");
  const svg =
    `<svg class="timeline" viewBox="0 0 ${TL_W} ${TL_H}" data-term="${series.term}">` +
    `${rects}<polyline class="series" fill="none" points="${points}"/></svg>`;
  return { svg, empty: false, eventSpans: spans };
}
