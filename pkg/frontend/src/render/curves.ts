// Precision / recall / reduction response curves for one component
// parameter, with a marker at the current slider value. Pure SVG-string
// generation; values come straight from sweep rows.

import type { SweepRow } from "../types.js";
import { markerFor } from "../studio.js";

export const CURVE_W = 420;
export const CURVE_H = 220;
const PAD = 28;

function x(value: number, lo: number, hi: number): number {
  const span = hi - lo || 1;
  return PAD + ((value - lo) / span) * (CURVE_W - 2 * PAD);
}

function y(v: number): number {
  return CURVE_H - PAD - v * (CURVE_H - 2 * PAD);
}

export function pathFor(rows: SweepRow[], pick: (r: SweepRow) => number): string {
  if (!rows.length) return "";
  const lo = rows[0].value;
  const hi = rows[rows.length - 1].value;
  return rows
    .map((r, i) => `${i === 0 ? "M" : "L"}${x(r.value, lo, hi).toFixed(2)},${y(pick(r)).toFixed(2)}`)
    .join(" ");
}

export interface StudioView {
  svg: string;
  pointCount: number;
  markerValue: number;
  markerX: number;
}

export function renderThresholdStudio(rows: SweepRow[], current: number): StudioView {
  if (!rows.length) {
    return { svg: `<svg class="curves"></svg>`, pointCount: 0, markerValue: current, markerX: 0 };
  }
  const lo = rows[0].value;
  const hi = rows[rows.length - 1].value;
  const marker = markerFor(rows, current);
  const markerX = x(marker.value, lo, hi);
  const paths = [
    ["precision", pathFor(rows, (r) => r.metrics.precision)],
    ["recall", pathFor(rows, (r) => r.metrics.recall)],
    ["reduction", pathFor(rows, (r) => r.metrics.reduction_rate)],
  ]
    .map(([name, d]) => `<path class="curve ${name}" fill="none" d="${d}"><title>${name}</title></path>`)
    .join("");
  const markerLine =
    `<line class="marker" x1="${markerX.toFixed(2)}" y1="${PAD}" ` +
    `x2="${markerX.toFixed(2)}" y2="${CURVE_H - PAD}"/>`;
  const svg =
    `<svg class="curves" viewBox="0 0 ${CURVE_W} ${CURVE_H}" data-points="${rows.length}">` +
    `${paths}${markerLine}</svg>`;
  return { svg, pointCount: rows.length, markerValue: marker.value, markerX };
}
