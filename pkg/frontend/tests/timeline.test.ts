import { describe, expect, it } from "vitest";

import { renderTimeline } from "../src/render/timeline.js";
import type { EventRow, SeriesResponse } from "../src/types.js";
import { fixture } from "./helpers.js";

const series = fixture<SeriesResponse>("series_flood.json");
const events = fixture<{ events: EventRow[] }>("events.json").events;

describe("trigger timeline", () => {
  it("plots one polyline point per series bucket", () => {
    const view = renderTimeline(series, events);
    expect(view.empty).toBe(false);
    const match = view.svg.match(/points="([^"]+)"/);
    expect(match).not.toBeNull();
    expect(match![1].split(" ")).toHaveLength(series.rows.length);
    expect(view.svg).toContain(`data-term="${series.term}"`);
  });

  it("shades every event span inside the plotted range", () => {
    const view = renderTimeline(series, events);
    expect(view.eventSpans).toHaveLength(events.length);
    for (const ev of events) {
      expect(view.svg).toContain(`data-event="${ev.event_id}"`);
    }
    for (const span of view.eventSpans) {
      expect(span.x2).toBeGreaterThan(span.x1);
    }
  });

  it("event spans line up with the time axis ordering", () => {
    const view = renderTimeline(series, events);
    const xs = view.eventSpans.map((s) => s.x1);
    expect(xs).toEqual([...xs].sort((a, b) => a - b));
  });

  it("an empty range renders the empty-state message", () => {
    const empty = fixture<SeriesResponse>("series_empty.json");
    const view = renderTimeline(empty, events);
    expect(view.empty).toBe(true);
    expect(view.message).toContain("flood");
    expect(view.eventSpans).toHaveLength(0);
  });
});
