// Choropleth of pipeline output beside the reference impact map. Region
// tooltips carry the response's count and rate verbatim; the rank
// correlation shown is the one the aggregate endpoint computed.

import type { ChoroplethFC } from "../types.js";

export const MAP_W = 420;
export const MAP_H = 160;
const PAD = 10;

export interface RegionShape {
  region_id: string;
  path: string;
  tooltip: string;
  intensity: number; // 0..1 within this map
}

export interface ImpactMapView {
  mode: "single" | "dual";
  left: RegionShape[];
  right: RegionShape[];
  rhoText: string | null;
  html: string;
}

function bounds(fc: ChoroplethFC): [number, number, number, number] {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const f of fc.features) {
    for (const [lon, lat] of f.geometry.coordinates[0]) {
      minX = Math.min(minX, lon); maxX = Math.max(maxX, lon);
      minY = Math.min(minY, lat); maxY = Math.max(maxY, lat);
    }
  }
  return [minX, minY, maxX, maxY];
}

function shapes(
  fc: ChoroplethFC,
  value: (regionId: string) => number,
  tooltip: (regionId: string) => string,
): RegionShape[] {
  const [minX, minY, maxX, maxY] = bounds(fc);
  const sx = (MAP_W - 2 * PAD) / (maxX - minX || 1);
  const sy = (MAP_H - 2 * PAD) / (maxY - minY || 1);
  const values = fc.features.map((f) => value(f.properties.region_id));
  const top = Math.max(...values, 0) || 1;
  return fc.features.map((f, i) => {
    const ring = f.geometry.coordinates[0]
      .map(
        ([lon, lat], j) =>
          `${j === 0 ? "M" : "L"}${(PAD + (lon - minX) * sx).toFixed(1)},` +
          `${(MAP_H - PAD - (lat - minY) * sy).toFixed(1)}`,
      )
      .join(" ");
    return {
      region_id: f.properties.region_id,
      path: `${ring} Z`,
      tooltip: tooltip(f.properties.region_id),
      intensity: values[i] / top,
    };
  });
}

export function renderImpactMap(fc: ChoroplethFC): ImpactMapView {
  const props = new Map(fc.features.map((f) => [f.properties.region_id, f.properties]));
  const left = shapes(
    fc,
    (rid) => props.get(rid)!.count,
    (rid) => {
      const p = props.get(rid)!;
      return `${p.name} (${rid}): count ${String(p.count)}, rate_per_100k ${String(p.rate_per_100k)}`;
    },
  );
  const impact = fc.metadata.impact;
  const dual = impact !== undefined;
  const right = dual
    ? shapes(
        fc,
        (rid) => impact[rid] ?? 0,
        (rid) => `${rid}: affected ${String(impact[rid] ?? 0)}`,
      )
    : [];
  const rho = fc.metadata.spearman_rho;
  const rhoText =
    dual && rho !== undefined && rho !== null ? `Spearman rho = ${String(rho)}` : null;

  const svgFor = (title: string, regions: RegionShape[]): string =>
    `<figure><figcaption>${title}</figcaption>` +
    `<svg viewBox="0 0 ${MAP_W} ${MAP_H}" class="map">` +
    regions
      .map(
        (r) =>
          `<path data-region="${r.region_id}" fill-opacity="${(0.15 + 0.85 * r.intensity).toFixed(3)}" ` +
          `d="${r.path}"><title>${r.tooltip}</title></path>`,
      )
      .join("") +
    `</svg></figure>`;

  const html =
    svgFor(`Geolocations (${fc.metadata.rate_unit})`, left) +
    (dual ? svgFor("Reference impact", right) : "") +
    (rhoText ? `<p class="rho" data-rho>${rhoText}</p>` : "");
  return { mode: dual ? "dual" : "single", left, right, rhoText, html };
}
