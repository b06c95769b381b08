"""Spatio-temporal projection of pipeline output.

Kept, geolocated posts are assigned to the first region (in file order)
whose polygon contains their primary resolved point, bucketed by UTC day or
hour, normalized per 100,000 inhabitants, and compared against reference
impact data with Spearman rank correlation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .geo import GeoResolution, region_contains
from .model import Post, Region

UNASSIGNED = "unassigned"
RATE_UNIT = 100_000


@dataclass(frozen=True)
class RegionAggregate:
    region_id: str
    bucket: str  # "2021-09-26" or "2021-09-26T14"
    count: int
    rate_per_100k: "float | None"  # None for the unassigned bucket

    def to_json(self) -> dict:
        return {
            "region_id": self.region_id,
            "bucket": self.bucket,
            "count": self.count,
            "rate_per_100k": self.rate_per_100k,
        }


def _bucket_key(ts: datetime, bucket: str) -> str:
    ts = ts.astimezone(timezone.utc)
    if bucket == "day":
        return ts.strftime("%Y-%m-%d")
    if bucket == "hour":
        return ts.strftime("%Y-%m-%dT%H")
    raise ValueError(f"bucket must be 'day' or 'hour', got {bucket!r}")


def aggregate(
    resolutions: "list[GeoResolution]",
    posts_by_id: "dict[str, Post]",
    regions: "list[Region]",
    bucket: str = "day",
) -> list[RegionAggregate]:
    """Per-region, per-bucket counts of resolved posts.

    Each resolution contributes exactly once: to the first region containing
    its primary point, or to the reserved "unassigned" region. Conservation:
    the counts sum to len(resolutions).
    """
    populations = {r.region_id: r.population for r in regions}
    counts: dict[tuple[str, str], int] = {}
    for res in resolutions:
        post = posts_by_id[res.post_id]
        key = _bucket_key(post.created_at, bucket)
        region_id = UNASSIGNED
        for region in regions:
            if region_contains(region, res.primary.lat, res.primary.lon):
                region_id = region.region_id
                break
        counts[(region_id, key)] = counts.get((region_id, key), 0) + 1
    out = []
    for (region_id, key), count in sorted(counts.items()):
        pop = populations.get(region_id)
        out.append(RegionAggregate(
            region_id=region_id,
            bucket=key,
            count=count,
            rate_per_100k=count / pop * RATE_UNIT if pop else None,
        ))
    return out


def region_totals(aggregates: "list[RegionAggregate]") -> dict[str, int]:
    totals: dict[str, int] = {}
    for agg in aggregates:
        totals[agg.region_id] = totals.get(agg.region_id, 0) + agg.count
    return totals


def _ranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their mean rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(
    x: "dict[str, float]", y: "dict[str, float]"
) -> tuple[float, list[str]]:
    """Spearman's rho over the common keys; returns (rho, excluded keys).

    Ties get average ranks; a constant side correlates 0 by convention.
    """
    common = sorted(set(x) & set(y))
    excluded = sorted((set(x) | set(y)) - set(common))
    if len(common) < 2:
        raise ValueError("need at least 2 common regions for rank correlation")
    rx = _ranks(np.array([x[k] for k in common], dtype=np.float64))
    ry = _ranks(np.array([y[k] for k in common], dtype=np.float64))
    rxc = rx - rx.mean()
    ryc = ry - ry.mean()
    denom = np.sqrt((rxc * rxc).sum() * (ryc * ryc).sum())
    if denom == 0.0:
        return 0.0, excluded
    return float(np.clip((rxc * ryc).sum() / denom, -1.0, 1.0)), excluded


def export_choropleth(
    aggregates: "list[RegionAggregate]",
    regions: "list[Region]",
    impact: "dict[str, float] | None" = None,
) -> dict:
    """GeoJSON FeatureCollection with per-region count and rate properties.

    Counts are totaled across the buckets present in `aggregates`; regions
    without any aggregate row get zero-valued features. When a reference
    impact table is given, it rides along in the metadata with the Spearman
    rank correlation so map clients never compute metrics themselves.
    """
    totals = region_totals(aggregates)
    features = []
    for region in regions:
        count = totals.get(region.region_id, 0)
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "Polygon",
                "coordinates": [[list(p) for p in region.polygon]],
            },
            "properties": {
                "region_id": region.region_id,
                "name": region.name,
                "population": region.population,
                "count": count,
                "rate_per_100k": count / region.population * RATE_UNIT,
            },
        })
    metadata: dict = {"rate_unit": f"per {RATE_UNIT} inhabitants"}
    if impact is not None:
        metadata["impact"] = dict(sorted(impact.items()))
        try:
            rho, excluded = spearman(
                {r.region_id: float(totals.get(r.region_id, 0)) for r in regions},
                impact,
            )
            metadata["spearman_rho"] = rho
            metadata["excluded_regions"] = excluded
        except ValueError:
            metadata["spearman_rho"] = None
    return {
        "type": "FeatureCollection",
        "metadata": metadata,
        "features": features,
    }


def aggregates_to_csv(aggregates: "list[RegionAggregate]") -> str:
    lines = ["region_id,bucket,count,rate_per_100k"]
    for a in aggregates:
        rate = "" if a.rate_per_100k is None else repr(a.rate_per_100k)
        lines.append(f"{a.region_id},{a.bucket},{a.count},{rate}")
    return "\n".join(lines) + "\n"


def save_aggregates(aggregates, regions, out_dir) -> None:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "aggregates.csv").write_text(aggregates_to_csv(aggregates))
    (out / "choropleth.geojson").write_text(
        json.dumps(export_choropleth(aggregates, regions), indent=2) + "\n")
