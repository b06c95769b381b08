"""Toponym extraction, disambiguation, and geometric post-filters.

Disambiguation picks one gazetteer candidate per mention by minimizing

    J = alpha * meanPairwise(haversine / HALF_CIRCUMFERENCE_KM)
      + beta  * mean((10 - admin_level) / 9)

so geographically coherent, administratively specific assignments win.
Ties break by larger total population, then lexicographic entry ids.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Gazetteer, GazetteerEntry, Post, Region
from .textutil import tokenize_spans

log = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0
HALF_CIRCUMFERENCE_KM = math.pi * EARTH_RADIUS_KM  # max great-circle distance, ~20015.09

DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 0.5
EXHAUSTIVE_LIMIT = 10_000
BEAM_WIDTH = 32
MAX_NGRAM = 3


@dataclass(frozen=True)
class Mention:
    surface: str
    span: tuple[int, int]  # character offsets into the post text
    candidates: tuple[GazetteerEntry, ...]


@dataclass(frozen=True)
class ResolvedPlace:
    surface: str | None
    entry_id: str | None  # None for native geotags
    lat: float
    lon: float
    provenance: str  # "gazetteer" | "native"


@dataclass(frozen=True)
class GeoResolution:
    post_id: str
    places: tuple[ResolvedPlace, ...]
    objective: float
    method: str  # exhaustive | beam | native

    @property
    def primary(self) -> ResolvedPlace:
        return self.places[0]


def extract_mentions(text: str, gazetteer: Gazetteer) -> list[Mention]:
    """Longest-match n-gram scan (n <= 3 tokens) over folded tokens.

    A longer match suppresses any shorter match overlapping its span, and
    emitted mentions never overlap each other.
    """
    toks = tokenize_spans(text)
    max_n = min(MAX_NGRAM, gazetteer.max_name_tokens)
    mentions: list[Mention] = []
    i = 0
    while i < len(toks):
        hit = None
        for n in range(min(max_n, len(toks) - i), 0, -1):
            key = " ".join(t[0] for t in toks[i : i + n])
            candidates = gazetteer.lookup_key(key)
            if candidates:
                start, end = toks[i][1], toks[i + n - 1][2]
                hit = Mention(
                    surface=text[start:end],
                    span=(start, end),
                    candidates=tuple(candidates),
                )
                i += n
                break
        if hit is not None:
            mentions.append(hit)
        else:
            i += 1
    return mentions


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between (lat, lon) points."""
    lat1, lon1, lat2, lon2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    s = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def admin_penalty(entry: GazetteerEntry) -> float:
    return (10 - entry.admin_level) / 9


def assignment_objective(chosen: "list[GazetteerEntry]", alpha: float, beta: float) -> float:
    """J for one complete assignment; mean over zero pairs is defined as 0."""
    k = len(chosen)
    pair_sum = 0.0
    for p, q in itertools.combinations(chosen, 2):
        pair_sum += haversine((p.lat, p.lon), (q.lat, q.lon)) / HALF_CIRCUMFERENCE_KM
    pairs = k * (k - 1) // 2
    dist_term = pair_sum / pairs if pairs else 0.0
    admin_term = sum(admin_penalty(c) for c in chosen) / k
    return alpha * dist_term + beta * admin_term


def _tie_key(chosen: "tuple[GazetteerEntry, ...]") -> tuple:
    return (-sum(c.population for c in chosen), tuple(c.entry_id for c in chosen))


def disambiguate(
    mentions: "list[Mention]",
    post_id: str = "",
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
    beam_width: int = BEAM_WIDTH,
) -> GeoResolution:
    """Choose one candidate per mention minimizing J.

    Exhaustive search when the assignment product is at most 10**4,
    otherwise beam search (the resolution records which method ran).
    """
    if not mentions:
        raise ValueError("disambiguate requires at least one mention")
    for m in mentions:
        if not m.candidates:
            raise ValueError(f"mention {m.surface!r} has no candidates")

    product = 1
    for m in mentions:
        product *= len(m.candidates)
        if product > EXHAUSTIVE_LIMIT:
            break

    if product <= EXHAUSTIVE_LIMIT:
        best = None
        for combo in itertools.product(*(m.candidates for m in mentions)):
            j = assignment_objective(list(combo), alpha, beta)
            key = (j, _tie_key(combo))
            if best is None or key < best[0]:
                best = (key, combo)
        chosen, objective, method = best[1], best[0][0], "exhaustive"
    else:
        chosen, objective = _beam_search(mentions, alpha, beta, beam_width)
        method = "beam"

    places = tuple(
        ResolvedPlace(
            surface=m.surface, entry_id=c.entry_id,
            lat=c.lat, lon=c.lon, provenance="gazetteer",
        )
        for m, c in zip(mentions, chosen)
    )
    return GeoResolution(post_id=post_id, places=places, objective=objective, method=method)


def _beam_search(mentions, alpha, beta, beam_width):
    # Partial score keeps raw sums; the divisors are assignment-independent,
    # so ranking partials by sums agrees with ranking completions by J.
    beam: list[tuple[float, float, tuple[GazetteerEntry, ...]]] = [(0.0, 0.0, ())]
    for m in mentions:
        grown = []
        for pair_sum, admin_sum, partial in beam:
            for c in m.candidates:
                ps = pair_sum
                for prev in partial:
                    ps += haversine((prev.lat, prev.lon), (c.lat, c.lon)) / HALF_CIRCUMFERENCE_KM
                grown.append((ps, admin_sum + admin_penalty(c), partial + (c,)))
        grown.sort(key=lambda t: (t[0] * alpha + t[1] * beta, _tie_key(t[2])))
        beam = grown[:beam_width]
    k = len(mentions)
    pairs = k * (k - 1) // 2
    best = beam[0]
    objective = alpha * (best[0] / pairs if pairs else 0.0) + beta * (best[1] / k)
    return best[2], objective


def resolve_post(
    post: Post,
    gazetteer: Gazetteer,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
    beam_width: int = BEAM_WIDTH,
) -> GeoResolution | None:
    """Native geotags bypass disambiguation; unresolvable posts give None."""
    if post.native_geo is not None:
        lat, lon = post.native_geo
        place = ResolvedPlace(surface=None, entry_id=None, lat=lat, lon=lon, provenance="native")
        return GeoResolution(post_id=post.id, places=(place,), objective=0.0, method="native")
    mentions = extract_mentions(post.text, gazetteer)
    if not mentions:
        return None
    return disambiguate(mentions, post_id=post.id, alpha=alpha, beta=beta, beam_width=beam_width)


def point_in_polygon(x: float, y: float, ring: "tuple[tuple[float, float], ...]") -> bool:
    """Ray casting with the boundary counting as inside."""
    n = len(ring)
    inside = False
    for i in range(n - 1):
        x1, y1 = ring[i]
        x2, y2 = ring[i + 1]
        # boundary check: point on segment [p1, p2]
        if (
            min(x1, x2) - 1e-12 <= x <= max(x1, x2) + 1e-12
            and min(y1, y2) - 1e-12 <= y <= max(y1, y2) + 1e-12
            and abs((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)) <= 1e-12
        ):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def region_contains(region: Region, lat: float, lon: float) -> bool:
    return point_in_polygon(lon, lat, region.polygon)


def geometry_filter(
    resolutions: "list[GeoResolution]",
    monitored: "list[Region]",
) -> list[GeoResolution]:
    """Keep resolutions with any place inside any monitored polygon."""
    if not monitored:
        log.warning("geometry_filter: empty monitored region list drops everything")
        return []
    kept = []
    for res in resolutions:
        if any(
            region_contains(region, place.lat, place.lon)
            for place in res.places
            for region in monitored
        ):
            kept.append(res)
    return kept


def density_filter(
    points: "list[tuple[float, float]]",
    eps_km: float = 50.0,
    min_pts: int = 3,
) -> list[bool]:
    """keep[i] iff point i has >= min_pts neighbors (itself included) within eps_km."""
    if not points:
        return []
    lat = np.radians(np.array([p[0] for p in points], dtype=np.float64))
    lon = np.radians(np.array([p[1] for p in points], dtype=np.float64))
    sin_half_lat = np.sin((lat[:, None] - lat[None, :]) / 2)
    sin_half_lon = np.sin((lon[:, None] - lon[None, :]) / 2)
    h = sin_half_lat**2 + np.cos(lat)[:, None] * np.cos(lat)[None, :] * sin_half_lon**2
    dist = 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))
    counts = (dist <= eps_km).sum(axis=1)
    return [bool(c >= min_pts) for c in counts]
