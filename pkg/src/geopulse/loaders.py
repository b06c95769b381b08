"""File ingestion and validation.

Post streams are noisy: bad lines become per-line diagnostics and the rest
of the stream survives. Reference data (gazetteer, events, regions, samples)
must be trusted, so any malformed row there is a hard error.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from typing import IO, Iterable

from .model import (
    LANG_UND,
    EventRecord,
    Gazetteer,
    GazetteerEntry,
    LabeledSample,
    MediaRef,
    Post,
    Region,
    iso,
    utc,
)
from .textutil import norm_key

_LANG = re.compile(r"^[a-z]{2}$")

GAZETTEER_COLUMNS = [
    "entry_id", "canonical_name", "alt_names", "lat", "lon",
    "admin_level", "population", "country", "polygon_wkt",
]
EVENT_COLUMNS = ["event_id", "event_type", "country", "start", "end", "name"]
SAMPLE_COLUMNS = ["post_id", "relevant"]
REGION_COLUMNS = ["region_id", "name", "population", "polygon_wkt"]


class LoaderError(ValueError):
    """Malformed reference data; carries the offending row number."""


@dataclass(frozen=True)
class Diagnostic:
    line: int
    reason: str


def _check_media_path(path: str) -> None:
    if path.startswith(("/", "\\")) or ".." in path.split("/"):
        raise ValueError(f"media path escapes the corpus media directory: {path!r}")


def _post_from_obj(obj: dict) -> Post:
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    pid = obj.get("id")
    if not isinstance(pid, str) or not pid:
        raise ValueError("missing or empty id")
    created = utc(str(obj.get("created_at", "")))
    lang = str(obj.get("lang", LANG_UND)).lower() or LANG_UND
    if lang != LANG_UND and not _LANG.match(lang):
        raise ValueError(f"lang {lang!r} is not a lowercase ISO 639-1 code")
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise ValueError("text is not a string")
    media = []
    for m in obj.get("media", []) or []:
        path = str(m["path"])
        _check_media_path(path)
        media.append(MediaRef(media_id=str(m["media_id"]), path=path))
    geo = None
    raw_geo = obj.get("native_geo")
    if raw_geo is not None:
        lat, lon = float(raw_geo["lat"]), float(raw_geo["lon"])
        if not -90.0 <= lat <= 90.0:
            raise ValueError("latitude out of range")
        if not -180.0 <= lon <= 180.0:
            raise ValueError("longitude out of range")
        geo = (lat, lon)
    return Post(
        id=pid,
        created_at=created,
        lang=lang,
        text=text,
        media=tuple(media),
        native_geo=geo,
        is_repost=bool(obj.get("is_repost", False)),
    )


def parse_posts(
    stream: IO[bytes] | Iterable[bytes] | bytes,
    exclude_reposts: bool = True,
) -> tuple[list[Post], list[Diagnostic]]:
    """Parse line-delimited JSON posts.

    Valid lines become Posts in input order; invalid lines (and, when
    `exclude_reposts`, repost lines) become diagnostics. A duplicate id
    rejects the later occurrence.
    """
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    posts: list[Post] = []
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8", errors="replace").strip()
        if not line:
            continue
        try:
            post = _post_from_obj(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            diags.append(Diagnostic(lineno, str(exc) or type(exc).__name__))
            continue
        if post.id in seen:
            diags.append(Diagnostic(lineno, f"duplicate id {post.id!r}"))
            continue
        seen.add(post.id)
        if exclude_reposts and post.is_repost:
            diags.append(Diagnostic(lineno, "repost excluded by policy"))
            continue
        posts.append(post)
    return posts, diags


def post_to_obj(post: Post) -> dict:
    obj = {
        "id": post.id,
        "created_at": iso(post.created_at),
        "lang": post.lang,
        "text": post.text,
        "media": [{"media_id": m.media_id, "path": m.path} for m in post.media],
        "is_repost": post.is_repost,
    }
    if post.native_geo is not None:
        obj["native_geo"] = {"lat": post.native_geo[0], "lon": post.native_geo[1]}
    return obj


def serialize_posts(posts: Iterable[Post]) -> bytes:
    lines = [json.dumps(post_to_obj(p), ensure_ascii=False) for p in posts]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def _rows(path, expected_header: list[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoaderError(f"{path}: empty file, expected header {expected_header}")
        if header != expected_header:
            raise LoaderError(f"{path}: header {header} != expected {expected_header}")
        yield from enumerate(reader, start=2)


def load_gazetteer(path) -> Gazetteer:
    entries = []
    for rowno, row in _rows(path, GAZETTEER_COLUMNS):
        try:
            if len(row) != len(GAZETTEER_COLUMNS):
                raise ValueError(f"expected {len(GAZETTEER_COLUMNS)} columns, got {len(row)}")
            admin = int(row[5])
            if not 1 <= admin <= 10:
                raise ValueError(f"admin_level {admin} outside [1, 10]")
            population = int(row[6])
            if population < 0:
                raise ValueError("population negative")
            alt = tuple(a for a in row[2].split("|") if a) if row[2] else ()
            for name in (row[1], *alt):
                if not norm_key(name):
                    raise ValueError(f"name {name!r} empty after NFKC casefold")
            entries.append(GazetteerEntry(
                entry_id=row[0],
                canonical_name=row[1],
                alt_names=alt,
                lat=float(row[3]),
                lon=float(row[4]),
                admin_level=admin,
                population=population,
                country=row[7],
                polygon_wkt=row[8] or None,
            ))
        except ValueError as exc:
            raise LoaderError(f"{path}: row {rowno}: {exc}") from exc
    return Gazetteer(entries)


def load_events(path) -> list[EventRecord]:
    events = []
    for rowno, row in _rows(path, EVENT_COLUMNS):
        try:
            if len(row) != len(EVENT_COLUMNS):
                raise ValueError(f"expected {len(EVENT_COLUMNS)} columns, got {len(row)}")
            start, end = utc(row[3]), utc(row[4])
            if not start < end:
                raise ValueError(f"start {row[3]} not before end {row[4]}")
            events.append(EventRecord(
                event_id=row[0], event_type=row[1], country=row[2],
                start=start, end=end, name=row[5],
            ))
        except ValueError as exc:
            raise LoaderError(f"{path}: row {rowno}: {exc}") from exc
    return events


def load_sample(path, known_post_ids: set[str]) -> LabeledSample:
    labels: dict[str, bool] = {}
    for rowno, row in _rows(path, SAMPLE_COLUMNS):
        try:
            if len(row) != 2:
                raise ValueError(f"expected 2 columns, got {len(row)}")
            if row[1] not in ("0", "1"):
                raise ValueError(f"relevant must be 0 or 1, got {row[1]!r}")
            labels[row[0]] = row[1] == "1"
        except ValueError as exc:
            raise LoaderError(f"{path}: row {rowno}: {exc}") from exc
    missing = sorted(set(labels) - known_post_ids)
    if missing:
        raise LoaderError(f"{path}: sample references unknown post ids: {missing}")
    return LabeledSample(sample_id=str(path), labels=labels)


def parse_wkt_polygon(wkt: str) -> tuple[tuple[float, float], ...]:
    """Outer ring of a WKT POLYGON as (lon, lat) pairs; ring must be closed."""
    m = re.match(r"\s*POLYGON\s*\(\(\s*(.*?)\s*\)\s*(?:,|\))", wkt, re.IGNORECASE | re.DOTALL)
    if not m:
        raise ValueError(f"not a WKT polygon: {wkt[:60]!r}")
    ring = []
    for pair in m.group(1).split(","):
        parts = pair.split()
        if len(parts) != 2:
            raise ValueError(f"bad WKT coordinate {pair!r}")
        ring.append((float(parts[0]), float(parts[1])))
    if len(ring) < 4:
        raise ValueError("polygon ring needs at least 4 points")
    if ring[0] != ring[-1]:
        raise ValueError("ring not closed")
    return tuple(ring)


def load_regions(path) -> list[Region]:
    regions = []
    for rowno, row in _rows(path, REGION_COLUMNS):
        try:
            if len(row) != len(REGION_COLUMNS):
                raise ValueError(f"expected {len(REGION_COLUMNS)} columns, got {len(row)}")
            population = int(row[2])
            if population <= 0:
                raise ValueError("population must be positive")
            regions.append(Region(
                region_id=row[0], name=row[1], population=population,
                polygon=parse_wkt_polygon(row[3]),
            ))
        except ValueError as exc:
            raise LoaderError(f"{path}: row {rowno}: {exc}") from exc
    return regions


def load_impact(path) -> dict[str, float]:
    """region_id -> affected persons (non-negative)."""
    impact: dict[str, float] = {}
    for rowno, row in _rows(path, ["region_id", "affected"]):
        try:
            value = float(row[1])
            if value < 0:
                raise ValueError("affected must be non-negative")
            impact[row[0]] = value
        except (ValueError, IndexError) as exc:
            raise LoaderError(f"{path}: row {rowno}: {exc}") from exc
    return impact
