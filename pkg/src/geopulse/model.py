"""Domain types shared by every stage of the engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from .textutil import norm_key

LANG_UND = "und"


@dataclass(frozen=True)
class MediaRef:
    media_id: str
    path: str  # relative to the corpus media directory


@dataclass(frozen=True)
class Post:
    id: str
    created_at: datetime  # UTC, second precision
    lang: str
    text: str
    media: tuple[MediaRef, ...] = ()
    native_geo: tuple[float, float] | None = None  # (lat, lon)
    is_repost: bool = False

    @property
    def epoch(self) -> int:
        return int(self.created_at.timestamp())


@dataclass(frozen=True)
class GazetteerEntry:
    entry_id: str
    canonical_name: str
    alt_names: tuple[str, ...]
    lat: float
    lon: float
    admin_level: int  # 1..10, larger = more specific
    population: int
    country: str
    polygon_wkt: str | None = None


@dataclass(frozen=True)
class EventRecord:
    event_id: str
    event_type: str
    country: str
    start: datetime
    end: datetime
    name: str


@dataclass(frozen=True)
class LabeledSample:
    sample_id: str
    labels: dict[str, bool]  # post_id -> relevant

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Region:
    region_id: str
    name: str
    polygon: tuple[tuple[float, float], ...]  # closed ring of (lon, lat)
    population: int


class Gazetteer:
    """Name index over entries; keys are NFKC-casefolded token strings."""

    def __init__(self, entries: list[GazetteerEntry]):
        self.entries = list(entries)
        self._index: dict[str, list[GazetteerEntry]] = {}
        self.max_name_tokens = 1
        for e in self.entries:
            for name in (e.canonical_name, *e.alt_names):
                key = norm_key(name)
                if not key:
                    continue
                self._index.setdefault(key, []).append(e)
                self.max_name_tokens = max(self.max_name_tokens, key.count(" ") + 1)

    def lookup(self, name: str) -> list[GazetteerEntry]:
        return self._index.get(norm_key(name), [])

    def lookup_key(self, key: str) -> list[GazetteerEntry]:
        """Lookup by an already-normalized key (no folding applied)."""
        return self._index.get(key, [])

    def __len__(self) -> int:
        return len(self.entries)


def utc(ts: str) -> datetime:
    """Parse an ISO-8601 timestamp with explicit offset into UTC seconds."""
    s = ts.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {ts!r} lacks a UTC offset")
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def iso(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
