"""Deterministic synthetic corpus generator.

Injects events into a background post stream over a small fixed world of
five rectangular regions, each seeded with a handful of towns. For a fixed
seed the generated corpus is byte-identical across runs: every random
choice flows through one Rng stream (see rng.py for the recurrence) and all
files are written in a canonical order and format.

Inside an event window the word sampler gives each boosted term weight b
instead of 1, so its per-post frequency rises by roughly the boost factor.
Posts that drew a boosted term during a window also mention a town near the
event's cluster center; those posts are the labeled-relevant ground truth
and feed the injected per-region intensity table (impact.csv).
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .geo import haversine
from .model import iso, utc
from .rng import Rng
from .textutil import token_set

IMG_W, IMG_H = 45, 40  # 5x upscale of the 9x8 dhash grid
GEO_MENTION_RATE = 0.15
NOISE_PIXELS = 16

# Fixed world: five 4-degree boxes along the equator.
REGIONS = [
    # (region_id, name, country, population, lon_min, lon_max, lat_min, lat_max)
    ("R1", "Westmark", "XA", 2_000_000, 0.0, 4.0, 0.0, 4.0),
    ("R2", "Midvale", "XA", 1_200_000, 4.0, 8.0, 0.0, 4.0),
    ("R3", "Eastholm", "XA", 800_000, 8.0, 12.0, 0.0, 4.0),
    ("R4", "Northreach", "XB", 500_000, 12.0, 16.0, 0.0, 4.0),
    ("R5", "Southgate", "XB", 300_000, 16.0, 20.0, 0.0, 4.0),
]
TOWNS_PER_REGION = 6

_NAME_PREFIX = ["Var", "Mel", "Tor", "Gal", "Rin", "Bel", "Dor", "Kas", "Lum", "Per", "Sol", "Tam"]
_NAME_SUFFIX = ["tona", "kori", "mund", "vika", "lund", "pora", "beck", "dale", "moor", "stad"]

WORDS = {
    "en": (
        "flood rescue water river rain storm bridge road house people morning "
        "night city town help news today live video photo street coffee music "
        "game team play match goal friend family work school travel train bus "
        "market food dinner lunch happy sad tired great small large quick slow "
        "light dark early late weather cloud sun wind field farm forest hill "
        "valley coast beach boat fish bird tree garden park shop price money "
        "phone update report local area north south east west center station "
        "crowd event meeting concert film book story weekend holiday traffic "
        "power line service office building window door table chair"
    ).split(),
    "es": (
        "inundacion rescate agua rio lluvia tormenta puente camino casa gente "
        "manana noche ciudad pueblo ayuda noticias hoy video foto calle cafe "
        "musica juego equipo partido gol amigo familia trabajo escuela viaje "
        "tren autobus mercado comida cena feliz triste cansado grande pequeno "
        "rapido lento luz oscuro temprano tarde tiempo nube sol viento campo "
        "granja bosque colina valle costa playa barco pez pajaro arbol jardin "
        "parque tienda precio dinero telefono informe zona norte sur este "
        "oeste centro estacion multitud evento reunion concierto cine libro "
        "historia semana fiesta trafico energia servicio oficina edificio "
        "ventana puerta mesa silla"
    ).split(),
}


@dataclass(frozen=True)
class EventSpec:
    start: datetime
    end: datetime
    country: str
    boosts: dict[str, float]  # term -> frequency multiplier
    center: tuple[float, float]  # (lat, lon)
    sigma_km: float


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    origin: datetime
    duration_hours: int
    base_rate: float  # posts per hour
    languages: tuple[tuple[str, float], ...]  # (code, mixture weight)
    events: tuple[EventSpec, ...]
    duplicate_fraction: float = 0.0
    nonphoto_fraction: float = 0.0

    def __post_init__(self):
        if self.base_rate < 0 or self.duration_hours < 0:
            raise ValueError("rates must be non-negative")
        for frac, name in ((self.duplicate_fraction, "duplicate_fraction"),
                           (self.nonphoto_fraction, "nonphoto_fraction")):
            if not 0.0 <= frac <= 1.0:
                raise ValueError(f"{name} outside [0, 1]")
        total = sum(w for _, w in self.languages)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"language mixture weights sum to {total}, not 1")
        for code, _ in self.languages:
            if code not in WORDS:
                raise ValueError(f"no bundled word list for language {code!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "SynthSpec":
        events = tuple(
            EventSpec(
                start=utc(e["start"]),
                end=utc(e["end"]),
                country=e["country"],
                boosts={k: float(v) for k, v in e["boosts"].items()},
                center=(float(e["center"]["lat"]), float(e["center"]["lon"])),
                sigma_km=float(e["sigma_km"]),
            )
            for e in obj.get("events", [])
        )
        return cls(
            seed=int(obj["seed"]),
            origin=utc(obj["origin"]),
            duration_hours=int(obj["duration_hours"]),
            base_rate=float(obj["base_rate"]),
            languages=tuple((l["code"], float(l["weight"])) for l in obj["languages"]),
            events=events,
            duplicate_fraction=float(obj.get("duplicate_fraction", 0.0)),
            nonphoto_fraction=float(obj.get("nonphoto_fraction", 0.0)),
        )

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "origin": iso(self.origin),
            "duration_hours": self.duration_hours,
            "base_rate": self.base_rate,
            "languages": [{"code": c, "weight": w} for c, w in self.languages],
            "events": [
                {
                    "start": iso(e.start), "end": iso(e.end), "country": e.country,
                    "boosts": e.boosts,
                    "center": {"lat": e.center[0], "lon": e.center[1]},
                    "sigma_km": e.sigma_km,
                }
                for e in self.events
            ],
            "duplicate_fraction": self.duplicate_fraction,
            "nonphoto_fraction": self.nonphoto_fraction,
        }


def _pick_weighted(rng: Rng, cumulative: list[float], total: float) -> int:
    return bisect.bisect_right(cumulative, rng.uniform() * total)


def _make_towns(rng: Rng):
    towns = []
    for r_idx, (rid, _, country, _, lon0, lon1, lat0, lat1) in enumerate(REGIONS):
        for j in range(TOWNS_PER_REGION):
            i = r_idx * TOWNS_PER_REGION + j
            name = _NAME_PREFIX[i % len(_NAME_PREFIX)] + _NAME_SUFFIX[(i // len(_NAME_PREFIX)) % len(_NAME_SUFFIX)]
            lat = lat0 + 0.2 + rng.uniform() * (lat1 - lat0 - 0.4)
            lon = lon0 + 0.2 + rng.uniform() * (lon1 - lon0 - 0.4)
            towns.append({
                "entry_id": f"T{i:03d}", "name": name, "lat": lat, "lon": lon,
                "population": 10_000 + rng.randbelow(490_000),
                "country": country, "region": rid,
            })
    return towns


def _photo_pixels(rng: Rng) -> np.ndarray:
    return rng.byte_block(IMG_W * IMG_H).reshape(IMG_H, IMG_W)


def _nonphoto_pixels(rng: Rng) -> np.ndarray:
    # coarse 9x8 block pattern over four gray levels: low histogram entropy
    # (score <= 0.25) yet hash-diverse across images
    levels = np.array(sorted(10 + rng.randbelow(236) for _ in range(4)), dtype=np.uint8)
    grid = rng.byte_block(9 * 8).reshape(8, 9) % 4
    return np.repeat(np.repeat(levels[grid], IMG_H // 8, axis=0), IMG_W // 9, axis=1)


def _noisy_copy(rng: Rng, pixels: np.ndarray) -> np.ndarray:
    out = pixels.astype(np.int16).copy()
    flat = out.reshape(-1)
    for _ in range(NOISE_PIXELS):
        pos = rng.randbelow(flat.size)
        flat[pos] += 2 if rng.uniform() < 0.5 else -2
    return np.clip(out, 0, 255).astype(np.uint8)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            s = str(cell)
            if "," in s or '"' in s:
                s = '"' + s.replace('"', '""') + '"'
            cells.append(s)
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _region_wkt(lon0, lon1, lat0, lat1) -> str:
    ring = [(lon0, lat0), (lon1, lat0), (lon1, lat1), (lon0, lat1), (lon0, lat0)]
    return "POLYGON ((" + ", ".join(f"{x} {y}" for x, y in ring) + "))"


def generate(spec: SynthSpec, out_dir) -> dict:
    """Write a full corpus under out_dir; returns generation counters."""
    out = Path(out_dir)
    media_dir = out / "media"
    media_dir.mkdir(parents=True, exist_ok=True)
    rng = Rng(spec.seed)

    towns = _make_towns(rng)
    town_region = {t["entry_id"]: t["region"] for t in towns}

    # per-event town weights, concentrated around the cluster center
    event_town_cum: list[tuple[list[float], float]] = []
    for ev in spec.events:
        weights = []
        for t in towns:
            d = haversine(ev.center, (t["lat"], t["lon"]))
            weights.append(math.exp(-0.5 * (d / ev.sigma_km) ** 2))
        cum = list(np.cumsum(weights))
        event_town_cum.append((cum, cum[-1]))

    lang_cum = list(np.cumsum([w for _, w in spec.languages]))

    # per-(language, event-combination) word tables are tiny; build lazily
    vocab_cum: dict[tuple, tuple[list[str], list[float], float]] = {}

    def word_table(lang: str, boosts: "dict[str, float] | None"):
        key = (lang, tuple(sorted(boosts.items())) if boosts else ())
        if key not in vocab_cum:
            words = WORDS[lang]
            weights = [boosts.get(w, 1.0) if boosts else 1.0 for w in words]
            cum = list(np.cumsum(weights))
            vocab_cum[key] = (words, cum, cum[-1])
        return vocab_cum[key]

    posts_lines: list[str] = []
    originals: list[np.ndarray] = []
    labels: list[tuple[str, int]] = []
    region_intensity = {rid: 0 for rid, *_ in REGIONS}
    n_dupes = 0

    post_idx = 0
    whole = int(spec.base_rate)
    frac = spec.base_rate - whole
    for hour in range(spec.duration_hours):
        hour_start = spec.origin + timedelta(hours=hour)
        n_posts = whole + (1 if rng.uniform() < frac else 0)
        active = [
            (i, ev) for i, ev in enumerate(spec.events)
            if ev.start <= hour_start < ev.end
        ]
        boosts: dict[str, float] = {}
        for _, ev in active:
            for term, b in ev.boosts.items():
                boosts[term] = max(boosts.get(term, 1.0), b)
        for _ in range(n_posts):
            pid = f"p{post_idx:06d}"
            post_idx += 1
            created = hour_start + timedelta(seconds=rng.randbelow(3600))
            lang = spec.languages[_pick_weighted(rng, lang_cum, lang_cum[-1])][0]
            words, cum, total = word_table(lang, boosts if active else None)
            n_words = 6 + rng.randbelow(7)
            chosen = [words[_pick_weighted(rng, cum, total)] for _ in range(n_words)]

            boosted_hit = active and any(w in boosts for w in chosen)
            if boosted_hit:
                ev_i, ev = active[0]
                cum_t, total_t = event_town_cum[ev_i]
                town = towns[_pick_weighted(rng, cum_t, total_t)]
                chosen.append(town["name"])
                region_intensity[town["region"]] += 1
            elif rng.uniform() < GEO_MENTION_RATE:
                chosen.append(towns[rng.randbelow(len(towns))]["name"])
            if rng.uniform() < 0.1:
                chosen[rng.randbelow(len(chosen))] = "#" + chosen[rng.randbelow(len(chosen))].lstrip("#")
            text = " ".join(chosen)

            # image: duplicate of an earlier original, or a fresh original
            if originals and rng.uniform() < spec.duplicate_fraction:
                src = originals[rng.randbelow(len(originals))]
                pixels = _noisy_copy(rng, src)
                n_dupes += 1
            else:
                if rng.uniform() < spec.nonphoto_fraction:
                    pixels = _nonphoto_pixels(rng)
                else:
                    pixels = _photo_pixels(rng)
                originals.append(pixels)
            (media_dir / f"{pid}.pgm").write_bytes(
                b"P5\n%d %d\n255\n" % (IMG_W, IMG_H) + pixels.tobytes()
            )

            obj = {
                "id": pid,
                "created_at": iso(created),
                "lang": lang,
                "text": text,
                "media": [{"media_id": f"{pid}-0", "path": f"{pid}.pgm"}],
                "is_repost": False,
            }
            posts_lines.append(json.dumps(obj, ensure_ascii=False))

            relevant = bool(active) and bool(token_set(text) & set(boosts))
            labels.append((pid, 1 if relevant else 0))

    (out / "posts.jsonl").write_text("\n".join(posts_lines) + ("\n" if posts_lines else ""), encoding="utf-8")
    _write_csv(out / "sample.csv", ["post_id", "relevant"], [list(l) for l in labels])
    _write_csv(
        out / "events.csv",
        ["event_id", "event_type", "country", "start", "end", "name"],
        [
            [f"E{i + 1}", "flood", ev.country, iso(ev.start), iso(ev.end), f"Synthetic event {i + 1}"]
            for i, ev in enumerate(spec.events)
        ],
    )
    _write_csv(
        out / "gazetteer.csv",
        ["entry_id", "canonical_name", "alt_names", "lat", "lon",
         "admin_level", "population", "country", "polygon_wkt"],
        [
            [t["entry_id"], t["name"], "", repr(t["lat"]), repr(t["lon"]),
             8, t["population"], t["country"], ""]
            for t in towns
        ],
    )
    _write_csv(
        out / "regions.csv",
        ["region_id", "name", "population", "polygon_wkt"],
        [
            [rid, name, pop, _region_wkt(lon0, lon1, lat0, lat1)]
            for rid, name, _, pop, lon0, lon1, lat0, lat1 in REGIONS
        ],
    )
    _write_csv(
        out / "impact.csv",
        ["region_id", "affected"],
        [[rid, region_intensity[rid]] for rid, *_ in REGIONS],
    )
    (out / "synth_spec.json").write_text(
        json.dumps(spec.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {
        "posts": post_idx,
        "duplicates": n_dupes,
        "towns": len(towns),
        "events": len(spec.events),
        "region_intensity": region_intensity,
        "town_region": town_region,
    }


def _hours(origin: datetime, a: int, b: int) -> tuple[datetime, datetime]:
    return origin + timedelta(hours=a), origin + timedelta(hours=b)


_ORIGIN = datetime(2021, 9, 1, tzinfo=timezone.utc)


def benchmark_spec() -> SynthSpec:
    """Six-event corpus used by the trigger and aggregation benchmarks."""
    centers = {"R1": (2.0, 2.0), "R2": (2.0, 6.0), "R3": (2.0, 10.0)}
    placements = ["R1", "R1", "R1", "R2", "R2", "R3"]
    events = []
    for i, rid in enumerate(placements):
        start, end = _hours(_ORIGIN, 60 + i * 110, 60 + i * 110 + 36)
        events.append(EventSpec(
            start=start, end=end, country="XA",
            boosts={"flood": 10.0, "rescue": 6.0, "inundacion": 10.0},
            center=centers[rid], sigma_km=150.0,
        ))
    return SynthSpec(
        seed=20210901,
        origin=_ORIGIN,
        duration_hours=720,
        base_rate=20.0,
        languages=(("en", 0.7), ("es", 0.3)),
        events=tuple(events),
        duplicate_fraction=0.10,
        nonphoto_fraction=0.15,
    )


def dedup_spec() -> SynthSpec:
    """1,000-item corpus with a 0.3 duplicate fraction (dedup benchmarks)."""
    start, end = _hours(_ORIGIN, 30, 60)
    return SynthSpec(
        seed=424242,
        origin=_ORIGIN,
        duration_hours=100,
        base_rate=10.0,
        languages=(("en", 1.0),),
        events=(EventSpec(
            start=start, end=end, country="XA",
            boosts={"flood": 10.0}, center=(2.0, 2.0), sigma_km=150.0,
        ),),
        duplicate_fraction=0.3,
        nonphoto_fraction=0.2,
    )


def throughput_spec() -> SynthSpec:
    """10,000-item corpus for the end-to-end throughput benchmark."""
    e1 = _hours(_ORIGIN, 40, 80)
    e2 = _hours(_ORIGIN, 120, 160)
    return SynthSpec(
        seed=77,
        origin=_ORIGIN,
        duration_hours=200,
        base_rate=50.0,
        languages=(("en", 0.7), ("es", 0.3)),
        events=(
            EventSpec(start=e1[0], end=e1[1], country="XA",
                      boosts={"flood": 10.0, "inundacion": 10.0},
                      center=(2.0, 2.0), sigma_km=150.0),
            EventSpec(start=e2[0], end=e2[1], country="XA",
                      boosts={"flood": 8.0, "inundacion": 8.0},
                      center=(2.0, 6.0), sigma_km=150.0),
        ),
        duplicate_fraction=0.2,
        nonphoto_fraction=0.2,
    )
