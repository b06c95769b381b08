import json
from datetime import datetime, timezone

import pytest

from geopulse import synth
from geopulse.corpus import Corpus


def _materialize(spec, tmp_path_factory, name):
    out = tmp_path_factory.mktemp(name)
    synth.generate(spec, out)
    return out


@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory):
    return _materialize(synth.benchmark_spec(), tmp_path_factory, "bench")


@pytest.fixture(scope="session")
def bench_corpus(bench_dir):
    return Corpus(bench_dir)


@pytest.fixture(scope="session")
def dedup_dir(tmp_path_factory):
    return _materialize(synth.dedup_spec(), tmp_path_factory, "dedup")


@pytest.fixture(scope="session")
def dedup_corpus(dedup_dir):
    return Corpus(dedup_dir)


def ts(s: str) -> datetime:
    return datetime.fromisoformat(s.replace("Z", "+00:00")).astimezone(timezone.utc)


def write_mini_corpus(root, posts, gazetteer_rows=None, events_rows=None,
                      sample_rows=None, regions_rows=None):
    """Hand-built corpus directory; rows are raw CSV cell lists."""
    root.mkdir(parents=True, exist_ok=True)
    (root / "media").mkdir(exist_ok=True)
    with open(root / "posts.jsonl", "w", encoding="utf-8") as fh:
        for p in posts:
            fh.write(json.dumps(p) + "\n")

    def csv_write(name, header, rows):
        lines = [",".join(header)]
        for row in rows or []:
            cells = []
            for c in row:
                s = str(c)
                if "," in s or '"' in s:
                    s = '"' + s.replace('"', '""') + '"'
                cells.append(s)
            lines.append(",".join(cells))
        (root / name).write_text("\n".join(lines) + "\n")

    csv_write("gazetteer.csv",
              ["entry_id", "canonical_name", "alt_names", "lat", "lon",
               "admin_level", "population", "country", "polygon_wkt"],
              gazetteer_rows)
    csv_write("events.csv",
              ["event_id", "event_type", "country", "start", "end", "name"],
              events_rows)
    csv_write("sample.csv", ["post_id", "relevant"], sample_rows)
    csv_write("regions.csv", ["region_id", "name", "population", "polygon_wkt"],
              regions_rows)
    return root
