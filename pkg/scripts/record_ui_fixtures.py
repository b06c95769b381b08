#!/usr/bin/env python3
"""Record API responses as JSON fixtures for the designer-UI test suite.

Spins the service in-process over a small deterministic corpus and writes
one file per endpoint under frontend/tests/fixtures/. The UI snapshot tests
assert that every rendered metric equals the corresponding field in these
responses.

Usage: python scripts/record_ui_fixtures.py [--out frontend/tests/fixtures]
"""

import argparse
import json
import tempfile
import time
from datetime import timedelta
from pathlib import Path

from fastapi.testclient import TestClient

from geopulse import pipeline as pl
from geopulse import synth
from geopulse import trigger as tg
from geopulse.corpus import Corpus
from geopulse.model import utc
from geopulse.service import create_app

ORIGIN = utc("2021-09-01T00:00:00Z")

DRAFT_CONFIG = {
    "components": [
        {"component": "dedup", "params": {"max_distance": 10}},
        {"component": "photo", "params": {"threshold": 0.5}},
        {"component": "nsfw", "params": {"threshold": 0.5}},
        {"component": "geolocate", "params": {}},
    ],
    "costs": {
        "dedup": {"cost_ms": 0.2, "selectivity": 0.9},
        "photo": {"cost_ms": 0.05, "selectivity": 0.9},
        "nsfw": {"cost_ms": 0.01, "selectivity": 1.0},
        "geolocate": {"cost_ms": 0.1, "selectivity": 0.4},
    },
}


def fixture_spec():
    events = []
    for i in range(3):
        start = ORIGIN + timedelta(hours=30 + i * 60)
        events.append(synth.EventSpec(
            start=start, end=start + timedelta(hours=24), country="XA",
            boosts={"flood": 10.0}, center=(2.0, 2.0), sigma_km=150.0))
    return synth.SynthSpec(
        seed=31337, origin=ORIGIN, duration_hours=220, base_rate=8.0,
        languages=(("en", 1.0),), events=tuple(events),
        duplicate_fraction=0.1, nonphoto_fraction=0.1,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent
                        / "frontend" / "tests" / "fixtures")
    args = parser.parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    def save(name, payload):
        (out / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"wrote {out / name}")

    with tempfile.TemporaryDirectory() as root:
        root = Path(root)
        corpus_dir = root / "corpora" / "demo"
        synth.generate(fixture_spec(), corpus_dir)
        corpus = Corpus(corpus_dir)
        dictionary = tg.build_dictionary(corpus.posts, corpus.events, "en", ["flood"], k=2)
        (root / "dictionaries").mkdir()
        (root / "dictionaries" / "base.json").write_text(json.dumps(dictionary.to_json()))

        app = create_app(root, max_workers=1)
        with TestClient(app) as client:
            save("components.json", client.get("/api/components").json())
            save("evaluate.json", client.post(
                "/api/pipeline/evaluate",
                json={"config": DRAFT_CONFIG, "corpus_id": "demo"}).json())
            save("sweep_photo.json", client.post(
                "/api/pipeline/sweep",
                json={"config": DRAFT_CONFIG, "corpus_id": "demo",
                      "component_id": "photo", "param": "threshold"}).json())
            save("optimize.json", client.post(
                "/api/pipeline/optimize", json={"config": DRAFT_CONFIG}).json())
            save("invalid_config_error.json", client.post(
                "/api/pipeline/evaluate",
                json={"config": {"components": [
                    {"component": "photo", "params": {"threshold": 2.0}}]},
                    "corpus_id": "demo"}).json())

            run_id = client.post(
                "/api/pipeline/run",
                json={"config": DRAFT_CONFIG, "corpus_id": "demo"}).json()["run_id"]
            while True:
                status = client.get(f"/api/runs/{run_id}").json()
                if status["status"] in ("done", "failed"):
                    break
                time.sleep(0.05)
            save("run_status.json", status)
            save("aggregate.json",
                 client.get(f"/api/aggregate?run_id={run_id}&bucket=day").json())
            save("suggestions.json",
                 client.get(f"/api/suggestions?run_id={run_id}").json())
            save("series_flood.json",
                 client.get("/api/trigger/series", params={"term": "flood"}).json())
            save("series_empty.json",
                 client.get("/api/trigger/series", params={
                     "term": "flood", "from": "2021-12-01T00:00:00Z",
                     "to": "2021-12-02T00:00:00Z"}).json())
            save("events.json", client.get("/api/trigger/events").json())
            save("trigger_eval.json", client.post(
                "/api/trigger/evaluate",
                json={"dictionary_id": "base", "W": 24}).json())

    # canonical serialization oracles for the draft round-trip tests
    config = pl.parse_config(DRAFT_CONFIG)
    save("canonical_config.json", pl.config_to_json(config))
    applied = pl.parse_config({
        **DRAFT_CONFIG,
        "components": [
            c if c["component"] != "photo"
            else {**c, "params": {**c["params"], "threshold": 0.65}}
            for c in DRAFT_CONFIG["components"]
        ],
    })
    save("canonical_config_after_apply.json", pl.config_to_json(applied))
    reordered = pl.optimize_order(config).config
    save("canonical_config_reordered.json", pl.config_to_json(reordered))


if __name__ == "__main__":
    main()
