import hashlib
import itertools
import json
from datetime import timedelta, timezone

import numpy as np
import pytest

from geopulse import synth
from geopulse.corpus import Corpus
from geopulse.media import dhash, hamming
from geopulse.model import utc
from geopulse.synth import EventSpec, SynthSpec
from geopulse.textutil import token_set


def tiny_spec(**over):
    origin = utc("2021-09-01T00:00:00Z")
    fields = dict(
        seed=11,
        origin=origin,
        duration_hours=24,
        base_rate=5.0,
        languages=(("en", 1.0),),
        events=(EventSpec(
            start=origin + timedelta(hours=6), end=origin + timedelta(hours=12),
            country="XA", boosts={"flood": 10.0}, center=(2.0, 2.0), sigma_km=150.0,
        ),),
        duplicate_fraction=0.0,
        nonphoto_fraction=0.0,
    )
    fields.update(over)
    return SynthSpec(**fields)


def tree_digest(root):
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


class TestDeterminism:
    def test_same_seed_byte_identical(self, tmp_path):
        spec = tiny_spec()
        a, b = tmp_path / "a", tmp_path / "b"
        synth.generate(spec, a)
        synth.generate(spec, b)
        assert tree_digest(a) == tree_digest(b)

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        synth.generate(tiny_spec(seed=1), a)
        synth.generate(tiny_spec(seed=2), b)
        assert tree_digest(a) != tree_digest(b)


class TestSpecValidation:
    def test_negative_rate(self):
        with pytest.raises(ValueError, match="non-negative"):
            tiny_spec(base_rate=-1.0)

    def test_fraction_out_of_range(self):
        with pytest.raises(ValueError, match="duplicate_fraction"):
            tiny_spec(duplicate_fraction=1.5)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum"):
            tiny_spec(languages=(("en", 0.5), ("es", 0.4)))

    def test_json_round_trip(self):
        spec = synth.benchmark_spec()
        again = SynthSpec.from_json(json.loads(json.dumps(spec.to_json())))
        assert again == spec


class TestBoostContract:
    def test_boosted_term_rate_at_least_5x(self, tmp_path):
        # one event covering 120 hourly buckets >= 100
        origin = utc("2021-09-01T00:00:00Z")
        spec = tiny_spec(
            seed=300,
            duration_hours=300,
            base_rate=30.0,
            events=(EventSpec(
                start=origin + timedelta(hours=60), end=origin + timedelta(hours=180),
                country="XA", boosts={"flood": 10.0}, center=(2.0, 2.0), sigma_km=150.0,
            ),),
        )
        out = tmp_path / "c"
        synth.generate(spec, out)
        corpus = Corpus(out)
        ev = corpus.events[0]
        in_counts, out_counts = [], []
        per_hour = {}
        for p in corpus.posts:
            hour = p.created_at.replace(minute=0, second=0)
            has = "flood" in token_set(p.text)
            per_hour.setdefault(hour, 0)
            per_hour[hour] += 1 if has else 0
        for hour, count in per_hour.items():
            (in_counts if ev.start <= hour < ev.end else out_counts).append(count)
        assert len(in_counts) >= 100
        assert np.mean(in_counts) >= 5 * np.mean(out_counts)

    def test_event_post_timestamps_inside_spans(self, bench_corpus):
        spans = [(e.start, e.end) for e in bench_corpus.events]
        relevant = [pid for pid, rel in bench_corpus.sample.labels.items() if rel]
        by_id = {p.id: p for p in bench_corpus.posts}
        for pid in relevant:
            t = by_id[pid].created_at
            assert any(s <= t < e for s, e in spans)


class TestImages:
    def test_duplicate_fraction_zero_no_close_pairs(self, tmp_path):
        spec = tiny_spec(seed=501, duration_hours=60, base_rate=5.0,
                         duplicate_fraction=0.0, nonphoto_fraction=0.3)
        out = tmp_path / "c"
        synth.generate(spec, out)
        corpus = Corpus(out)
        hashes = [dhash(corpus.load_image(p.media[0])) for p in corpus.posts]
        close = [
            (i, j) for (i, a), (j, b) in itertools.combinations(enumerate(hashes), 2)
            if hamming(a, b) <= 10
        ]
        assert close == []

    def test_duplicates_exist_when_requested(self, dedup_corpus):
        posts = sorted(dedup_corpus.posts, key=lambda p: (p.created_at, p.id))
        hashes = [dhash(dedup_corpus.load_image(p.media[0])) for p in posts]
        close = sum(
            1 for a, b in itertools.combinations(hashes[:200], 2) if hamming(a, b) <= 10
        )
        assert close > 0

    def test_nonphoto_scores_below_half_photo_above(self, tmp_path):
        from geopulse.media import photo_score
        from geopulse.rng import Rng
        from geopulse.synth import _nonphoto_pixels, _photo_pixels
        from geopulse.pgm import LuminanceImage
        rng = Rng(77)
        for _ in range(20):
            non = photo_score(LuminanceImage.from_array(_nonphoto_pixels(rng)))
            pho = photo_score(LuminanceImage.from_array(_photo_pixels(rng)))
            assert non <= 0.25 < 0.5 <= pho


class TestCorpusShape:
    def test_all_outputs_present(self, bench_dir):
        for name in ("posts.jsonl", "events.csv", "sample.csv", "gazetteer.csv",
                     "regions.csv", "impact.csv", "synth_spec.json"):
            assert (bench_dir / name).exists()
        assert any((bench_dir / "media").iterdir())

    def test_sample_covers_every_post(self, bench_corpus):
        assert set(bench_corpus.sample.labels) == bench_corpus.post_ids

    def test_intensity_in_three_regions(self, bench_corpus):
        nonzero = [rid for rid, v in bench_corpus.impact.items() if v > 0]
        # clusters sit in R1..R3; wide sigma may leak a few mentions next door
        top3 = sorted(bench_corpus.impact, key=bench_corpus.impact.get, reverse=True)[:3]
        assert set(top3) == {"R1", "R2", "R3"}
        assert len(nonzero) >= 3
