import http.server
import json
import threading
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geopulse.media import (
    KEEP_IF_GE,
    KEEP_IF_LE,
    ScorerBinding,
    dedup,
    dhash,
    hamming,
    photo_score,
    score_with,
    threshold_filter,
)
from geopulse.model import MediaRef, Post
from geopulse.pgm import LuminanceImage
from geopulse.rng import Rng


def img_from(arr) -> LuminanceImage:
    return LuminanceImage.from_array(np.asarray(arr, dtype=np.uint8))


def ts(hour=0, minute=0):
    return datetime(2021, 9, 26, hour, minute, tzinfo=timezone.utc)


def post(pid, paths, hour=0, minute=0):
    return Post(
        id=pid, created_at=ts(hour, minute), lang="en", text="",
        media=tuple(MediaRef(media_id=f"{pid}-{i}", path=p) for i, p in enumerate(paths)),
    )


class TestDhash:
    def test_constant_image_all_zero_bits(self):
        assert dhash(img_from(np.full((16, 18), 77))) == 0

    def test_strictly_decreasing_rows_all_ones(self):
        row = np.arange(200, 200 - 27, -3)
        img = img_from(np.tile(row, (16, 1)))
        assert dhash(img) == (1 << 64) - 1

    def test_checkerboard_matches_hand_downsample(self):
        # 18x16 checkerboard of 2x2 blocks: every dhash cell is exactly one block
        arr = np.zeros((16, 18), dtype=np.uint8)
        for r in range(16):
            for c in range(18):
                arr[r, c] = 200 if ((r // 2) + (c // 2)) % 2 == 0 else 40
        # independent oracle: plain nested-loop 2x2 means, then strict comparisons
        cells = [[arr[2 * r : 2 * r + 2, 2 * c : 2 * c + 2].mean() for c in range(9)]
                 for r in range(8)]
        expected = 0
        for r in range(8):
            for c in range(8):
                expected = (expected << 1) | int(cells[r][c] > cells[r][c + 1])
        assert dhash(img_from(arr)) == expected

    def test_fractional_downsample_consistent_with_quadrature(self):
        # 10x10 -> cells cover fractional pixel spans; oracle integrates per-pixel overlap
        rng = Rng(5)
        arr = rng.byte_block(100).reshape(10, 10).astype(np.float64)
        cells = np.zeros((8, 9))
        for r in range(8):
            for c in range(9):
                y0, y1 = r * 10 / 8, (r + 1) * 10 / 8
                x0, x1 = c * 10 / 9, (c + 1) * 10 / 9
                total = 0.0
                for i in range(10):
                    for j in range(10):
                        oy = max(0.0, min(y1, i + 1) - max(y0, i))
                        ox = max(0.0, min(x1, j + 1) - max(x0, j))
                        total += arr[i, j] * oy * ox
                cells[r, c] = total / ((y1 - y0) * (x1 - x0))
        expected = 0
        for r in range(8):
            for c in range(8):
                expected = (expected << 1) | int(cells[r, c] > cells[r, c + 1])
        assert dhash(img_from(arr)) == expected


class TestHamming:
    def test_identity(self):
        assert hamming(0xDEADBEEF, 0xDEADBEEF) == 0

    def test_all_bits(self):
        assert hamming(0, (1 << 64) - 1) == 64

    def test_three_documented_positions(self):
        a = 0
        b = (1 << 0) | (1 << 17) | (1 << 63)
        assert hamming(a, b) == 3

    @given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
    def test_metric_axioms(self, a, b, c):
        assert hamming(a, b) == hamming(b, a)
        assert hamming(a, a) == 0
        assert (hamming(a, b) == 0) == (a == b)
        assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


class TestDedup:
    def loader(self, table):
        def load(ref):
            return table[ref.path]
        return load

    def test_exact_duplicate_later_removed(self):
        arr = Rng(1).byte_block(45 * 40).reshape(40, 45)
        table = {"a.pgm": img_from(arr), "b.pgm": img_from(arr.copy())}
        result = dedup([post("p2", ["b.pgm"], hour=1), post("p1", ["a.pgm"], hour=0)],
                       self.loader(table))
        assert [p.id for p in result.kept] == ["p1"]
        assert len(result.removed) == 1
        r = result.removed[0]
        assert (r.removed_id, r.matched_kept_id, r.distance) == ("p2", "p1", 0)

    def test_two_noise_images_both_kept(self):
        a = Rng(10).byte_block(45 * 40).reshape(40, 45)
        b = Rng(11).byte_block(45 * 40).reshape(40, 45)
        distance = hamming(dhash(img_from(a)), dhash(img_from(b)))
        assert distance > 10  # fixed fixture, verified value
        table = {"a.pgm": img_from(a), "b.pgm": img_from(b)}
        result = dedup([post("p1", ["a.pgm"]), post("p2", ["b.pgm"], hour=1)],
                       self.loader(table))
        assert [p.id for p in result.kept] == ["p1", "p2"]

    def test_undecodable_flagged_through(self):
        table = {"bad.pgm": None}
        result = dedup([post("p1", ["bad.pgm"])], self.loader(table))
        assert [p.id for p in result.kept] == ["p1"]
        assert result.flagged == ["p1"]

    def test_first_seen_survives_tie_on_timestamp(self):
        arr = Rng(2).byte_block(45 * 40).reshape(40, 45)
        table = {"a.pgm": img_from(arr), "b.pgm": img_from(arr.copy())}
        # same created_at: id order breaks the tie
        result = dedup([post("pb", ["b.pgm"]), post("pa", ["a.pgm"])], self.loader(table))
        assert [p.id for p in result.kept] == ["pa"]

    def test_matches_quadratic_oracle_on_synthetic_sample(self, dedup_corpus):
        posts = sorted(dedup_corpus.posts, key=lambda p: (p.created_at, p.id))[:300]
        result = dedup(posts, dedup_corpus.load_image)
        # independent greedy oracle over integer hashes
        kept_hashes: list[tuple[str, int]] = []
        removed = 0
        for p in posts:
            h = dhash(dedup_corpus.load_image(p.media[0]))
            if any(hamming(h, kh) <= 10 for _, kh in kept_hashes):
                removed += 1
            else:
                kept_hashes.append((p.id, h))
        assert len(result.removed) == removed
        assert [p.id for p in result.kept] == [pid for pid, _ in kept_hashes]


class TestPhotoScore:
    def test_constant_image_zero(self):
        assert photo_score(img_from(np.full((8, 8), 9))) == 0.0

    def test_two_values_half_half(self):
        arr = np.zeros((10, 10), dtype=np.uint8)
        arr[:5] = 255
        assert photo_score(img_from(arr)) == pytest.approx(1.0 / 8.0)

    def test_uniform_histogram_max(self):
        arr = np.arange(256, dtype=np.uint8).reshape(16, 16)
        assert photo_score(img_from(arr)) == pytest.approx(1.0)

    def test_permutation_invariance(self):
        base = Rng(3).byte_block(400)
        shuffled = base.copy()
        # deterministic shuffle
        perm = np.argsort(Rng(4).block(400))
        shuffled = shuffled[perm]
        s1 = photo_score(LuminanceImage(20, 20, base.tobytes()))
        s2 = photo_score(LuminanceImage(20, 20, shuffled.tobytes()))
        assert s1 == pytest.approx(s2, abs=1e-12)


class _ScorerHandler(http.server.BaseHTTPRequestHandler):
    response: dict = {"score": 0.93}
    status = 200
    seen: list = []

    def do_POST(self):
        body = self.rfile.read(int(self.headers["Content-Length"]))
        type(self).seen.append(json.loads(body))
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(json.dumps(self.response).encode())

    def log_message(self, *args):
        pass


@pytest.fixture
def scorer_server():
    server = http.server.HTTPServer(("127.0.0.1", 0), _ScorerHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _ScorerHandler.seen = []
    _ScorerHandler.response = {"score": 0.93}
    yield f"http://127.0.0.1:{server.server_port}/score"
    server.shutdown()


class TestScoreWith:
    def test_nsfw_stub_always_zero(self):
        binding = ScorerBinding("nsfw-stub", "builtin")
        assert score_with(binding, post("p", [])).score == 0.0

    def test_external_score_passthrough(self, scorer_server):
        binding = ScorerBinding("my-scorer", "external", endpoint=scorer_server)
        img = img_from(np.zeros((2, 2)))
        result = score_with(binding, post("p9", ["x"]), [img])
        assert result.score == pytest.approx(0.93)
        assert result.scorer_id == "my-scorer"  # provenance travels with the score
        assert not result.failed
        sent = _ScorerHandler.seen[-1]
        assert sent["item_id"] == "p9"
        assert sent["media"].startswith("UDU")  # base64 of b"P5\n..."

    def test_unreachable_applies_default_policy(self):
        binding = ScorerBinding("down", "external", endpoint="http://127.0.0.1:1/x",
                                timeout_ms=200, default_score_on_failure=0.5)
        result = score_with(binding, post("p", []))
        assert result.failed and result.score == 0.5

    def test_reject_item_policy(self):
        binding = ScorerBinding("down", "external", endpoint="http://127.0.0.1:1/x",
                                timeout_ms=200, default_score_on_failure="reject-item")
        result = score_with(binding, post("p", []))
        assert result.failed and result.reject and result.score is None

    def test_out_of_range_score_flags_item(self, scorer_server):
        _ScorerHandler.response = {"score": 1.7}
        binding = ScorerBinding("weird", "external", endpoint=scorer_server)
        result = score_with(binding, post("p", []))
        assert result.flagged and result.score is None

    def test_external_binding_requires_endpoint(self):
        with pytest.raises(ValueError, match="endpoint"):
            ScorerBinding("x", "external")


class TestThresholdFilter:
    def test_keep_if_ge(self):
        assert threshold_filter([0.7], 0.55, KEEP_IF_GE) == [True]
        assert threshold_filter([0.5], 0.55, KEEP_IF_GE) == [False]

    def test_zero_threshold_keeps_everything(self):
        assert threshold_filter([0.0, 0.3, 1.0], 0.0, KEEP_IF_GE) == [True, True, True]

    def test_keep_if_le(self):
        assert threshold_filter([0.2, 0.9], 0.5, KEEP_IF_LE) == [True, False]

    @given(st.lists(st.floats(0, 1), max_size=30), st.floats(0, 1), st.floats(0, 1))
    def test_monotone_subset(self, scores, t1, t2):
        lo, hi = min(t1, t2), max(t1, t2)
        kept_hi = {i for i, k in enumerate(threshold_filter(scores, hi, KEEP_IF_GE)) if k}
        kept_lo = {i for i, k in enumerate(threshold_filter(scores, lo, KEEP_IF_GE)) if k}
        assert kept_hi <= kept_lo
