from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geopulse import trigger
from geopulse.model import EventRecord, Post, utc
from geopulse.rng import Rng
from geopulse.trigger import (
    Dictionary,
    FeatureWindow,
    FoldResult,
    bucket_term_counts,
    build_dictionary,
    evaluate_loeo,
    loss_and_grad,
    make_windows,
    micro_average,
    pearson,
    predict,
    train,
)

T0 = utc("2021-09-01T00:00:00Z")


def post(pid, minutes, text, lang="en"):
    return Post(id=pid, created_at=T0 + timedelta(minutes=minutes), lang=lang, text=text)


def event(eid, start_h, end_h, country="XA"):
    return EventRecord(event_id=eid, event_type="flood", country=country,
                       start=T0 + timedelta(hours=start_h),
                       end=T0 + timedelta(hours=end_h), name=eid)


class TestBucketTermCounts:
    def test_hourly_counting(self):
        posts = [
            post("a", 5, "flood here"),       # 00:05
            post("b", 50, "the flood rises"), # 00:50
            post("c", 70, "flood again"),     # 01:10
        ]
        span = (T0, T0 + timedelta(hours=2))
        series = bucket_term_counts(posts, ["flood"], 3600, span)[0]
        assert list(series.counts) == [2, 1]

    def test_empty_corpus_zero_series(self):
        span = (T0, T0 + timedelta(hours=3))
        series = bucket_term_counts([], ["flood"], 3600, span)[0]
        assert list(series.counts) == [0, 0, 0]

    def test_casefold_and_punctuation(self):
        posts = [post("a", 0, "FLOOD!")]
        span = (T0, T0 + timedelta(hours=1))
        series = bucket_term_counts(posts, ["flood"], 3600, span)[0]
        assert list(series.counts) == [1]

    def test_repeated_term_counts_once_per_post(self):
        posts = [post("a", 0, "flood flood flood")]
        span = (T0, T0 + timedelta(hours=1))
        assert list(bucket_term_counts(posts, ["flood"], 3600, span)[0].counts) == [1]

    def test_empty_dictionary_errors(self):
        with pytest.raises(ValueError, match="empty dictionary"):
            bucket_term_counts([], [], 3600, (T0, T0))

    def test_unaligned_span_errors(self):
        with pytest.raises(ValueError, match="aligned"):
            bucket_term_counts([], ["x"], 3600, (T0 + timedelta(minutes=7), T0 + timedelta(hours=2)))

    def test_conservation(self, bench_corpus):
        series = bucket_term_counts(bench_corpus.posts, ["flood"])[0]
        matching = sum(
            1 for p in bench_corpus.posts
            if "flood" in p.text.casefold().split()
            and series.origin <= p.created_at
        )
        from geopulse.textutil import token_set
        exact = sum(1 for p in bench_corpus.posts if "flood" in token_set(p.text))
        assert int(series.counts.sum()) == exact


class TestPearson:
    def test_identical(self):
        assert pearson([0, 1, 0, 1], [0, 1, 0, 1]) == pytest.approx(1.0)

    def test_inverted(self):
        assert pearson([0, 1, 0, 1], [1, 0, 1, 0]) == pytest.approx(-1.0)

    def test_constant_is_zero(self):
        assert pearson([3, 3, 3, 3], [0, 1, 2, 3]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            pearson([1, 2], [1, 2, 3])

    @given(st.lists(st.integers(-1000, 1000).map(lambda v: v / 10.0),
                    min_size=2, max_size=40),
           st.floats(0.01, 50), st.floats(-10, 10))
    @settings(max_examples=80)
    def test_symmetry_and_affine_invariance(self, xs, scale, shift):
        rng = Rng(hash(tuple(xs)) & 0xFFFF)
        ys = [rng.uniform() * 10 for _ in xs]
        r1 = pearson(xs, ys)
        assert r1 == pytest.approx(pearson(ys, xs), abs=1e-12)
        transformed = [scale * x + shift for x in xs]
        assert pearson(transformed, ys) == pytest.approx(r1, abs=1e-9)


class TestBuildDictionary:
    def test_event_only_term_learned_with_high_score(self):
        # "inondation" appears in every in-event bucket, nowhere else
        posts = []
        idx = 0
        for hour in range(48):
            in_event = 12 <= hour < 24
            for _ in range(3):
                text = "inondation ville" if in_event else "rue ville calme"
                posts.append(post(f"p{idx}", hour * 60 + 1, text, lang="fr"))
                idx += 1
        events = [event("e1", 12, 24)]
        d = build_dictionary(posts, events, "fr", ["riviere"], k=5, min_freq=10)
        learned = dict(d.learned)
        assert "inondation" in learned
        # hand oracle: the series is exactly proportional to the activity series
        series = bucket_term_counts(posts, ["inondation"], 3600)[0]
        activity = np.array([1 if 12 <= h < 24 else 0 for h in range(48)])
        assert learned["inondation"] == pytest.approx(pearson(series.counts, activity))
        assert learned["inondation"] > 0.95

    def test_seed_with_zero_occurrences_still_in_terms(self):
        posts = [post(f"p{i}", i * 30, "calm quiet town") for i in range(60)]
        d = build_dictionary(posts, [event("e1", 0, 1)], "en", ["ghostterm"], min_freq=5)
        assert "ghostterm" in d.terms

    def test_low_frequency_excluded(self):
        # 10 occurrences < min_freq 50, perfectly correlated or not
        posts = []
        for i in range(10):
            posts.append(post(f"r{i}", i * 30, "rareword flood"))
        for i in range(60):
            posts.append(post(f"c{i}", i * 7, "common words here"))
        d = build_dictionary(posts, [event("e1", 0, 5)], "en", [], k=10, min_freq=50)
        assert all(term != "rareword" for term, _ in d.learned)

    def test_learned_terms_satisfy_thresholds(self, bench_corpus):
        d = build_dictionary(bench_corpus.posts, bench_corpus.events, "en", ["flood"], k=25)
        freq = {}
        for p in bench_corpus.posts:
            if p.lang != "en":
                continue
            from geopulse.textutil import token_set
            for tok in token_set(p.text):
                freq[tok] = freq.get(tok, 0) + 1
        for term, score in d.learned:
            assert score >= trigger.DEFAULT_MIN_CORR
            assert freq[term] >= trigger.DEFAULT_MIN_FREQ
        scores = [s for _, s in d.learned]
        assert scores == sorted(scores, reverse=True)
        assert len(d.learned) <= 25


def toy_windows(n=40, w=4, terms=("a", "b"), seed=5):
    """Separable toy set: label = counts of 'a' high in final bucket."""
    rng = Rng(seed)
    windows = []
    for i in range(n):
        label = i % 2 == 0
        m = np.zeros((w, len(terms)))
        for r in range(w):
            m[r, 0] = np.log1p(8 + rng.randbelow(4)) if label else np.log1p(rng.randbelow(2))
            m[r, 1] = np.log1p(rng.randbelow(3))
        windows.append(FeatureWindow(
            terms=list(terms), matrix=m, label=label,
            start=T0 + timedelta(hours=i), end=T0 + timedelta(hours=i + w),
        ))
    return windows


class TestMakeWindows:
    def series_fixture(self, hours=30):
        posts = [post(f"p{h}", h * 60, "flood" if 10 <= h < 14 else "calm")
                 for h in range(hours)]
        span = (T0, T0 + timedelta(hours=hours))
        return bucket_term_counts(posts, ["flood", "calm"], 3600, span)

    def test_exactly_one_window_when_w_equals_length(self):
        series = self.series_fixture(24)
        windows = make_windows(series, [event("e1", 10, 14)], 24)
        assert len(windows) == 1

    def test_zero_count_gives_zero_feature(self):
        series = self.series_fixture(24)
        windows = make_windows(series, [event("e1", 10, 14)], 24)
        assert windows[0].matrix[0, 0] == 0.0  # log(1 + 0)

    def test_label_true_inside_event(self):
        series = self.series_fixture(30)
        windows = make_windows(series, [event("e1", 10, 14)], 6)
        by_final = {w.end: w for w in windows}
        inside = by_final[T0 + timedelta(hours=13)]
        outside = by_final[T0 + timedelta(hours=20)]
        assert inside.label and inside.event_id == "e1"
        assert not outside.label

    def test_w_too_large_errors(self):
        with pytest.raises(ValueError, match="exceeds"):
            make_windows(self.series_fixture(10), [], 24)


class TestTrainPredict:
    def test_zero_weight_model_predicts_half(self):
        windows = toy_windows()
        model = train(windows, epochs=0)
        assert model.weights.sum() == 0.0
        assert predict(model, windows[0]) == pytest.approx(0.5)

    def test_separable_set_reaches_perfect_accuracy(self):
        windows = toy_windows()
        model = train(windows)
        correct = sum((predict(model, w) >= 0.5) == w.label for w in windows)
        assert correct == len(windows)

    def test_loss_non_increasing(self):
        model = train(toy_windows())
        diffs = np.diff(model.loss_history)
        assert (diffs <= 1e-12).all()

    def test_single_class_errors(self):
        windows = [w for w in toy_windows() if w.label]
        with pytest.raises(ValueError, match="single class"):
            train(windows)

    def test_gradient_matches_central_differences(self):
        rng = Rng(17)
        for _ in range(10):
            n, d = 6 + rng.randbelow(5), 4 + rng.randbelow(4)
            x = np.array([[rng.uniform() for _ in range(d)] for _ in range(n)])
            y = np.array([float(rng.randbelow(2)) for _ in range(n)])
            w = np.array([rng.uniform() - 0.5 for _ in range(d + 1)])
            _, grad = loss_and_grad(w, x, y, 1e-3)
            h = 1e-5
            for j in range(d + 1):
                e = np.zeros(d + 1)
                e[j] = h
                hi, _ = loss_and_grad(w + e, x, y, 1e-3)
                lo, _ = loss_and_grad(w - e, x, y, 1e-3)
                fd = (hi - lo) / (2 * h)
                denom = max(abs(grad[j]), abs(fd), 1e-10)
                assert abs(grad[j] - fd) / denom <= 1e-6

    def test_predict_monotone_in_threshold(self):
        windows = toy_windows()
        model = train(windows, epochs=50)
        probs = [predict(model, w) for w in windows]
        fired_06 = {i for i, p in enumerate(probs) if p >= 0.6}
        fired_03 = {i for i, p in enumerate(probs) if p >= 0.3}
        assert fired_06 <= fired_03


class TestLoeo:
    def test_micro_average_derived(self):
        folds = [FoldResult("a", tp=3, fp=1, fn=1, tn=0),
                 FoldResult("b", tp=1, fp=3, fn=0, tn=0)]
        precision, recall = micro_average(folds)
        assert precision == pytest.approx(0.5)
        assert recall == pytest.approx(0.8)

    def test_three_events_three_folds(self, bench_corpus):
        d = Dictionary(language="en", seeds=["flood"], learned=[("rescue", 0.8)], k=2)
        events = bench_corpus.events[:3]
        result = evaluate_loeo(bench_corpus.posts, events, d, epochs=60)
        assert len(result.folds) == 3
        assert [f.event_id for f in result.folds] == [e.event_id for e in events]

    def test_fewer_than_two_events_errors(self, bench_corpus):
        d = Dictionary(language="en", seeds=["flood"], learned=[], k=1)
        with pytest.raises(ValueError, match="at least 2"):
            evaluate_loeo(bench_corpus.posts, bench_corpus.events[:1], d)

    def test_perfect_fold_metrics(self):
        fold = FoldResult("e", tp=10, fp=0, fn=0, tn=5)
        assert fold.precision == 1.0 and fold.recall == 1.0
