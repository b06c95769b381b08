"""Event-onset detection from keyword time series.

Term usage is bucketed into hourly counts, candidate terms are scored by
correlating their series with a binary event-activity series, and feature
windows over the resulting dictionary feed an L2-regularized logistic
regression trained by deterministic full-batch gradient descent. Evaluation
is leave-one-event-out: each fold holds out the windows overlapping one
event plus an equal number of nearest-in-time background windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .model import EventRecord, Post
from .textutil import token_set

DEFAULT_BUCKET = 3600
DEFAULT_WINDOW = 24
DEFAULT_K = 25
DEFAULT_MIN_FREQ = 50
DEFAULT_MIN_CORR = 0.3
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 500
DEFAULT_L2 = 1e-3
DEFAULT_THRESHOLD = 0.5
DEFAULT_NEG_RATIO = 1.0


@dataclass
class TermSeries:
    term: str
    bucket_width: int
    origin: datetime  # aligned to bucket_width
    counts: np.ndarray  # dense non-negative ints

    def bucket_start(self, index: int) -> datetime:
        return self.origin + timedelta(seconds=index * self.bucket_width)


@dataclass
class Dictionary:
    language: str
    seeds: list[str]
    learned: list[tuple[str, float]]  # sorted by score, descending
    k: int

    @property
    def terms(self) -> list[str]:
        """Seeds first, then learned terms not already seeded."""
        seen = dict.fromkeys(self.seeds)
        for term, _ in self.learned:
            seen.setdefault(term)
        return list(seen)

    def to_json(self) -> dict:
        return {
            "language": self.language,
            "seeds": self.seeds,
            "learned": [[t, s] for t, s in self.learned],
            "k": self.k,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Dictionary":
        return cls(
            language=obj["language"],
            seeds=list(obj["seeds"]),
            learned=[(t, float(s)) for t, s in obj["learned"]],
            k=int(obj["k"]),
        )


@dataclass
class FeatureWindow:
    terms: list[str]
    matrix: np.ndarray  # W x len(terms), log(1 + count)
    label: bool
    start: datetime  # first bucket start
    end: datetime  # end of the final bucket
    event_id: str | None = None


@dataclass
class TriggerModel:
    terms: list[str]
    window: int
    weights: np.ndarray  # W * len(terms) + 1 (bias last)
    scaling: list[tuple[float, float]]  # per-term (min, max) of log counts
    learning_rate: float
    epochs: int
    l2: float
    loss_history: list[float] = field(default_factory=list)


def align_to_bucket(ts: datetime, bucket_width: int) -> datetime:
    epoch = int(ts.timestamp())
    return datetime.fromtimestamp(epoch - epoch % bucket_width, tz=timezone.utc)


def bucket_term_counts(
    posts: "list[Post]",
    terms: "list[str]",
    bucket_width: int = DEFAULT_BUCKET,
    span: "tuple[datetime, datetime] | None" = None,
) -> list[TermSeries]:
    """Per-bucket count of posts whose folded token set contains each term.

    A post counts at most once per term per bucket regardless of how many
    times the term repeats in its text. Posts outside the span are ignored.
    """
    if not terms:
        raise ValueError("empty dictionary: nothing to count")
    if span is None:
        if not posts:
            raise ValueError("span required for an empty corpus")
        lo = min(p.created_at for p in posts)
        hi = max(p.created_at for p in posts)
        span = (align_to_bucket(lo, bucket_width),
                align_to_bucket(hi, bucket_width) + timedelta(seconds=bucket_width))
    start, end = span
    if int(start.timestamp()) % bucket_width or int(end.timestamp()) % bucket_width:
        raise ValueError("span must be aligned to the bucket width")
    n = (int(end.timestamp()) - int(start.timestamp())) // bucket_width
    if n < 0:
        raise ValueError("span end precedes start")
    counts = {t: np.zeros(n, dtype=np.int64) for t in terms}
    term_set = set(terms)
    t0 = int(start.timestamp())
    for post in posts:
        idx = (post.epoch - t0) // bucket_width
        if not 0 <= idx < n:
            continue
        for term in token_set(post.text) & term_set:
            counts[term][idx] += 1
    return [TermSeries(term=t, bucket_width=bucket_width, origin=start, counts=counts[t])
            for t in terms]


def pearson(x, y) -> float:
    """Pearson correlation; constant input is defined to correlate 0."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0.0:
        return 0.0
    return float(np.clip((xc * yc).sum() / denom, -1.0, 1.0))


def event_activity(
    events: "list[EventRecord]",
    origin: datetime,
    n_buckets: int,
    bucket_width: int,
) -> np.ndarray:
    """1 where any event overlaps the bucket interval, else 0."""
    out = np.zeros(n_buckets, dtype=np.int64)
    t0 = int(origin.timestamp())
    for ev in events:
        s, e = int(ev.start.timestamp()), int(ev.end.timestamp())
        first = max(0, (s - t0) // bucket_width)
        last = min(n_buckets, -(-(e - t0) // bucket_width))  # ceil
        if last > first:
            out[first:last] = 1
    return out


def build_dictionary(
    posts: "list[Post]",
    events: "list[EventRecord]",
    language: str,
    seeds: "list[str]",
    k: int = DEFAULT_K,
    min_freq: int = DEFAULT_MIN_FREQ,
    min_corr: float = DEFAULT_MIN_CORR,
    bucket_width: int = DEFAULT_BUCKET,
) -> Dictionary:
    """Learn up to k terms whose hourly series track event activity.

    Candidates are tokens of `language` posts occurring in at least
    min_freq posts; each is scored with pearson against the binary
    event-activity series. Ties break lexicographically. Seeds are always
    part of the final term set, learned or not.
    """
    lang_posts = [p for p in posts if p.lang == language]
    if not lang_posts:
        raise ValueError(f"corpus has no posts in language {language!r}")
    if not events:
        raise ValueError("events required to score candidate terms")

    freq: dict[str, int] = {}
    for p in lang_posts:
        for tok in token_set(p.text):
            freq[tok] = freq.get(tok, 0) + 1
    candidates = sorted(t for t, c in freq.items() if c >= min_freq)

    if not candidates:
        return Dictionary(language=language, seeds=list(seeds), learned=[], k=k)

    series = bucket_term_counts(lang_posts, candidates, bucket_width)
    activity = event_activity(events, series[0].origin, len(series[0].counts), bucket_width)
    scored = []
    for s in series:
        r = pearson(s.counts, activity)
        if r >= min_corr:
            scored.append((s.term, r))
    scored.sort(key=lambda ts: (-ts[1], ts[0]))
    return Dictionary(language=language, seeds=list(seeds), learned=scored[:k], k=k)


def make_windows(
    series: "list[TermSeries]",
    events: "list[EventRecord]",
    window: int = DEFAULT_WINDOW,
) -> list[FeatureWindow]:
    """One window per bucket index t >= W-1 over a shared bucket grid.

    Features are log(1 + count); min-max scaling happens at train time with
    training-fold bounds. The label is true iff some event is active during
    the window's final bucket.
    """
    if not series:
        raise ValueError("no series")
    n = len(series[0].counts)
    bw = series[0].bucket_width
    origin = series[0].origin
    for s in series:
        if len(s.counts) != n or s.bucket_width != bw or s.origin != origin:
            raise ValueError("series do not share a bucket grid")
    if window > n:
        raise ValueError(f"window {window} exceeds series length {n}")
    counts = np.stack([s.counts for s in series], axis=1)  # n x T
    feats = np.log1p(counts.astype(np.float64))
    activity = event_activity(events, origin, n, bw)

    def final_event(t: int) -> "str | None":
        b_start = origin + timedelta(seconds=t * bw)
        b_end = b_start + timedelta(seconds=bw)
        for ev in events:
            if ev.start < b_end and ev.end > b_start:
                return ev.event_id
        return None

    windows = []
    terms = [s.term for s in series]
    for t in range(window - 1, n):
        windows.append(FeatureWindow(
            terms=terms,
            matrix=feats[t - window + 1 : t + 1],
            label=bool(activity[t]),
            start=origin + timedelta(seconds=(t - window + 1) * bw),
            end=origin + timedelta(seconds=(t + 1) * bw),
            event_id=final_event(t) if activity[t] else None,
        ))
    return windows


def _scale_matrix(matrix: np.ndarray, scaling: "list[tuple[float, float]]") -> np.ndarray:
    out = np.empty_like(matrix)
    for j, (lo, hi) in enumerate(scaling):
        if hi > lo:
            out[:, j] = (matrix[:, j] - lo) / (hi - lo)
        else:
            out[:, j] = 0.0
    return out


def _design(windows: "list[FeatureWindow]", scaling) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([_scale_matrix(w.matrix, scaling).reshape(-1) for w in windows])
    y = np.array([1.0 if w.label else 0.0 for w in windows])
    return x, y


def loss_and_grad(
    weights: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy plus (l2/2)*||w||^2 over non-bias weights."""
    w, b = weights[:-1], weights[-1]
    z = x @ w + b
    # log(1 + exp(z)) computed stably
    log1pexp = np.logaddexp(0.0, z)
    loss = float((log1pexp - y * z).mean() + 0.5 * l2 * (w @ w))
    p = 1.0 / (1.0 + np.exp(-z))
    resid = p - y
    grad = np.empty_like(weights)
    grad[:-1] = x.T @ resid / len(y) + l2 * w
    grad[-1] = resid.mean()
    return loss, grad


def train(
    windows: "list[FeatureWindow]",
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    l2: float = DEFAULT_L2,
) -> TriggerModel:
    """Full-batch gradient descent from zero init; deterministic."""
    labels = {w.label for w in windows}
    if labels != {True, False}:
        raise ValueError(
            "training set contains a single class; provide both positive and "
            "negative windows (more data or a wider span)"
        )
    terms = windows[0].terms
    wlen = windows[0].matrix.shape[0]
    stacked = np.stack([w.matrix for w in windows])  # n x W x T
    scaling = [(float(stacked[:, :, j].min()), float(stacked[:, :, j].max()))
               for j in range(stacked.shape[2])]
    x, y = _design(windows, scaling)
    weights = np.zeros(x.shape[1] + 1)
    history = []
    for _ in range(epochs):
        loss, grad = loss_and_grad(weights, x, y, l2)
        history.append(loss)
        weights = weights - learning_rate * grad
    history.append(loss_and_grad(weights, x, y, l2)[0])
    return TriggerModel(
        terms=list(terms), window=wlen, weights=weights, scaling=scaling,
        learning_rate=learning_rate, epochs=epochs, l2=l2, loss_history=history,
    )


def predict(model: TriggerModel, window: FeatureWindow) -> float:
    x = _scale_matrix(window.matrix, model.scaling).reshape(-1)
    z = float(x @ model.weights[:-1] + model.weights[-1])
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class FoldResult:
    event_id: str
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0


@dataclass
class LoeoResult:
    folds: list[FoldResult]
    micro_precision: float
    micro_recall: float


def micro_average(folds: "list[FoldResult]") -> tuple[float, float]:
    tp = sum(f.tp for f in folds)
    fp = sum(f.fp for f in folds)
    fn = sum(f.fn for f in folds)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def _overlaps(w: FeatureWindow, ev: EventRecord) -> bool:
    return ev.start < w.end and ev.end > w.start


def evaluate_loeo(
    posts: "list[Post]",
    events: "list[EventRecord]",
    dictionary: Dictionary,
    window: int = DEFAULT_WINDOW,
    bucket_width: int = DEFAULT_BUCKET,
    neg_ratio: float = DEFAULT_NEG_RATIO,
    threshold: float = DEFAULT_THRESHOLD,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    l2: float = DEFAULT_L2,
) -> LoeoResult:
    """Leave-one-event-out evaluation of the trigger classifier.

    Fold test set: every window overlapping the held-out event's span plus
    neg_ratio background windows (overlapping no event at all) nearest in
    time to the event; training uses all remaining windows.
    """
    if len(events) < 2:
        raise ValueError("leave-one-event-out needs at least 2 events")
    series = bucket_term_counts(posts, dictionary.terms, bucket_width)
    windows = make_windows(series, events, window)

    background = [i for i, w in enumerate(windows)
                  if not any(_overlaps(w, ev) for ev in events)]
    folds = []
    for ev in events:
        test_idx = {i for i, w in enumerate(windows) if _overlaps(w, ev)}
        n_pos = sum(1 for i in test_idx if windows[i].label)
        mid = ev.start + (ev.end - ev.start) / 2
        ranked = sorted(
            (i for i in background if i not in test_idx),
            key=lambda i: (abs((windows[i].end - mid).total_seconds()), i),
        )
        test_idx.update(ranked[: int(round(neg_ratio * n_pos))])

        train_windows = [w for i, w in enumerate(windows) if i not in test_idx]
        model = train(train_windows, learning_rate=learning_rate, epochs=epochs, l2=l2)
        tp = fp = fn = tn = 0
        for i in sorted(test_idx):
            w = windows[i]
            fired = predict(model, w) >= threshold
            if w.label:
                tp, fn = (tp + 1, fn) if fired else (tp, fn + 1)
            else:
                fp, tn = (fp + 1, tn) if fired else (fp, tn + 1)
        folds.append(FoldResult(event_id=ev.event_id, tp=tp, fp=fp, fn=fn, tn=tn))
    precision, recall = micro_average(folds)
    return LoeoResult(folds=folds, micro_precision=precision, micro_recall=recall)
