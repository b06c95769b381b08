"""Image-quality filter primitives: dHash dedup, photo scoring, scorer bindings.

The perceptual hash is a 64-bit dHash: area-mean downsample to a 9-wide,
8-tall grid, then one bit per adjacent-column comparison. Duplicate removal
keeps the earliest member of each near-duplicate group.
"""

from __future__ import annotations

import base64
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import httpx
import numpy as np

from .model import MediaRef, Post
from .pgm import LuminanceImage, encode_pgm

log = logging.getLogger(__name__)

HASH_BITS = 64
BUILTIN_SCORERS = ("photo-entropy", "nsfw-stub", "dhash-dedup")


def _area_reduce(arr: np.ndarray, m: int, axis: int) -> np.ndarray:
    """Exact area-mean resample of one axis down to m cells.

    Cell k averages the source interval [k*n/m, (k+1)*n/m); fractional
    boundaries weight edge pixels by their covered fraction.
    """
    a = np.moveaxis(np.asarray(arr, dtype=np.float64), axis, -1)
    n = a.shape[-1]
    cs = np.concatenate([np.zeros(a.shape[:-1] + (1,)), np.cumsum(a, axis=-1)], axis=-1)
    bounds = np.arange(m + 1) * (n / m)
    idx = np.floor(bounds).astype(np.int64)
    frac = bounds - idx
    at = cs[..., idx] + frac * a[..., np.minimum(idx, n - 1)]
    out = (at[..., 1:] - at[..., :-1]) * (m / n)
    return np.moveaxis(out, -1, axis)


def dhash(img: LuminanceImage) -> int:
    """64-bit dHash; bit (r, c) is set iff cell(r,c) > cell(r,c+1), strictly.

    Bits are scanned row-major with the first comparison in the most
    significant position.
    """
    grid = _area_reduce(_area_reduce(img.as_array(), 8, axis=0), 9, axis=1)
    bits = grid[:, :-1] > grid[:, 1:]
    value = 0
    for b in bits.reshape(-1):
        value = (value << 1) | int(b)
    return value


def hamming(a: int, b: int) -> int:
    return bin(a ^ b).count("1")


def _popcounts(words: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(words).astype(np.int64)
    return np.unpackbits(words.view(np.uint8)).reshape(len(words), 8 * 8).sum(axis=1)


@dataclass
class Removal:
    removed_id: str
    matched_kept_id: str
    distance: int


@dataclass
class DedupResult:
    kept: list[Post]
    removed: list[Removal]
    flagged: list[str]  # ids passed through because media failed to decode


ImageLoader = Callable[[MediaRef], "LuminanceImage | None"]


def dedup(
    items: Iterable[Post],
    load_image: ImageLoader,
    max_distance: int = 10,
) -> DedupResult:
    """Remove items whose images near-duplicate an already-kept image.

    Items are processed in (created_at, id) order, so the earliest member
    of each group survives. Items with an undecodable image are flagged and
    passed through rather than dropped.
    """
    kept_hashes = np.zeros(0, dtype=np.uint64)
    kept_owner: list[str] = []
    result = DedupResult(kept=[], removed=[], flagged=[])
    for post in sorted(items, key=lambda p: (p.created_at, p.id)):
        hashes: list[int] = []
        decode_failed = False
        for ref in post.media:
            img = None
            try:
                img = load_image(ref)
            except Exception:
                img = None
            if img is None:
                decode_failed = True
            else:
                hashes.append(dhash(img))
        match: Removal | None = None
        if not decode_failed:
            for h in hashes:
                if len(kept_hashes) == 0:
                    break
                dists = _popcounts(kept_hashes ^ np.uint64(h))
                hits = np.flatnonzero(dists <= max_distance)
                if hits.size:
                    first = int(hits[0])
                    match = Removal(post.id, kept_owner[first], int(dists[first]))
                    break
        if match is not None:
            result.removed.append(match)
            continue
        if decode_failed:
            result.flagged.append(post.id)
        result.kept.append(post)
        if hashes:
            kept_hashes = np.concatenate(
                [kept_hashes, np.array(hashes, dtype=np.uint64)]
            )
            kept_owner.extend([post.id] * len(hashes))
    return result


def photo_score(img: LuminanceImage) -> float:
    """Shannon entropy of the 256-bin luminance histogram, in bits / 8."""
    counts = np.bincount(np.frombuffer(img.pixels, dtype=np.uint8), minlength=256)
    p = counts[counts > 0] / counts.sum()
    entropy = float(-(p * np.log2(p)).sum())
    return entropy / 8.0


REJECT_ITEM = "reject-item"


@dataclass(frozen=True)
class ScorerBinding:
    scorer_id: str
    kind: str = "builtin"  # builtin | external
    endpoint: str | None = None
    timeout_ms: int = 1000
    default_score_on_failure: "float | str" = 0.5

    def __post_init__(self):
        if self.kind not in ("builtin", "external"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.kind == "external" and not self.endpoint:
            raise ValueError(f"external scorer {self.scorer_id!r} needs an endpoint")
        policy = self.default_score_on_failure
        if isinstance(policy, str):
            if policy != REJECT_ITEM:
                raise ValueError(f"bad failure policy {policy!r}")
        elif not 0.0 <= float(policy) <= 1.0:
            raise ValueError("default_score_on_failure outside [0, 1]")


@dataclass
class ScoreResult:
    score: float | None
    scorer_id: str = ""  # provenance of the recorded score
    failed: bool = False  # transport/timeout/protocol failure occurred
    flagged: bool = False  # pass item through unscored
    reject: bool = False  # failure policy demands dropping the item
    detail: str = ""


def score_with(
    binding: ScorerBinding,
    item: Post,
    images: Sequence[LuminanceImage] = (),
    client: "httpx.Client | None" = None,
) -> ScoreResult:
    """Score one item. Builtins run in-process; external scorers over HTTP."""
    sid = binding.scorer_id
    if binding.kind == "builtin":
        if sid == "nsfw-stub":
            return ScoreResult(score=0.0, scorer_id=sid)
        if sid in ("photo-entropy", "dhash-dedup"):
            if not images:
                return ScoreResult(score=None, scorer_id=sid, flagged=True,
                                   detail="no decodable media")
            return ScoreResult(score=max(photo_score(img) for img in images), scorer_id=sid)
        return ScoreResult(score=None, scorer_id=sid, flagged=True,
                           detail=f"unknown builtin {sid!r}")

    body = {
        "item_id": item.id,
        "media": base64.b64encode(encode_pgm(images[0])).decode("ascii") if images else "",
        "text": item.text,
    }
    try:
        owns = client is None
        cl = client or httpx.Client()
        try:
            resp = cl.post(binding.endpoint, json=body, timeout=binding.timeout_ms / 1000.0)
        finally:
            if owns:
                cl.close()
        resp.raise_for_status()
        score = float(resp.json()["score"])
    except Exception as exc:
        log.warning("scorer %s failed on %s: %s", sid, item.id, exc)
        return _apply_failure_policy(binding, str(exc))
    if not 0.0 <= score <= 1.0:
        log.warning("scorer %s protocol error on %s: score %r", sid, item.id, score)
        return ScoreResult(score=None, scorer_id=sid, failed=True, flagged=True,
                           detail=f"score {score} outside [0, 1]")
    return ScoreResult(score=score, scorer_id=sid)


def _apply_failure_policy(binding: ScorerBinding, detail: str) -> ScoreResult:
    if binding.default_score_on_failure == REJECT_ITEM:
        return ScoreResult(score=None, scorer_id=binding.scorer_id, failed=True,
                           reject=True, detail=detail)
    return ScoreResult(score=float(binding.default_score_on_failure),
                       scorer_id=binding.scorer_id, failed=True, detail=detail)


KEEP_IF_GE = "keep-if-ge"
KEEP_IF_LE = "keep-if-le"


def threshold_filter(scores: Sequence[float], threshold: float, direction: str = KEEP_IF_GE) -> list[bool]:
    if direction == KEEP_IF_GE:
        return [s >= threshold for s in scores]
    if direction == KEEP_IF_LE:
        return [s <= threshold for s in scores]
    raise ValueError(f"unknown direction {direction!r}")
