"""Corpus directory access: posts plus the reference registries beside them.

Everything is loaded once and treated as immutable; decoded images are
cached per path since several filter components share them.
"""

from __future__ import annotations

from pathlib import Path

from .loaders import (
    load_events,
    load_gazetteer,
    load_impact,
    load_regions,
    load_sample,
    parse_posts,
)
from .model import MediaRef, Post
from .pgm import LuminanceImage, read_pgm


class Corpus:
    def __init__(self, path, exclude_reposts: bool = True):
        self.path = Path(path)
        with open(self.path / "posts.jsonl", "rb") as fh:
            self.posts, self.diagnostics = parse_posts(fh, exclude_reposts=exclude_reposts)
        self.media_dir = self.path / "media"
        self._gazetteer = None
        self._events = None
        self._sample = None
        self._regions = None
        self._impact = None
        self._images: dict[str, LuminanceImage | None] = {}

    @property
    def post_ids(self) -> set[str]:
        return {p.id for p in self.posts}

    @property
    def gazetteer(self):
        if self._gazetteer is None:
            self._gazetteer = load_gazetteer(self.path / "gazetteer.csv")
        return self._gazetteer

    @property
    def events(self):
        if self._events is None:
            self._events = load_events(self.path / "events.csv")
        return self._events

    @property
    def sample(self):
        if self._sample is None:
            self._sample = load_sample(self.path / "sample.csv", self.post_ids)
        return self._sample

    @property
    def regions(self):
        if self._regions is None:
            self._regions = load_regions(self.path / "regions.csv")
        return self._regions

    @property
    def impact(self):
        if self._impact is None:
            self._impact = load_impact(self.path / "impact.csv")
        return self._impact

    def load_image(self, ref: MediaRef) -> LuminanceImage | None:
        """Decode one media file; None when missing or undecodable."""
        if ref.path not in self._images:
            try:
                self._images[ref.path] = read_pgm(self.media_dir / ref.path)
            except Exception:
                self._images[ref.path] = None
        return self._images[ref.path]

    def images_for(self, post: Post) -> list[LuminanceImage]:
        out = []
        for ref in post.media:
            img = self.load_image(ref)
            if img is not None:
                out.append(img)
        return out
