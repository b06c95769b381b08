#!/usr/bin/env python3
"""Seed a service data root so `geopulse serve` works out of the box.

Creates corpora/bench (the 6-event benchmark corpus) and a learned
dictionary at dictionaries/base.json.

Usage: python scripts/seed_service_root.py DATA_ROOT
"""

import argparse
import json
from pathlib import Path

from geopulse import synth
from geopulse import trigger as tg
from geopulse.corpus import Corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("data_root", type=Path)
    args = parser.parse_args()
    corpus_dir = args.data_root / "corpora" / "bench"
    if not (corpus_dir / "posts.jsonl").exists():
        synth.generate(synth.benchmark_spec(), corpus_dir)
    corpus = Corpus(corpus_dir)
    dictionary = tg.build_dictionary(corpus.posts, corpus.events, "en", ["flood"], k=2)
    dict_dir = args.data_root / "dictionaries"
    dict_dir.mkdir(parents=True, exist_ok=True)
    (dict_dir / "base.json").write_text(json.dumps(dictionary.to_json(), indent=2) + "\n")
    print(f"seeded {args.data_root}: corpus 'bench' ({len(corpus.posts)} posts), "
          f"dictionary 'base' ({dictionary.terms})")
    print(f"start the service with: geopulse serve --port 8080 --data-root {args.data_root}")


if __name__ == "__main__":
    main()
