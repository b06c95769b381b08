#!/usr/bin/env python3
"""Generate the bundled synthetic corpora into a target directory.

Usage: python scripts/make_benchmark_corpus.py OUT_DIR [--which bench|dedup|throughput]
"""

import argparse
import json
from pathlib import Path

from geopulse import synth

SPECS = {
    "bench": synth.benchmark_spec,
    "dedup": synth.dedup_spec,
    "throughput": synth.throughput_spec,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--which", choices=sorted(SPECS), default="bench")
    args = parser.parse_args()
    spec = SPECS[args.which]()
    info = synth.generate(spec, args.out_dir)
    print(json.dumps({k: info[k] for k in ("posts", "duplicates", "towns", "events")}, indent=2))


if __name__ == "__main__":
    main()
