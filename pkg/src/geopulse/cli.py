"""Command-line entry points (`geopulse <subcommand>`)."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import aggregate as agg
from . import pipeline as pl
from . import synth as sy
from . import trigger as tg
from .corpus import Corpus
from .geo import resolve_post
from .loaders import load_gazetteer, load_impact, load_regions, load_sample
from .model import iso


@click.group()
def main():
    """Social-media event sensing and filtering engine."""


@main.command("synth")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def synth_cmd(spec_path, out_dir):
    """Generate a deterministic synthetic corpus from a spec JSON."""
    spec = sy.SynthSpec.from_json(json.loads(Path(spec_path).read_text()))
    info = sy.generate(spec, out_dir)
    click.echo(json.dumps({k: info[k] for k in ("posts", "duplicates", "towns", "events")}))


@main.command("dict-build")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--language", required=True)
@click.option("--seed", "seeds", multiple=True, required=True)
@click.option("--k", default=tg.DEFAULT_K, show_default=True)
@click.option("--min-freq", default=tg.DEFAULT_MIN_FREQ, show_default=True)
@click.option("--min-corr", default=tg.DEFAULT_MIN_CORR, show_default=True)
@click.option("--out", "out_path", type=click.Path())
def dict_build(corpus_dir, language, seeds, k, min_freq, min_corr, out_path):
    """Learn a term dictionary from event-correlated token series."""
    corpus = Corpus(corpus_dir)
    dictionary = tg.build_dictionary(
        corpus.posts, corpus.events, language, list(seeds),
        k=k, min_freq=min_freq, min_corr=min_corr,
    )
    payload = json.dumps(dictionary.to_json(), indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(payload)
    click.echo(payload, nl=False)


def _load_dictionary(path) -> tg.Dictionary:
    return tg.Dictionary.from_json(json.loads(Path(path).read_text()))


@main.command("trigger-train")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--window", default=tg.DEFAULT_WINDOW, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def trigger_train(corpus_dir, dict_path, window, out_path):
    """Train the trigger classifier on the whole corpus."""
    corpus = Corpus(corpus_dir)
    dictionary = _load_dictionary(dict_path)
    series = tg.bucket_term_counts(corpus.posts, dictionary.terms)
    windows = tg.make_windows(series, corpus.events, window)
    model = tg.train(windows)
    Path(out_path).write_text(json.dumps({
        "terms": model.terms,
        "window": model.window,
        "weights": list(model.weights),
        "scaling": [list(s) for s in model.scaling],
        "learning_rate": model.learning_rate,
        "epochs": model.epochs,
        "l2": model.l2,
        "final_loss": model.loss_history[-1],
    }, indent=2) + "\n")
    click.echo(f"trained on {len(windows)} windows; final loss {model.loss_history[-1]:.6f}")


@main.command("trigger-eval")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--window", default=tg.DEFAULT_WINDOW, show_default=True)
@click.option("--threshold", default=tg.DEFAULT_THRESHOLD, show_default=True)
def trigger_eval(corpus_dir, dict_path, window, threshold):
    """Leave-one-event-out evaluation; prints per-fold and micro metrics."""
    corpus = Corpus(corpus_dir)
    dictionary = _load_dictionary(dict_path)
    result = tg.evaluate_loeo(
        corpus.posts, corpus.events, dictionary, window=window, threshold=threshold
    )
    click.echo(json.dumps({
        "folds": [
            {"event_id": f.event_id, "tp": f.tp, "fp": f.fp, "fn": f.fn, "tn": f.tn,
             "precision": f.precision, "recall": f.recall}
            for f in result.folds
        ],
        "micro_precision": result.micro_precision,
        "micro_recall": result.micro_recall,
    }, indent=2))


@main.command("geocode")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--gazetteer", "gazetteer_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path())
def geocode(corpus_dir, gazetteer_path, out_path):
    """Resolve post locations; emits one JSON line per resolved post."""
    corpus = Corpus(corpus_dir)
    gazetteer = load_gazetteer(gazetteer_path) if gazetteer_path else corpus.gazetteer
    sink = open(out_path, "w", encoding="utf-8") if out_path else sys.stdout
    try:
        for post in sorted(corpus.posts, key=lambda p: (p.created_at, p.id)):
            res = resolve_post(post, gazetteer)
            if res is None:
                continue
            sink.write(json.dumps({
                "post_id": res.post_id,
                "places": [
                    {"entry_id": p.entry_id, "lat": p.lat, "lon": p.lon,
                     "provenance": p.provenance}
                    for p in res.places
                ],
                "objective": res.objective,
                "method": res.method,
            }) + "\n")
    finally:
        if out_path:
            sink.close()


def _read_config(path) -> pl.PipelineConfig:
    return pl.parse_config(Path(path).read_bytes())


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def run_cmd(config_path, corpus_dir, out_dir):
    """Run a pipeline over a corpus and persist the run record."""
    config = _read_config(config_path)
    corpus = Corpus(corpus_dir)
    record = pl.run(config, corpus)
    metrics = pl.evaluate(record, corpus.sample) if (corpus.path / "sample.csv").exists() else None
    pl.save_run(record, out_dir, metrics)
    click.echo(json.dumps({
        "run_id": record.run_id,
        "total": record.total,
        "kept": len(record.kept_ids),
        "reduction_rate": record.reduction_rate,
    }))


@main.command("evaluate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--sample", "sample_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path())
def evaluate_cmd(config_path, corpus_dir, sample_path, out_dir):
    """Run and score a pipeline against a labeled sample."""
    config = _read_config(config_path)
    corpus = Corpus(corpus_dir)
    sample = load_sample(sample_path, corpus.post_ids) if sample_path else corpus.sample
    record = pl.run(config, corpus)
    metrics = pl.evaluate(record, sample)
    if out_dir:
        pl.save_run(record, out_dir, metrics)
    click.echo(json.dumps(metrics.to_json(), indent=2))


@main.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--sample", "sample_path", type=click.Path(exists=True))
@click.option("--component", "component_id", required=True)
@click.option("--param", default="threshold", show_default=True)
@click.option("--grid", "grid_csv", help="comma-separated values; default 0..1 step 0.05")
@click.option("--out", "out_path", type=click.Path())
def sweep_cmd(config_path, corpus_dir, sample_path, component_id, param, grid_csv, out_path):
    """Metric response curve for one component parameter."""
    config = _read_config(config_path)
    corpus = Corpus(corpus_dir)
    sample = load_sample(sample_path, corpus.post_ids) if sample_path else corpus.sample
    grid = [float(v) for v in grid_csv.split(",")] if grid_csv else None
    rows = pl.sweep(config, corpus, sample, component_id, param, grid)
    payload = json.dumps({"rows": [r.to_json() for r in rows]}, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(payload)
    click.echo(payload, nl=False)


@main.command("optimize")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--profile", "profile_dir", type=click.Path(exists=True),
              help="run directory providing measured costs and selectivities")
@click.option("--out", "out_path", type=click.Path())
def optimize_cmd(config_path, profile_dir, out_path):
    """Reorder the pipeline to minimize expected per-item cost."""
    config = _read_config(config_path)
    profile = pl.load_run(profile_dir).profile() if profile_dir else None
    try:
        result = pl.optimize_order(config, profile)
    except pl.OptimizeError as exc:
        raise click.ClickException(str(exc))
    if out_path:
        Path(out_path).write_bytes(pl.serialize_config(result.config))
    click.echo(json.dumps(result.to_json(), indent=2))


@main.command("aggregate")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--regions", "regions_path", type=click.Path(exists=True))
@click.option("--impact", "impact_path", type=click.Path(exists=True))
@click.option("--bucket", default="day", type=click.Choice(["day", "hour"]), show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def aggregate_cmd(run_dir, corpus_dir, regions_path, impact_path, bucket, out_dir):
    """Aggregate a run's geolocations by region and time bucket."""
    corpus = Corpus(corpus_dir)
    record = pl.load_run(run_dir)
    regions = load_regions(regions_path) if regions_path else corpus.regions
    posts_by_id = {p.id: p for p in corpus.posts}
    aggregates = agg.aggregate(list(record.resolutions.values()), posts_by_id, regions, bucket)
    agg.save_aggregates(aggregates, regions, out_dir)
    summary = {"rows": len(aggregates), "total": sum(a.count for a in aggregates)}
    if impact_path:
        impact = load_impact(impact_path)
        totals = agg.region_totals(aggregates)
        x = {rid: float(totals.get(rid, 0)) for rid in impact}
        rho, excluded = agg.spearman(x, impact)
        summary["spearman_rho"] = rho
        summary["excluded_regions"] = excluded
    click.echo(json.dumps(summary, indent=2))


@main.command("serve")
@click.option("--port", default=8080, show_default=True)
@click.option("--data-root", "data_root", required=True, type=click.Path())
@click.option("--max-workers", default=2, show_default=True)
@click.option("--ui-dir", "ui_dir", type=click.Path())
def serve_cmd(port, data_root, max_workers, ui_dir):
    """Serve the HTTP API (and the designer UI when built)."""
    from .service import serve

    serve(port, data_root, max_workers=max_workers, ui_dir=ui_dir)


if __name__ == "__main__":
    main()
