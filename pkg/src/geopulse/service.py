"""HTTP facade over the trigger, pipeline, and aggregation engines.

Every endpoint is a thin adapter: the JSON it returns equals the result of
the corresponding library call on the same inputs. Pipeline runs execute
asynchronously on a bounded worker pool and persist their artifacts under
data_root/runs/<run_id>/ so the registry survives restarts.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import aggregate as agg
from . import pipeline as pl
from . import trigger as tg
from .corpus import Corpus
from .loaders import LoaderError, load_sample
from .model import iso, utc

log = logging.getLogger(__name__)

_SAFE_ID = re.compile(r"^[A-Za-z0-9_.-]+$")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _not_found(what: str) -> ApiError:
    return ApiError(404, "not_found", what)


class EvaluateBody(BaseModel):
    config: dict
    corpus_id: str
    sample_id: "str | None" = None


class SweepBody(BaseModel):
    config: dict
    corpus_id: str
    component_id: str
    param: str
    grid: "list[float] | None" = None
    sample_id: "str | None" = None


class OptimizeBody(BaseModel):
    config: dict


class RunBody(BaseModel):
    config: dict
    corpus_id: str


class TriggerEvalBody(BaseModel):
    dictionary_id: str
    W: int = tg.DEFAULT_WINDOW
    corpus_id: "str | None" = None


class RunRegistry:
    """Single-writer registry of pipeline runs, persisted per run directory."""

    def __init__(self, runs_dir: Path):
        self.runs_dir = runs_dir
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        for status_file in sorted(self.runs_dir.glob("*/status.json")):
            try:
                entry = json.loads(status_file.read_text())
                self._entries[entry["run_id"]] = entry
            except (OSError, ValueError, KeyError):
                log.warning("skipping unreadable run dir %s", status_file.parent)

    def create(self, corpus_id: str, config_json: dict) -> dict:
        with self._lock:
            run_id = uuid.uuid4().hex[:12]
            while run_id in self._entries:
                run_id = uuid.uuid4().hex[:12]
            entry = {
                "run_id": run_id,
                "corpus_id": corpus_id,
                "status": "pending",
                "config": config_json,
                "error": None,
                "summary": None,
            }
            self._entries[run_id] = entry
            self._persist(entry)
            return dict(entry)

    def update(self, run_id: str, **fields) -> None:
        with self._lock:
            entry = self._entries[run_id]
            if entry["status"] == "done":
                raise RuntimeError(f"run {run_id} is done and immutable")
            entry.update(fields)
            self._persist(entry)

    def get(self, run_id: str) -> dict:
        with self._lock:
            if run_id not in self._entries:
                raise _not_found(f"run {run_id!r}")
            return dict(self._entries[run_id])

    def _persist(self, entry: dict) -> None:
        run_dir = self.runs_dir / entry["run_id"]
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "status.json").write_text(json.dumps(entry, indent=2) + "\n")


class ServiceState:
    def __init__(self, data_root, max_workers: int = 2):
        self.data_root = Path(data_root)
        self.corpora_dir = self.data_root / "corpora"
        self.dict_dir = self.data_root / "dictionaries"
        self.registry = RunRegistry(self.data_root / "runs")
        self.executor = ThreadPoolExecutor(max_workers=max_workers)
        self._corpora: dict[str, Corpus] = {}
        self._corpus_lock = threading.Lock()
        self._suggestion_cache: dict[str, list] = {}

    def corpus(self, corpus_id: str) -> Corpus:
        if not _SAFE_ID.match(corpus_id):
            raise ApiError(422, "invalid_config", f"bad corpus id {corpus_id!r}")
        with self._corpus_lock:
            if corpus_id not in self._corpora:
                path = self.corpora_dir / corpus_id
                if not (path / "posts.jsonl").exists():
                    raise _not_found(f"corpus {corpus_id!r}")
                self._corpora[corpus_id] = Corpus(path)
            return self._corpora[corpus_id]

    def sole_corpus_id(self) -> str:
        ids = sorted(p.name for p in self.corpora_dir.glob("*") if (p / "posts.jsonl").exists())
        if len(ids) != 1:
            raise ApiError(422, "invalid_config",
                           "corpus_id required when the data root has several corpora")
        return ids[0]

    def sample_for(self, corpus: Corpus, sample_id: "str | None"):
        if sample_id is None:
            return corpus.sample
        if not _SAFE_ID.match(sample_id):
            raise ApiError(422, "invalid_config", f"bad sample id {sample_id!r}")
        path = corpus.path / sample_id
        if not path.exists():
            raise _not_found(f"sample {sample_id!r}")
        return load_sample(path, corpus.post_ids)

    def dictionary(self, dictionary_id: str) -> tg.Dictionary:
        if not _SAFE_ID.match(dictionary_id):
            raise ApiError(422, "invalid_config", f"bad dictionary id {dictionary_id!r}")
        path = self.dict_dir / f"{dictionary_id}.json"
        if not path.exists():
            raise _not_found(f"dictionary {dictionary_id!r}")
        return tg.Dictionary.from_json(json.loads(path.read_text()))


def create_app(data_root, max_workers: int = 2, ui_dir=None) -> FastAPI:
    state = ServiceState(data_root, max_workers=max_workers)
    app = FastAPI(title="geopulse", docs_url="/api/docs", openapi_url="/api/openapi.json")
    app.state.engine = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(pl.ConfigError)
    async def _config_error(_req: Request, exc: pl.ConfigError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": "invalid_config", "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": "invalid_request", "message": str(exc.errors())}},
        )

    @app.exception_handler(Exception)
    async def _engine_error(_req: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"error": {"code": "engine_failure", "message": str(exc)}},
        )

    @app.get("/api/components")
    def components():
        return {"components": [d.to_json() for d in pl.REGISTRY.values()]}

    @app.post("/api/pipeline/evaluate")
    def pipeline_evaluate(body: EvaluateBody):
        config = pl.parse_config(body.config)
        corpus = state.corpus(body.corpus_id)
        sample = state.sample_for(corpus, body.sample_id)
        record = pl.run(config, corpus)
        return pl.evaluate(record, sample).to_json()

    @app.post("/api/pipeline/sweep")
    def pipeline_sweep(body: SweepBody):
        config = pl.parse_config(body.config)
        corpus = state.corpus(body.corpus_id)
        sample = state.sample_for(corpus, body.sample_id)
        rows = pl.sweep(config, corpus, sample, body.component_id, body.param, body.grid)
        return {"rows": [r.to_json() for r in rows]}

    @app.post("/api/pipeline/optimize")
    def pipeline_optimize(body: OptimizeBody):
        config = pl.parse_config(body.config)
        try:
            return pl.optimize_order(config).to_json()
        except pl.OptimizeError as exc:
            raise ApiError(422, "invalid_config", str(exc))

    def _execute_run(run_id: str, config: pl.PipelineConfig, corpus_id: str):
        try:
            state.registry.update(run_id, status="running")
            corpus = state.corpus(corpus_id)
            record = pl.run(config, corpus, run_id=run_id)
            metrics = None
            if (corpus.path / "sample.csv").exists():
                metrics = pl.evaluate(record, corpus.sample)
            pl.save_run(record, state.registry.runs_dir / run_id, metrics)
            state.registry.update(
                run_id,
                summary=pl.record_to_json(record),
                metrics=metrics.to_json() if metrics else None,
                status="done",
            )
        except Exception as exc:  # surfaced via GET /api/runs/{id}
            log.exception("run %s failed", run_id)
            state.registry.update(run_id, status="failed", error=str(exc))

    @app.post("/api/pipeline/run")
    def pipeline_run(body: RunBody):
        config = pl.parse_config(body.config)
        state.corpus(body.corpus_id)  # 404 before accepting the run
        entry = state.registry.create(body.corpus_id, pl.config_to_json(config))
        state.executor.submit(_execute_run, entry["run_id"], config, body.corpus_id)
        return {"run_id": entry["run_id"]}

    @app.get("/api/runs/{run_id}")
    def run_status(run_id: str):
        return state.registry.get(run_id)

    def _loaded_run(run_id: str) -> tuple[dict, pl.RunRecord]:
        entry = state.registry.get(run_id)
        if entry["status"] != "done":
            raise ApiError(422, "invalid_config", f"run {run_id} is {entry['status']}, not done")
        record = pl.load_run(state.registry.runs_dir / run_id)
        return entry, record

    @app.get("/api/trigger/series")
    def trigger_series(
        term: str,
        corpus_id: "str | None" = None,
        bucket: int = tg.DEFAULT_BUCKET,
        start: "str | None" = Query(None, alias="from"),
        end: "str | None" = Query(None, alias="to"),
    ):
        corpus = state.corpus(corpus_id or state.sole_corpus_id())
        span = None
        if start and end:
            try:
                span = (utc(start), utc(end))
            except ValueError as exc:
                raise ApiError(422, "invalid_config", str(exc))
        series = tg.bucket_term_counts(corpus.posts, [term], bucket_width=bucket, span=span)[0]
        return {
            "term": series.term,
            "bucket_width": series.bucket_width,
            "origin": iso(series.origin),
            "rows": [
                {"bucket_start": iso(series.bucket_start(i)), "count": int(c)}
                for i, c in enumerate(series.counts)
            ],
        }

    @app.get("/api/trigger/events")
    def trigger_events(corpus_id: "str | None" = None):
        corpus = state.corpus(corpus_id or state.sole_corpus_id())
        return {
            "events": [
                {
                    "event_id": ev.event_id,
                    "event_type": ev.event_type,
                    "country": ev.country,
                    "start": iso(ev.start),
                    "end": iso(ev.end),
                    "name": ev.name,
                }
                for ev in corpus.events
            ]
        }

    @app.post("/api/trigger/evaluate")
    def trigger_evaluate(body: TriggerEvalBody):
        corpus = state.corpus(body.corpus_id or state.sole_corpus_id())
        dictionary = state.dictionary(body.dictionary_id)
        result = tg.evaluate_loeo(corpus.posts, corpus.events, dictionary, window=body.W)
        return {
            "folds": [
                {"event_id": f.event_id, "tp": f.tp, "fp": f.fp, "fn": f.fn, "tn": f.tn,
                 "precision": f.precision, "recall": f.recall}
                for f in result.folds
            ],
            "micro_precision": result.micro_precision,
            "micro_recall": result.micro_recall,
        }

    @app.get("/api/aggregate")
    def aggregate_run(run_id: str, bucket: str = "day"):
        entry, record = _loaded_run(run_id)
        corpus = state.corpus(entry["corpus_id"])
        posts_by_id = {p.id: p for p in corpus.posts}
        aggregates = agg.aggregate(
            list(record.resolutions.values()), posts_by_id, corpus.regions, bucket=bucket
        )
        impact = corpus.impact if (corpus.path / "impact.csv").exists() else None
        return agg.export_choropleth(aggregates, corpus.regions, impact=impact)

    @app.get("/api/suggestions")
    def suggestions(run_id: str):
        if run_id in state._suggestion_cache:
            return {"suggestions": state._suggestion_cache[run_id]}
        entry, record = _loaded_run(run_id)
        corpus = state.corpus(entry["corpus_id"])
        metrics = None
        sweeps = {}
        if (corpus.path / "sample.csv").exists():
            metrics = pl.evaluate(record, corpus.sample)
            for spec in record.config.components:
                names = {p.name for p in record.config.descriptor(spec.component_id).params}
                if "threshold" in names:
                    sweeps[(spec.component_id, "threshold")] = pl.sweep(
                        record.config, corpus, corpus.sample, spec.component_id, "threshold"
                    )
        result = [s.to_json() for s in pl.suggest([record], metrics, sweeps)]
        state._suggestion_cache[run_id] = result
        return {"suggestions": result}

    if ui_dir and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(port: int, data_root, max_workers: int = 2, ui_dir=None) -> None:
    import uvicorn

    app = create_app(data_root, max_workers=max_workers, ui_dir=ui_dir)
    uvicorn.run(app, host="0.0.0.0", port=port)
