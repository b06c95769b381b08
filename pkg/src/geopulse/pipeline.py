"""Pipeline configuration, execution, evaluation, and order optimization.

A pipeline is a linear chain of registered filter components over a corpus.
Configs are strict JSON (unknown keys are errors) and round-trip through a
canonical serialization. Execution records every item's fate so that
removal logs partition the removed set by exactly one component.

Expected per-item cost of an order pi is sum_i c_pi(i) * prod_{j<i} s_pi(j);
optimize_order minimizes it over precedence- and pin-respecting orders,
exhaustively for up to 8 free components, otherwise by the c/(1-s) rank
rule (provably optimal when unconstrained).
"""

from __future__ import annotations

import itertools
import json
import math
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import httpx

from .corpus import Corpus
from .geo import GeoResolution, density_filter, geometry_filter, resolve_post
from .media import (
    KEEP_IF_GE,
    KEEP_IF_LE,
    ScorerBinding,
    dedup,
    photo_score,
    score_with,
)
from .model import LabeledSample, Post


class ConfigError(ValueError):
    """Invalid pipeline configuration."""


class OptimizeError(RuntimeError):
    """Cost/selectivity data missing or constraints unsatisfiable."""


class RunAborted(RuntimeError):
    """Execution stopped: systematic scorer failure beyond budget."""


@dataclass(frozen=True)
class ParamSchema:
    name: str
    type: str  # "float" | "int" | "str" | "str-list"
    default: Any
    lo: "float | None" = None
    hi: "float | None" = None
    choices: "tuple[str, ...] | None" = None

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "type": self.type, "default": self.default}
        if self.lo is not None:
            out["lo"] = self.lo
        if self.hi is not None:
            out["hi"] = self.hi
        if self.choices:
            out["choices"] = list(self.choices)
        return out


@dataclass(frozen=True)
class ComponentDescriptor:
    component_id: str
    scorer_id: "str | None"
    params: tuple[ParamSchema, ...]
    requires: tuple[str, ...] = ()  # implicit precedence
    description: str = ""

    def to_json(self) -> dict:
        return {
            "component_id": self.component_id,
            "scorer_id": self.scorer_id,
            "params": [p.to_json() for p in self.params],
            "requires": list(self.requires),
            "description": self.description,
        }


_DIRECTIONS = (KEEP_IF_GE, KEEP_IF_LE)

REGISTRY: dict[str, ComponentDescriptor] = {
    d.component_id: d
    for d in [
        ComponentDescriptor(
            "dedup", "dhash-dedup",
            (ParamSchema("max_distance", "int", 10, 0, 64),),
            description="Remove items whose images near-duplicate an earlier kept image",
        ),
        ComponentDescriptor(
            "photo", "photo-entropy",
            (ParamSchema("threshold", "float", 0.5, 0.0, 1.0),
             ParamSchema("direction", "str", KEEP_IF_GE, choices=_DIRECTIONS)),
            description="Keep photographic images by histogram-entropy score",
        ),
        ComponentDescriptor(
            "nsfw", "nsfw-stub",
            (ParamSchema("threshold", "float", 0.5, 0.0, 1.0),
             ParamSchema("direction", "str", KEEP_IF_LE, choices=_DIRECTIONS)),
            description="Drop items whose NSFW score exceeds the threshold",
        ),
        ComponentDescriptor(
            "geolocate", None,
            (ParamSchema("alpha", "float", 1.0, 0.0, None),
             ParamSchema("beta", "float", 0.5, 0.0, None),
             ParamSchema("beam_width", "int", 32, 1, None)),
            description="Resolve place mentions against the gazetteer; drop unlocated items",
        ),
        ComponentDescriptor(
            "geometry", None,
            (ParamSchema("region_ids", "str-list", []),),
            requires=("geolocate",),
            description="Keep items resolved inside a monitored region polygon",
        ),
        ComponentDescriptor(
            "density", None,
            (ParamSchema("eps_km", "float", 50.0, 0.0, None),
             ParamSchema("min_pts", "int", 3, 1, None)),
            requires=("geolocate",),
            description="Keep items with enough resolved neighbors nearby",
        ),
    ]
}

_EXTERNAL_PARAMS = (
    ParamSchema("threshold", "float", 0.5, 0.0, 1.0),
    ParamSchema("direction", "str", KEEP_IF_GE, choices=_DIRECTIONS),
)


@dataclass(frozen=True)
class ComponentSpec:
    component_id: str
    params: dict[str, Any] = field(default_factory=dict)
    pinned: "int | None" = None
    precedence: tuple[str, ...] = ()

    def param(self, schema: ComponentDescriptor, name: str):
        for p in schema.params:
            if p.name == name:
                return self.params.get(name, p.default)
        raise KeyError(name)


@dataclass(frozen=True)
class CostEntry:
    cost_ms: float
    selectivity: "float | None" = None


@dataclass(frozen=True)
class PipelineConfig:
    components: tuple[ComponentSpec, ...]
    corpus: "str | None" = None
    sample: "str | None" = None
    costs: dict[str, CostEntry] = field(default_factory=dict)
    scorers: tuple[ScorerBinding, ...] = ()
    failure_budget: float = 0.1

    def descriptor(self, component_id: str) -> ComponentDescriptor:
        if component_id in REGISTRY:
            return REGISTRY[component_id]
        for s in self.scorers:
            if s.scorer_id == component_id:
                return ComponentDescriptor(component_id, s.scorer_id, _EXTERNAL_PARAMS)
        raise ConfigError(f"unknown component {component_id!r}")

    def binding(self, scorer_id: str) -> ScorerBinding:
        for s in self.scorers:
            if s.scorer_id == scorer_id:
                return s
        raise ConfigError(f"no scorer binding {scorer_id!r}")


def _require_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _validate_param(schema: ParamSchema, value, where: str):
    if schema.type == "float":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{where}: {schema.name} must be a number")
        value = float(value)
    elif schema.type == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{where}: {schema.name} must be an integer")
    elif schema.type == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: {schema.name} must be a string")
    elif schema.type == "str-list":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{where}: {schema.name} must be a list of strings")
    if schema.lo is not None and value < schema.lo:
        raise ConfigError(f"{where}: {schema.name}={value} below {schema.lo}")
    if schema.hi is not None and value > schema.hi:
        raise ConfigError(f"{where}: {schema.name}={value} above {schema.hi}")
    if schema.choices and value not in schema.choices:
        raise ConfigError(f"{where}: {schema.name}={value!r} not in {list(schema.choices)}")
    return value


def effective_precedence(config: PipelineConfig, spec: ComponentSpec) -> tuple[str, ...]:
    implicit = config.descriptor(spec.component_id).requires
    present = {s.component_id for s in config.components}
    return tuple(dict.fromkeys([*spec.precedence, *(r for r in implicit if r in present)]))


def _check_order_and_cycles(config: PipelineConfig) -> None:
    ids = [s.component_id for s in config.components]
    pos = {cid: i for i, cid in enumerate(ids)}
    graph = {}
    for spec in config.components:
        for dep in spec.precedence:
            if dep not in pos:
                raise ConfigError(
                    f"component {spec.component_id!r}: precedence references "
                    f"unknown component {dep!r}"
                )
        for req in config.descriptor(spec.component_id).requires:
            if req not in pos:
                raise ConfigError(
                    f"component {spec.component_id!r} requires {req!r} earlier in the pipeline"
                )
        graph[spec.component_id] = list(effective_precedence(config, spec))
    # cycle detection
    state: dict[str, int] = {}

    def visit(node: str, trail: list[str]):
        if state.get(node) == 1:
            cycle = trail[trail.index(node):] + [node]
            raise ConfigError(f"precedence cycle: {' -> '.join(cycle)}")
        if state.get(node) == 2:
            return
        state[node] = 1
        for dep in graph[node]:
            visit(dep, trail + [node])
        state[node] = 2

    for cid in ids:
        visit(cid, [])
    for spec in config.components:
        for dep in graph[spec.component_id]:
            if pos[dep] > pos[spec.component_id]:
                raise ConfigError(
                    f"component {spec.component_id!r} must run after {dep!r}, "
                    f"but the configured order places it earlier"
                )


def parse_config(data: "bytes | str | dict") -> PipelineConfig:
    """Strictly parse and validate a pipeline config; see serialize_config."""
    if isinstance(data, (bytes, str)):
        try:
            obj = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    else:
        obj = data
    if not isinstance(obj, dict):
        raise ConfigError("config root must be an object")
    _require_keys(obj, {"components", "corpus", "sample", "costs", "scorers", "failure_budget"}, "config")

    scorers = []
    for i, raw in enumerate(obj.get("scorers", [])):
        where = f"scorers[{i}]"
        _require_keys(raw, {"scorer_id", "kind", "endpoint", "timeout_ms", "default_score_on_failure"}, where)
        try:
            scorers.append(ScorerBinding(
                scorer_id=raw["scorer_id"],
                kind=raw.get("kind", "external"),
                endpoint=raw.get("endpoint"),
                timeout_ms=int(raw.get("timeout_ms", 1000)),
                default_score_on_failure=raw.get("default_score_on_failure", 0.5),
            ))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        if scorers[-1].scorer_id in REGISTRY:
            raise ConfigError(f"{where}: scorer id {scorers[-1].scorer_id!r} shadows a builtin")

    budget = obj.get("failure_budget", 0.1)
    if not isinstance(budget, (int, float)) or not 0.0 <= budget <= 1.0:
        raise ConfigError("failure_budget must be a number in [0, 1]")

    components = []
    seen_ids = set()
    raw_components = obj.get("components")
    if not isinstance(raw_components, list):
        raise ConfigError("config.components must be a list")
    config_stub = PipelineConfig(components=(), scorers=tuple(scorers))
    for i, raw in enumerate(raw_components):
        where = f"components[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: must be an object")
        _require_keys(raw, {"component", "params", "pinned", "precedence"}, where)
        cid = raw.get("component")
        if not isinstance(cid, str):
            raise ConfigError(f"{where}: missing component id")
        descriptor = config_stub.descriptor(cid)  # raises on unknown id
        if cid in seen_ids:
            raise ConfigError(f"{where}: duplicate component {cid!r}")
        seen_ids.add(cid)
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{where}: params must be an object")
        known = {p.name: p for p in descriptor.params}
        for name, value in params.items():
            if name not in known:
                raise ConfigError(f"{where}: unknown param {name!r} for {cid!r}")
            params[name] = _validate_param(known[name], value, where)
        pinned = raw.get("pinned")
        if pinned is not None and (not isinstance(pinned, int) or isinstance(pinned, bool)):
            raise ConfigError(f"{where}: pinned must be an integer position")
        precedence = raw.get("precedence", [])
        if not isinstance(precedence, list) or not all(isinstance(p, str) for p in precedence):
            raise ConfigError(f"{where}: precedence must be a list of component ids")
        components.append(ComponentSpec(
            component_id=cid, params=dict(params),
            pinned=pinned, precedence=tuple(precedence),
        ))

    n = len(components)
    pins = [s.pinned for s in components if s.pinned is not None]
    if any(not 0 <= p < n for p in pins):
        raise ConfigError(f"pinned positions must lie in [0, {n})")
    if len(pins) != len(set(pins)):
        raise ConfigError("duplicate pinned positions")

    costs = {}
    raw_costs = obj.get("costs", {})
    if not isinstance(raw_costs, dict):
        raise ConfigError("config.costs must be an object")
    for cid, entry in raw_costs.items():
        _require_keys(entry, {"cost_ms", "selectivity"}, f"costs[{cid}]")
        sel = entry.get("selectivity")
        if sel is not None and not 0.0 <= float(sel) <= 1.0:
            raise ConfigError(f"costs[{cid}]: selectivity outside [0, 1]")
        costs[cid] = CostEntry(cost_ms=float(entry["cost_ms"]),
                               selectivity=None if sel is None else float(sel))

    config = PipelineConfig(
        components=tuple(components),
        corpus=obj.get("corpus"),
        sample=obj.get("sample"),
        costs=costs,
        scorers=tuple(scorers),
        failure_budget=float(budget),
    )
    _check_order_and_cycles(config)
    return config


def config_to_json(config: PipelineConfig) -> dict:
    out: dict[str, Any] = {
        "components": [
            {
                "component": s.component_id,
                "params": dict(sorted(s.params.items())),
                **({"pinned": s.pinned} if s.pinned is not None else {}),
                **({"precedence": list(s.precedence)} if s.precedence else {}),
            }
            for s in config.components
        ]
    }
    if config.corpus is not None:
        out["corpus"] = config.corpus
    if config.sample is not None:
        out["sample"] = config.sample
    if config.costs:
        out["costs"] = {
            cid: {"cost_ms": e.cost_ms, **({"selectivity": e.selectivity} if e.selectivity is not None else {})}
            for cid, e in sorted(config.costs.items())
        }
    if config.scorers:
        out["scorers"] = [
            {
                "scorer_id": s.scorer_id, "kind": s.kind,
                **({"endpoint": s.endpoint} if s.endpoint else {}),
                "timeout_ms": s.timeout_ms,
                "default_score_on_failure": s.default_score_on_failure,
            }
            for s in config.scorers
        ]
    if config.failure_budget != 0.1:
        out["failure_budget"] = config.failure_budget
    return out


def serialize_config(config: PipelineConfig) -> bytes:
    """Canonical bytes; parse_config(serialize_config(c)) == c."""
    return (json.dumps(config_to_json(config), indent=2, sort_keys=True) + "\n").encode()


def case_study_config() -> PipelineConfig:
    """The four-step case-study pipeline: dedup, photo, nsfw, geolocate."""
    return parse_config({
        "components": [
            {"component": "dedup", "params": {"max_distance": 10}},
            {"component": "photo", "params": {"threshold": 0.5}},
            {"component": "nsfw", "params": {"threshold": 0.5}},
            {"component": "geolocate", "params": {}},
        ],
    })


@dataclass
class ComponentTrace:
    component_id: str
    input_count: int
    output_count: int
    removed: list[tuple[str, str]]  # (post_id, detail)
    flagged: list[str]
    mean_cost_ms: float

    @property
    def selectivity(self) -> float:
        return self.output_count / self.input_count if self.input_count else 1.0

    def to_json(self) -> dict:
        return {
            "component_id": self.component_id,
            "input_count": self.input_count,
            "output_count": self.output_count,
            "removed": [list(r) for r in self.removed],
            "flagged": list(self.flagged),
            "mean_cost_ms": self.mean_cost_ms,
            "selectivity": self.selectivity,
        }


@dataclass
class RunRecord:
    run_id: str
    config: PipelineConfig
    corpus_path: str
    total: int
    kept_ids: list[str]
    traces: list[ComponentTrace]
    resolutions: dict[str, GeoResolution]

    @property
    def reduction_rate(self) -> float:
        return 1.0 - len(self.kept_ids) / self.total if self.total else 0.0

    def profile(self) -> dict[str, tuple[float, float]]:
        """Measured (mean cost ms, selectivity) per component."""
        return {t.component_id: (t.mean_cost_ms, t.selectivity) for t in self.traces}


class Executor:
    """Applies components in order, caching param-independent work so that
    threshold sweeps re-run only what a parameter change can affect."""

    def __init__(self, config: PipelineConfig, corpus: Corpus):
        self.config = config
        self.corpus = corpus
        self._photo: dict[str, float | None] = {}
        self._scores: dict[tuple[str, str], Any] = {}
        self._resolutions: dict[tuple, GeoResolution | None] = {}

    def _photo_score(self, post: Post) -> "float | None":
        if post.id not in self._photo:
            images = self.corpus.images_for(post)
            self._photo[post.id] = max((photo_score(i) for i in images), default=None)
        return self._photo[post.id]

    def _resolve(self, post: Post, alpha, beta, beam_width) -> "GeoResolution | None":
        key = (post.id, alpha, beta, beam_width)
        if key not in self._resolutions:
            self._resolutions[key] = resolve_post(
                post, self.corpus.gazetteer, alpha=alpha, beta=beta, beam_width=beam_width
            )
        return self._resolutions[key]

    def _run_component(self, spec: ComponentSpec, items: "list[Post]",
                       resolutions: dict[str, GeoResolution]):
        descriptor = self.config.descriptor(spec.component_id)
        removed: list[tuple[str, str]] = []
        flagged: list[str] = []
        kept: list[Post] = []
        failures = 0

        if spec.component_id == "dedup":
            result = dedup(items, self.corpus.load_image,
                           max_distance=spec.param(descriptor, "max_distance"))
            kept = result.kept
            removed = [(r.removed_id, f"duplicate of {r.matched_kept_id} (distance {r.distance})")
                       for r in result.removed]
            flagged = result.flagged
        elif spec.component_id == "photo":
            threshold = spec.param(descriptor, "threshold")
            direction = spec.param(descriptor, "direction")
            for post in items:
                score = self._photo_score(post)
                if score is None:
                    flagged.append(post.id)
                    kept.append(post)
                elif _keep(score, threshold, direction):
                    kept.append(post)
                else:
                    removed.append((post.id, f"photo score {score:.4f}"))
        elif spec.component_id == "geolocate":
            alpha = spec.param(descriptor, "alpha")
            beta = spec.param(descriptor, "beta")
            beam_width = spec.param(descriptor, "beam_width")
            for post in items:
                res = self._resolve(post, alpha, beta, beam_width)
                if res is None:
                    removed.append((post.id, "no location"))
                else:
                    resolutions[post.id] = res
                    kept.append(post)
        elif spec.component_id == "geometry":
            ids = spec.param(descriptor, "region_ids")
            monitored = [r for r in self.corpus.regions
                         if not ids or r.region_id in ids]
            in_region = {r.post_id for r in geometry_filter(
                [resolutions[p.id] for p in items], monitored)}
            for post in items:
                if post.id in in_region:
                    kept.append(post)
                else:
                    removed.append((post.id, "outside monitored regions"))
        elif spec.component_id == "density":
            eps_km = spec.param(descriptor, "eps_km")
            min_pts = spec.param(descriptor, "min_pts")
            points = [(resolutions[p.id].primary.lat, resolutions[p.id].primary.lon)
                      for p in items]
            keep_mask = density_filter(points, eps_km=eps_km, min_pts=min_pts)
            for post, keep in zip(items, keep_mask):
                if keep:
                    kept.append(post)
                else:
                    removed.append((post.id, f"fewer than {min_pts} neighbors within {eps_km} km"))
        else:  # scorer-backed component (builtin stub or external binding)
            binding = (ScorerBinding("nsfw-stub", "builtin")
                       if spec.component_id == "nsfw"
                       else self.config.binding(spec.component_id))
            threshold = spec.param(descriptor, "threshold")
            direction = spec.param(descriptor, "direction")
            client = httpx.Client() if binding.kind == "external" else None
            budget = self.config.failure_budget * len(items)
            try:
                for post in items:
                    ck = (binding.scorer_id, post.id)
                    if ck not in self._scores:
                        self._scores[ck] = score_with(
                            binding, post, self.corpus.images_for(post), client=client)
                    result = self._scores[ck]
                    if result.failed:
                        failures += 1
                        if failures > budget:  # can only grow: abort early
                            raise RunAborted(
                                f"component {spec.component_id!r}: {failures} scorer "
                                f"failures on {len(items)} items exceed the "
                                f"{self.config.failure_budget:.0%} budget"
                            )
                    if result.reject:
                        removed.append((post.id, f"scorer failure: {result.detail}"))
                    elif result.flagged or result.score is None:
                        flagged.append(post.id)
                        kept.append(post)
                    elif _keep(result.score, threshold, direction):
                        kept.append(post)
                    else:
                        removed.append((post.id, f"score {result.score:.4f}"))
            finally:
                if client is not None:
                    client.close()
        return kept, removed, flagged

    def execute(self, specs: Sequence[ComponentSpec], items: "list[Post]",
                resolutions: "dict[str, GeoResolution] | None" = None):
        resolutions = {} if resolutions is None else resolutions
        traces = []
        for spec in specs:
            started = time.perf_counter()
            kept, removed, flagged = self._run_component(spec, items, resolutions)
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            traces.append(ComponentTrace(
                component_id=spec.component_id,
                input_count=len(items),
                output_count=len(kept),
                removed=removed,
                flagged=flagged,
                mean_cost_ms=elapsed_ms / len(items) if items else 0.0,
            ))
            items = kept
        return items, traces, resolutions


def run(config: PipelineConfig, corpus: Corpus, run_id: "str | None" = None) -> RunRecord:
    """Execute the full chain in config order over the corpus post stream."""
    items = sorted(corpus.posts, key=lambda p: (p.created_at, p.id))
    executor = Executor(config, corpus)
    kept, traces, resolutions = executor.execute(config.components, items)
    return RunRecord(
        run_id=run_id or uuid.uuid4().hex[:12],
        config=config,
        corpus_path=str(corpus.path),
        total=len(items),
        kept_ids=[p.id for p in kept],
        traces=traces,
        resolutions={p.id: resolutions[p.id] for p in kept if p.id in resolutions},
    )


def _keep(score: float, threshold: float, direction: str) -> bool:
    return score >= threshold if direction == KEEP_IF_GE else score <= threshold


@dataclass
class EvalMetrics:
    precision: float
    recall: float
    reduction_rate: float
    kept: int
    removed: int
    total: int
    kept_zero: bool  # no labeled kept items: precision reported as 1.0
    component_selectivity: dict[str, float]
    component_cost_ms: dict[str, float]
    expected_cost_per_item: float

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "reduction_rate": self.reduction_rate,
            "kept": self.kept,
            "removed": self.removed,
            "total": self.total,
            "kept_zero": self.kept_zero,
            "component_selectivity": dict(self.component_selectivity),
            "component_cost_ms": dict(self.component_cost_ms),
            "expected_cost_per_item": self.expected_cost_per_item,
        }


def _cost_table(record: RunRecord) -> dict[str, float]:
    # declared costs beat measured wall-clock: declared-cost metrics are
    # deterministic, measured ones fill the gaps after profiling
    table = {}
    for trace in record.traces:
        declared = record.config.costs.get(trace.component_id)
        table[trace.component_id] = declared.cost_ms if declared else trace.mean_cost_ms
    return table


def evaluate(record: RunRecord, sample: LabeledSample) -> EvalMetrics:
    """Precision/recall over labeled items; reduction over all items.

    Unlabeled items do not enter precision or recall but do count toward
    the reduction rate. With zero labeled kept items precision is reported
    as 1.0 with the kept_zero flag set.
    """
    kept = set(record.kept_ids)
    labeled_kept = [pid for pid in kept if pid in sample.labels]
    relevant_kept = sum(1 for pid in labeled_kept if sample.labels[pid])
    relevant_total = sum(1 for v in sample.labels.values() if v)
    kept_zero = not labeled_kept
    precision = 1.0 if kept_zero else relevant_kept / len(labeled_kept)
    recall = relevant_kept / relevant_total if relevant_total else 0.0
    costs = _cost_table(record)
    selectivities = {t.component_id: t.selectivity for t in record.traces}
    order = [t.component_id for t in record.traces]
    return EvalMetrics(
        precision=precision,
        recall=recall,
        reduction_rate=record.reduction_rate,
        kept=len(kept),
        removed=record.total - len(kept),
        total=record.total,
        kept_zero=kept_zero,
        component_selectivity=selectivities,
        component_cost_ms=costs,
        expected_cost_per_item=expected_cost(
            [costs[c] for c in order], [selectivities[c] for c in order]
        ),
    )


DEFAULT_GRID = [round(i * 0.05, 2) for i in range(21)]


@dataclass
class SweepRow:
    value: Any
    metrics: EvalMetrics

    def to_json(self) -> dict:
        return {"value": self.value, "metrics": self.metrics.to_json()}


def sweep(
    config: PipelineConfig,
    corpus: Corpus,
    sample: LabeledSample,
    component_id: str,
    param: str,
    grid: "Sequence[Any] | None" = None,
) -> list[SweepRow]:
    """Re-evaluate the pipeline at each grid value of one component param.

    Components upstream of the swept one run once; their outputs are reused
    across the grid.
    """
    idx = next((i for i, s in enumerate(config.components)
                if s.component_id == component_id), None)
    if idx is None:
        raise ConfigError(f"component {component_id!r} not in pipeline")
    descriptor = config.descriptor(component_id)
    if param not in {p.name for p in descriptor.params}:
        raise ConfigError(f"component {component_id!r} has no param {param!r}")
    grid = list(DEFAULT_GRID if grid is None else grid)

    items = sorted(corpus.posts, key=lambda p: (p.created_at, p.id))
    executor = Executor(config, corpus)
    prefix_items, prefix_traces, resolutions = executor.execute(config.components[:idx], items)

    rows = []
    for value in grid:
        swept = replace(config.components[idx],
                        params={**config.components[idx].params, param: value})
        kept, suffix_traces, res = executor.execute(
            [swept, *config.components[idx + 1:]], prefix_items, dict(resolutions)
        )
        record = RunRecord(
            run_id=f"sweep-{component_id}-{param}-{value}",
            config=config,
            corpus_path=str(corpus.path),
            total=len(items),
            kept_ids=[p.id for p in kept],
            traces=[*(replace_trace(t) for t in prefix_traces), *suffix_traces],
            resolutions={p.id: res[p.id] for p in kept if p.id in res},
        )
        rows.append(SweepRow(value=value, metrics=evaluate(record, sample)))
    return rows


def replace_trace(t: ComponentTrace) -> ComponentTrace:
    return ComponentTrace(t.component_id, t.input_count, t.output_count,
                          list(t.removed), list(t.flagged), t.mean_cost_ms)


def expected_cost(costs: Sequence[float], selectivities: Sequence[float]) -> float:
    """Expected per-item cost of running components in the given order."""
    if len(costs) != len(selectivities):
        raise ValueError("costs and selectivities must align")
    total, carry = 0.0, 1.0
    for c, s in zip(costs, selectivities):
        total += carry * c
        carry *= s
    return total


@dataclass
class OptimizeResult:
    config: PipelineConfig
    original_cost: float
    optimized_cost: float
    ratio: float
    method: str  # "exhaustive" | "rank"

    def to_json(self) -> dict:
        return {
            "config": config_to_json(self.config),
            "order": [s.component_id for s in self.config.components],
            "original_cost": self.original_cost,
            "optimized_cost": self.optimized_cost,
            "ratio": self.ratio,
            "method": self.method,
        }


EXHAUSTIVE_FREE_LIMIT = 8


def _order_cost(order: "list[ComponentSpec]", table) -> float:
    return expected_cost(
        [table[s.component_id][0] for s in order],
        [table[s.component_id][1] for s in order],
    )


def _respects(order: "list[ComponentSpec]", config: PipelineConfig) -> bool:
    pos = {s.component_id: i for i, s in enumerate(order)}
    return all(
        pos[dep] < pos[s.component_id]
        for s in order
        for dep in effective_precedence(config, s)
    )


def optimize_order(
    config: PipelineConfig,
    profile: "dict[str, tuple[float, float]] | None" = None,
) -> OptimizeResult:
    """Minimize expected cost over precedence- and pin-respecting orders.

    Costs and selectivities come from `profile` (a measured run) or from the
    config's declared cost model. Stateful dedup is pinned to its current
    position unless the config pins it elsewhere, so reordering cannot
    change which duplicate-group member survives.
    """
    table: dict[str, tuple[float, float]] = {}
    for spec in config.components:
        cid = spec.component_id
        if profile and cid in profile:
            table[cid] = profile[cid]
        elif cid in config.costs and config.costs[cid].selectivity is not None:
            table[cid] = (config.costs[cid].cost_ms, config.costs[cid].selectivity)
        else:
            raise OptimizeError(
                f"no cost/selectivity for component {cid!r}: run the pipeline "
                f"with profiling first or declare costs in the config"
            )

    n = len(config.components)
    pins: dict[int, ComponentSpec] = {}
    free: list[ComponentSpec] = []
    for i, spec in enumerate(config.components):
        pinned = spec.pinned
        if pinned is None and spec.component_id == "dedup":
            pinned = i  # stateful: reordering would change surviving group members
        if pinned is not None:
            if pinned in pins:
                raise OptimizeError(f"two components pinned to position {pinned}")
            pins[pinned] = spec
        else:
            free.append(spec)
    free_slots = [i for i in range(n) if i not in pins]

    original = list(config.components)
    original_cost = _order_cost(original, table)

    def build(perm) -> "list[ComponentSpec]":
        order: list[ComponentSpec | None] = [None] * n
        for slot, spec in pins.items():
            order[slot] = spec
        for slot, spec in zip(free_slots, perm):
            order[slot] = spec
        return order  # type: ignore[return-value]

    if len(free) <= EXHAUSTIVE_FREE_LIMIT:
        best = None
        for perm in itertools.permutations(free):
            order = build(perm)
            if not _respects(order, config):
                continue
            key = (_order_cost(order, table), tuple(s.component_id for s in order))
            if best is None or key < best[0]:
                best = (key, order)
        if best is None:
            raise OptimizeError("no ordering satisfies the precedence and pin constraints")
        optimized, method = best[1], "exhaustive"
    else:
        optimized = _rank_rule_order(config, pins, free, free_slots, table)
        method = "rank"

    optimized_cost = _order_cost(optimized, table)
    ratio = optimized_cost / original_cost if original_cost else 1.0
    return OptimizeResult(
        config=replace(config, components=tuple(optimized)),
        original_cost=original_cost,
        optimized_cost=optimized_cost,
        ratio=ratio,
        method=method,
    )


def _rank_rule_order(config, pins, free, free_slots, table):
    # Kahn-style: at each free slot take the precedence-ready component with
    # the smallest c/(1-s); s == 1 sorts last. Reduces to a plain sort when
    # unconstrained.
    def ratio(spec):
        c, s = table[spec.component_id]
        return c / (1.0 - s) if s < 1.0 else math.inf

    order: list[ComponentSpec | None] = [None] * (len(free) + len(pins))
    for slot, spec in pins.items():
        order[slot] = spec
    remaining = list(free)
    placed: set[str] = set()
    for slot in range(len(order)):
        if order[slot] is not None:
            spec = order[slot]
            if any(dep not in placed for dep in effective_precedence(config, spec)):
                raise OptimizeError(
                    f"pinned component {spec.component_id!r} violates precedence at "
                    f"position {slot}"
                )
            placed.add(spec.component_id)
            continue
        ready = [s for s in remaining
                 if all(dep in placed for dep in effective_precedence(config, s))]
        if not ready:
            raise OptimizeError("no ordering satisfies the precedence and pin constraints")
        chosen = min(ready, key=lambda s: (ratio(s), s.component_id))
        order[slot] = chosen
        placed.add(chosen.component_id)
        remaining.remove(chosen)
    return order


@dataclass
class Suggestion:
    kind: str  # "reorder" | "threshold" | "remove"
    component_id: "str | None"
    detail: dict
    evidence: list[str]  # run ids

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "component_id": self.component_id,
            "detail": self.detail,
            "evidence": list(self.evidence),
        }


REORDER_RATIO = 0.9
REMOVE_SELECTIVITY = 0.99


def suggest(
    runs: "list[RunRecord]",
    metrics: "EvalMetrics | None" = None,
    sweeps: "dict[tuple[str, str], list[SweepRow]] | None" = None,
) -> list[Suggestion]:
    """Evidence-backed improvement suggestions from run history.

    Reorder when the optimizer shaves more than 10% off the expected cost,
    removal for components passing >= 99% of their input, and a threshold
    move when some sweep point dominates the current metrics (precision and
    recall at least as good, strictly more reduction).
    """
    if not runs:
        return []
    latest = runs[-1]
    evidence = [latest.run_id]
    suggestions: list[Suggestion] = []

    try:
        opt = optimize_order(latest.config, profile=latest.profile())
        if opt.ratio < REORDER_RATIO:
            suggestions.append(Suggestion(
                kind="reorder", component_id=None,
                detail=opt.to_json(), evidence=evidence,
            ))
    except OptimizeError:
        pass

    for trace in latest.traces:
        if trace.input_count and trace.selectivity >= REMOVE_SELECTIVITY:
            cost, _ = latest.profile()[trace.component_id]
            suggestions.append(Suggestion(
                kind="remove", component_id=trace.component_id,
                detail={"selectivity": trace.selectivity, "cost_ms_saved": cost},
                evidence=evidence,
            ))

    if metrics is not None and sweeps:
        for (component_id, param), rows in sweeps.items():
            dominating = [
                r for r in rows
                if r.metrics.precision >= metrics.precision
                and r.metrics.recall >= metrics.recall
                and r.metrics.reduction_rate > metrics.reduction_rate
            ]
            if dominating:
                best = max(dominating, key=lambda r: (
                    r.metrics.reduction_rate, r.metrics.precision, r.metrics.recall))
                suggestions.append(Suggestion(
                    kind="threshold", component_id=component_id,
                    detail={
                        "param": param,
                        "value": best.value,
                        "metrics": best.metrics.to_json(),
                        "current": metrics.to_json(),
                    },
                    evidence=evidence,
                ))
    return suggestions


def record_to_json(record: RunRecord) -> dict:
    return {
        "run_id": record.run_id,
        "config": config_to_json(record.config),
        "corpus_path": record.corpus_path,
        "total": record.total,
        "kept_count": len(record.kept_ids),
        "reduction_rate": record.reduction_rate,
        "traces": [t.to_json() for t in record.traces],
    }


def save_run(record: RunRecord, out_dir, metrics: "EvalMetrics | None" = None) -> None:
    """Persist a run: summary JSON, kept/removal JSONL, optional metrics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "record.json").write_text(
        json.dumps(record_to_json(record), indent=2, sort_keys=True) + "\n")
    with open(out / "kept.jsonl", "w", encoding="utf-8") as fh:
        for pid in record.kept_ids:
            row: dict[str, Any] = {"post_id": pid}
            res = record.resolutions.get(pid)
            if res is not None:
                row["places"] = [
                    {"entry_id": p.entry_id, "lat": p.lat, "lon": p.lon,
                     "provenance": p.provenance}
                    for p in res.places
                ]
                row["objective"] = res.objective
                row["method"] = res.method
            fh.write(json.dumps(row) + "\n")
    with open(out / "removals.jsonl", "w", encoding="utf-8") as fh:
        for trace in record.traces:
            for pid, detail in trace.removed:
                fh.write(json.dumps(
                    {"post_id": pid, "component": trace.component_id, "detail": detail}) + "\n")
    if metrics is not None:
        (out / "metrics.json").write_text(
            json.dumps(metrics.to_json(), indent=2, sort_keys=True) + "\n")


def load_run(run_dir) -> RunRecord:
    """Rebuild a persisted run record (kept resolutions included)."""
    run_dir = Path(run_dir)
    summary = json.loads((run_dir / "record.json").read_text())
    kept_ids: list[str] = []
    resolutions: dict[str, GeoResolution] = {}
    with open(run_dir / "kept.jsonl", encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            pid = row["post_id"]
            kept_ids.append(pid)
            if "places" in row:
                from .geo import ResolvedPlace

                resolutions[pid] = GeoResolution(
                    post_id=pid,
                    places=tuple(
                        ResolvedPlace(
                            surface=None, entry_id=p["entry_id"],
                            lat=p["lat"], lon=p["lon"], provenance=p["provenance"],
                        )
                        for p in row["places"]
                    ),
                    objective=row["objective"],
                    method=row["method"],
                )
    traces = [
        ComponentTrace(
            component_id=t["component_id"],
            input_count=t["input_count"],
            output_count=t["output_count"],
            removed=[tuple(r) for r in t["removed"]],
            flagged=list(t["flagged"]),
            mean_cost_ms=t["mean_cost_ms"],
        )
        for t in summary["traces"]
    ]
    return RunRecord(
        run_id=summary["run_id"],
        config=parse_config(summary["config"]),
        corpus_path=summary["corpus_path"],
        total=summary["total"],
        kept_ids=kept_ids,
        traces=traces,
        resolutions=resolutions,
    )
