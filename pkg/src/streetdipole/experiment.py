"""Run the control/test trial matrix, validate routes, aggregate results.

Validation is automatic: a route succeeds when every named street exists,
consecutive streets share an intersection, the first street matches or abuts
the origin, and the last street is the destination.  A manual-override file
can replace individual labels.  Trial records land in an append-only
``records.jsonl``; summaries are recomputed from it offline.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError, TaskDefinitionError
from .graph import SpatialGraph, street_adjacency
from .rag import (
    CONTROL,
    GROUPS,
    NavigationTask,
    ProviderConfig,
    assemble_prompt,
    build_context,
    generate,
)
from .errors import ProviderError, NetworkError

logger = logging.getLogger(__name__)

SUCCESS = "success"
FAILURE = "failure"
AUTO = "auto"
MANUAL = "manual-override"
UNKNOWN_PREFIX = "?"

_NUMBERED_ITEM = re.compile(r"^\s*\d+[.)]\s*(.+?)\s*$", re.MULTILINE)


@dataclass(frozen=True)
class RouteStep:
    raw: str
    street: str | None  # None when no known street matched

    def marker(self) -> str:
        return self.street if self.street is not None else UNKNOWN_PREFIX + self.raw


@dataclass(frozen=True)
class TrialRecord:
    task_id: str
    city: str
    provider: str
    group: str
    prompt_sha256: str
    completion: str
    route: tuple[str, ...]  # street names; unknown steps carry the "?" prefix
    label: str
    label_source: str
    reasons: tuple[str, ...]
    latency_s: float

    def to_json(self) -> str:
        doc = {
            "task_id": self.task_id,
            "city": self.city,
            "provider": self.provider,
            "group": self.group,
            "prompt_sha256": self.prompt_sha256,
            "completion": self.completion,
            "route": list(self.route),
            "label": self.label,
            "label_source": self.label_source,
            "reasons": list(self.reasons),
            "latency_s": self.latency_s,
        }
        return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    @staticmethod
    def from_json(line: str) -> "TrialRecord":
        doc = json.loads(line)
        return TrialRecord(
            task_id=doc["task_id"],
            city=doc["city"],
            provider=doc["provider"],
            group=doc["group"],
            prompt_sha256=doc["prompt_sha256"],
            completion=doc["completion"],
            route=tuple(doc["route"]),
            label=doc["label"],
            label_source=doc["label_source"],
            reasons=tuple(doc["reasons"]),
            latency_s=doc["latency_s"],
        )


def _norm(text: str) -> str:
    return unicodedata.normalize("NFC", text).casefold()


def parse_route(completion: str, known_streets) -> list[RouteStep]:
    """Extract an ordered street route from a completion.

    Numbered list items are matched against known streets (exact after
    Unicode normalization, then longest known substring).  Free prose falls
    back to scanning for known names in text order.  Unmatched items stay in
    the route as unknown steps.
    """
    canonical = {}
    for name in sorted(known_streets):
        canonical.setdefault(_norm(name), name)
    items = _NUMBERED_ITEM.findall(completion)
    if items:
        steps = []
        for item in items:
            key = _norm(item)
            if key in canonical:
                steps.append(RouteStep(item, canonical[key]))
                continue
            best = None
            for norm_name in canonical:
                if norm_name in key and (best is None or len(norm_name) > len(best)):
                    best = norm_name
            steps.append(RouteStep(item, canonical[best] if best else None))
        return steps
    if not canonical:
        return []
    # free prose: leftmost scan, longer names tried first at each position
    names_by_len = sorted(canonical, key=len, reverse=True)
    pattern = re.compile("|".join(re.escape(n) for n in names_by_len))
    return [
        RouteStep(m.group(0), canonical[m.group(0)])
        for m in pattern.finditer(_norm(completion))
    ]


def validate_route(
    graph: SpatialGraph, route, task: NavigationTask
) -> tuple[str, tuple[str, ...]]:
    """Label a route success/failure; failure carries the first violated condition."""
    if task.destination not in graph.street_index:
        raise TaskDefinitionError(
            f"task {task.id}: destination {task.destination!r} not in graph"
        )
    steps = [s if isinstance(s, RouteStep) else RouteStep(s, s) for s in route]
    if not steps:
        return (FAILURE, ("empty-route",))
    for step in steps:
        if step.street is None:
            return (FAILURE, (f"unknown-street: {step.raw}",))
    streets = [s.street for s in steps]
    adjacency = street_adjacency(graph)
    for a, b in zip(streets, streets[1:]):
        if a != b and b not in adjacency[a]:
            return (FAILURE, (f"disconnected: {a} -> {b}",))
    if task.origin in graph.street_index:
        first = streets[0]
        if first != task.origin and first not in adjacency[task.origin]:
            return (FAILURE, (f"wrong-start: {first}",))
    if streets[-1] != task.destination:
        return (FAILURE, (f"wrong-destination: {streets[-1]}",))
    return (SUCCESS, ())


def load_tasks(source: str | Path | bytes) -> list[NavigationTask]:
    """Read navigation tasks from a JSON file (list of task objects)."""
    raw = Path(source).read_bytes() if isinstance(source, (str, Path)) else source
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise TaskDefinitionError(f"tasks file is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise TaskDefinitionError("tasks file must be a JSON list")
    tasks = []
    for i, entry in enumerate(doc):
        try:
            tasks.append(
                NavigationTask(
                    id=entry["id"],
                    city=entry.get("city", ""),
                    origin=entry["origin"],
                    destination=entry["destination"],
                    expected_region=tuple(entry["expected_region"])
                    if entry.get("expected_region")
                    else None,
                    planted_route=tuple(entry["planted_route"])
                    if entry.get("planted_route")
                    else None,
                )
            )
        except (KeyError, TypeError) as exc:
            raise TaskDefinitionError(f"task entry {i} invalid: {exc}") from exc
    return tasks


def load_overrides(source: str | Path | bytes) -> dict[str, str]:
    """Manual label overrides: task id (or "task/provider/group") -> label."""
    raw = Path(source).read_bytes() if isinstance(source, (str, Path)) else source
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"override file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or any(v not in (SUCCESS, FAILURE) for v in doc.values()):
        raise ConfigurationError("override file must map ids to success/failure")
    return doc


def _run_one(task, provider, group, context, graph, run_dir):
    bundle = assemble_prompt(task, context if group != CONTROL else None)
    try:
        completion = generate(bundle, provider, log_dir=run_dir)
        steps = parse_route(completion.text, graph.street_index)
        label, reasons = validate_route(graph, steps, task)
        return TrialRecord(
            task_id=task.id,
            city=task.city,
            provider=provider.name,
            group=group,
            prompt_sha256=bundle.sha256(),
            completion=completion.text,
            route=tuple(s.marker() for s in steps),
            label=label,
            label_source=AUTO,
            reasons=reasons,
            latency_s=completion.latency_s,
        )
    except (ProviderError, NetworkError, ConfigurationError) as exc:
        logger.warning("trial %s/%s/%s failed: %s", task.id, provider.name, group, exc)
        return TrialRecord(
            task_id=task.id,
            city=task.city,
            provider=provider.name,
            group=group,
            prompt_sha256=bundle.sha256(),
            completion="",
            route=(),
            label=FAILURE,
            label_source=AUTO,
            reasons=(f"provider-error: {exc}",),
            latency_s=0.0,
        )


def _apply_override(record: TrialRecord, overrides: dict[str, str]) -> TrialRecord:
    key = f"{record.task_id}/{record.provider}/{record.group}"
    label = overrides.get(key, overrides.get(record.task_id))
    if label is None or label == record.label:
        return record
    return dataclasses.replace(record, label=label, label_source=MANUAL)


def run_experiment(
    tasks: list[NavigationTask],
    providers: list[ProviderConfig],
    groups,
    graph: SpatialGraph,
    *,
    run_dir: str | Path,
    scope: str = "whole-area",
    overrides: dict[str, str] | None = None,
) -> list[TrialRecord]:
    """Execute the task x provider x group matrix; resumable and deterministic.

    One record per trial, appended to ``records.jsonl`` in matrix order.
    Trials already present in the file are not re-run.  Provider failures
    become failure records, never dropped.
    """
    for group in groups:
        if group not in GROUPS:
            raise ConfigurationError(f"unknown group: {group!r}")
    for task in tasks:
        if task.destination not in graph.street_index:
            raise TaskDefinitionError(
                f"task {task.id}: destination {task.destination!r} not in graph"
            )
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    records_path = run_dir / "records.jsonl"
    existing: dict[tuple[str, str, str], TrialRecord] = {}
    if records_path.exists():
        for line in records_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = TrialRecord.from_json(line)
                existing[(rec.task_id, rec.provider, rec.group)] = rec

    overrides = overrides or {}
    context_cache: dict[str, str] = {}

    def context_for(task: NavigationTask) -> str:
        key = task.id if scope.startswith("k-hop") else "*"
        if key not in context_cache:
            context_cache[key] = build_context(graph, task, scope)
        return context_cache[key]

    matrix = [
        (task, provider, group) for task in tasks for provider in providers for group in groups
    ]
    pools = {
        p.name: ThreadPoolExecutor(max_workers=max(1, p.max_parallel)) for p in providers
    }
    futures = {}
    try:
        for task, provider, group in matrix:
            key = (task.id, provider.name, group)
            if key in existing:
                continue
            context = context_for(task) if group != CONTROL else None
            futures[key] = pools[provider.name].submit(
                _run_one, task, provider, group, context, graph, run_dir
            )
        results: list[TrialRecord] = []
        with records_path.open("a", encoding="utf-8") as fh:
            for task, provider, group in matrix:
                key = (task.id, provider.name, group)
                if key in existing:
                    results.append(existing[key])
                    continue
                record = _apply_override(futures[key].result(), overrides)
                fh.write(record.to_json() + "\n")
                results.append(record)
    finally:
        for pool in pools.values():
            pool.shutdown(wait=False)
    return results


@dataclass(frozen=True)
class SummaryRow:
    key: tuple[str, ...]
    count: int
    successes: int

    @property
    def failures(self) -> int:
        return self.count - self.successes

    @property
    def rate(self) -> float:
        return self.successes / self.count

    @property
    def rate_percent(self) -> str:
        """Success rate as a percentage, floored to one decimal ("62.5", "86.6", "70")."""
        tenths = self.successes * 1000 // self.count
        whole, frac = divmod(tenths, 10)
        return f"{whole}.{frac}" if frac else f"{whole}"


@dataclass(frozen=True)
class SummaryTable:
    keys: tuple[str, ...]
    rows: tuple[SummaryRow, ...]

    def render_text(self) -> str:
        headers = [k.capitalize() for k in self.keys] + [
            "# Experiments",
            "# Successful",
            "# Failed",
            "Success Rate (%)",
        ]
        body = [
            list(row.key)
            + [str(row.count), str(row.successes), str(row.failures), row.rate_percent + "%"]
            for row in self.rows
        ]
        widths = [
            max(len(headers[c]), *(len(r[c]) for r in body)) if body else len(headers[c])
            for c in range(len(headers))
        ]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
            "  ".join("-" * w for w in widths),
        ]
        for r in body:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"

    def render_csv(self) -> str:
        header = ",".join(list(self.keys) + ["count", "successes", "failures", "rate_percent"])
        lines = [header]
        for row in self.rows:
            lines.append(
                ",".join(
                    list(row.key)
                    + [str(row.count), str(row.successes), str(row.failures), row.rate_percent]
                )
            )
        return "\n".join(lines) + "\n"


def summarize(records, keys=("group",)) -> SummaryTable:
    """Aggregate records by the given keys ("group", "city", "provider")."""
    valid = {"group", "city", "provider"}
    for key in keys:
        if key not in valid:
            raise ConfigurationError(f"unknown summary key: {key!r}")
    buckets: dict[tuple[str, ...], list[TrialRecord]] = {}
    for rec in records:
        bucket_key = tuple(getattr(rec, k) for k in keys)
        buckets.setdefault(bucket_key, []).append(rec)
    rows = tuple(
        SummaryRow(
            key=key,
            count=len(recs),
            successes=sum(1 for r in recs if r.label == SUCCESS),
        )
        for key, recs in sorted(buckets.items())
    )
    return SummaryTable(keys=tuple(keys), rows=rows)
