"""Prompt assembly and the language-model gateway.

Bundles are deterministic functions of task + context.  Only
:func:`generate` talks to the network; providers named ``mock:<strategy>``
answer locally and deterministically, which keeps experiment runs
reproducible byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import ConfigurationError, NotFoundError, ProviderError, TaskDefinitionError
from .graph import SpatialGraph, street_adjacency
from .verbalize import verbalize_area

logger = logging.getLogger(__name__)

PROMPT_TEMPLATE_VERSION = 1
SYSTEM_TEXT_CONTROL = "You are a pedestrian navigation assistant."
SYSTEM_TEXT_CONTEXT = (
    "You are a pedestrian navigation assistant. Use only the street descriptions provided."
)
CONTEXT_HEADER = "--- STREET DESCRIPTIONS ---"
CONTEXT_FOOTER = "--- END STREET DESCRIPTIONS ---"

CONTROL = "control"
TEST = "test"
GROUPS = (CONTROL, TEST)

WHOLE_AREA = "whole-area"

MAX_ATTEMPTS = 3
BACKOFF_BASE_S = 0.5

_sleep = time.sleep  # patched in tests


@dataclass(frozen=True)
class NavigationTask:
    id: str
    city: str
    origin: str  # street name or named place
    destination: str  # street name
    expected_region: tuple[float, float, float, float] | None = None
    planted_route: tuple[str, ...] | None = None  # consumed by mock:echo-route only

    def __post_init__(self):
        if self.origin == self.destination:
            raise TaskDefinitionError(f"task {self.id}: origin equals destination")


@dataclass(frozen=True)
class PromptBundle:
    task: NavigationTask
    group: str  # control | test
    system_text: str
    user_text: str
    context: str | None = None

    def sha256(self) -> str:
        payload = json.dumps(
            {
                "task": self.task.id,
                "group": self.group,
                "system": self.system_text,
                "user": self.user_text,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class ProviderConfig:
    name: str
    endpoint_url: str = ""
    model: str = ""
    credential_env: str = ""
    timeout_s: float = 60.0
    max_parallel: int = 1

    @property
    def is_mock(self) -> bool:
        return self.name.startswith("mock:")


@dataclass(frozen=True)
class Completion:
    text: str
    latency_s: float
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


def parse_scope(scope: str) -> tuple[str, int | None]:
    """Normalize a scope string: "whole-area" or "k-hop:<k>"."""
    if scope == WHOLE_AREA:
        return (WHOLE_AREA, None)
    if scope.startswith("k-hop:"):
        try:
            k = int(scope.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad k-hop scope: {scope!r}") from None
        if k < 0:
            raise ConfigurationError(f"bad k-hop scope: {scope!r}")
        return ("k-hop", k)
    raise ConfigurationError(f"unknown scope: {scope!r}")


def build_context(graph: SpatialGraph, task: NavigationTask, scope: str = WHOLE_AREA) -> str:
    """Verbalized context for the task: the whole area or a k-hop neighborhood."""
    kind, k = parse_scope(scope)
    if kind == WHOLE_AREA:
        return verbalize_area(graph).rendered
    for endpoint in (task.origin, task.destination):
        if endpoint not in graph.street_index:
            raise NotFoundError(f"k-hop scope needs graph streets; unknown: {endpoint!r}")
    adjacency = street_adjacency(graph)
    selected: set[str] = set()
    for root in (task.origin, task.destination):
        frontier = {root}
        selected.add(root)
        for _ in range(k):
            frontier = {n for cur in frontier for n in adjacency[cur]} - selected
            selected |= frontier
    return verbalize_area(graph, streets=selected).rendered


def assemble_prompt(task: NavigationTask, context: str | None = None) -> PromptBundle:
    """Deterministic prompt bundle; control when no context is given."""
    where = f" in {task.city}" if task.city else ""
    question = (
        f"Give step-by-step walking directions from {task.origin} to "
        f"{task.destination}{where}. Answer as a numbered list of street names."
    )
    if context is None:
        return PromptBundle(task, CONTROL, SYSTEM_TEXT_CONTROL, question, None)
    user_text = f"{CONTEXT_HEADER}\n{context}\n{CONTEXT_FOOTER}\n\n{question}"
    return PromptBundle(task, TEST, SYSTEM_TEXT_CONTEXT, user_text, context)


def load_provider_configs(source: str | Path | bytes) -> list[ProviderConfig]:
    """Read provider configs from a JSON file (list or {"providers": [...]})."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        raw = Path(source).read_bytes()
    else:
        raw = source if isinstance(source, bytes) else str(source).encode()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"provider config is not valid JSON: {exc}") from exc
    entries = doc.get("providers") if isinstance(doc, dict) else doc
    if not isinstance(entries, list):
        raise ConfigurationError("provider config must be a list of provider objects")
    configs = []
    for i, entry in enumerate(entries):
        try:
            configs.append(
                ProviderConfig(
                    name=entry["name"],
                    endpoint_url=entry.get("endpoint_url", ""),
                    model=entry.get("model", ""),
                    credential_env=entry.get("credential_env", ""),
                    timeout_s=float(entry.get("timeout_s", 60.0)),
                    max_parallel=int(entry.get("max_parallel", 1)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"provider entry {i} invalid: {exc}") from exc
    return configs


def resolve_provider(name: str, configs: list[ProviderConfig] | None = None) -> ProviderConfig:
    """Find a named provider; mock providers need no config entry."""
    if name.startswith("mock:"):
        return ProviderConfig(name=name)
    for cfg in configs or []:
        if cfg.name == name:
            return cfg
    raise ConfigurationError(f"provider {name!r} not found in config")


def _stable_digits(task_id: str) -> int:
    return int(hashlib.sha256(task_id.encode()).hexdigest()[:8], 16)


def _mock_completion(bundle: PromptBundle, strategy: str) -> Completion:
    if strategy == "echo-route":
        route = bundle.task.planted_route or (bundle.task.destination,)
        text = "\n".join(f"{i}. {name}" for i, name in enumerate(route, start=1))
    elif strategy == "hallucinate":
        n = _stable_digits(bundle.task.id) % 900 + 100
        fabricated = (f"Erfundene Allee {n}", f"Phantomgasse {n + 1}", f"Trugbildweg {n + 2}")
        text = "\n".join(f"{i}. {name}" for i, name in enumerate(fabricated, start=1))
    else:
        raise ConfigurationError(f"unknown mock strategy: {strategy!r}")
    return Completion(text=text, latency_s=0.0)


def _log_exchange(log_dir, provider, bundle, request, outcome) -> None:
    if log_dir is None:
        return
    path = Path(log_dir) / "requests.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    entry = {
        "provider": provider.name,
        "task": bundle.task.id,
        "group": bundle.group,
        "request": request,  # credential never included
        "outcome": outcome,
    }
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")


def generate(bundle: PromptBundle, provider: ProviderConfig, *, log_dir=None) -> Completion:
    """Obtain a completion for the bundle from the given provider.

    Mock providers answer locally.  Real providers speak generic
    chat-completion JSON over HTTP with bounded retries and exponential
    backoff; credentials come from the configured environment variable and
    are never logged.
    """
    if provider.is_mock:
        completion = _mock_completion(bundle, provider.name.split(":", 1)[1])
        _log_exchange(
            log_dir, provider, bundle, {"strategy": provider.name}, {"text": completion.text}
        )
        return completion

    credential = os.environ.get(provider.credential_env or "") or ""
    if not credential:
        raise ConfigurationError(
            f"provider {provider.name}: credential env var {provider.credential_env!r} not set"
        )
    payload = {
        "model": provider.model,
        "messages": [
            {"role": "system", "content": bundle.system_text},
            {"role": "user", "content": bundle.user_text},
        ],
    }
    last_error = None
    start = time.perf_counter()
    for attempt in range(MAX_ATTEMPTS):
        if attempt:
            _sleep(BACKOFF_BASE_S * 2 ** (attempt - 1))
        try:
            response = requests.post(
                provider.endpoint_url,
                json=payload,
                headers={"Authorization": f"Bearer {credential}"},
                timeout=provider.timeout_s,
            )
        except requests.RequestException as exc:
            last_error = f"request failed: {exc}"
            logger.warning("provider %s attempt %d: %s", provider.name, attempt + 1, exc)
            continue
        if response.status_code == 429 or response.status_code >= 500:
            last_error = f"HTTP {response.status_code}"
            logger.warning(
                "provider %s attempt %d: %s", provider.name, attempt + 1, last_error
            )
            continue
        if response.status_code != 200:
            _log_exchange(log_dir, provider, bundle, payload, {"error": f"HTTP {response.status_code}"})
            raise ProviderError(f"provider {provider.name} returned HTTP {response.status_code}")
        try:
            doc = response.json()
            text = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            _log_exchange(log_dir, provider, bundle, payload, {"error": f"bad payload: {exc}"})
            raise ProviderError(f"provider {provider.name} returned unusable payload: {exc}") from exc
        usage = doc.get("usage") or {}
        completion = Completion(
            text=text,
            latency_s=time.perf_counter() - start,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
        )
        _log_exchange(log_dir, provider, bundle, payload, {"text": text})
        return completion
    _log_exchange(log_dir, provider, bundle, payload, {"error": last_error})
    raise ProviderError(
        f"provider {provider.name} failed after {MAX_ATTEMPTS} attempts: {last_error}"
    )
