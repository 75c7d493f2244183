"""Config files: nested or dotted keys, JSON or YAML."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import yaml

from .core import TokenBudget, ValidationError
from .engine import EngineConfig, RenderTemplate, StrategyKind
from .qa import QA_BACKENDS

DEFAULT_MS_MAX = 512

_REMOTE_KEYS = ("endpoint", "timeout_s", "retries", "max_inflight")

KNOWN_KEYS = frozenset(
    {
        "budget.ms_max", "budget.sm_limit", "budget.threshold", "budget.eec_max_tokens",
        "tokenizer.name",
        "summarizer.name", "entity_extractor.name", "qa.name",
        "render.separator",
        "strategy",
    }
    | {f"render.labels.{k}" for k in ("passage", "key_facts", "summary", "conversation", "question")}
    | {f"{b}.{k}" for b in ("summarizer", "entity_extractor", "qa") for k in _REMOTE_KEYS}
)


class ConfigError(ValidationError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


def flatten(tree: Mapping, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def read_config_file(path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            tree = json.loads(text)
        else:
            tree = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if tree is None:
        tree = {}
    if not isinstance(tree, Mapping):
        raise ConfigError(f"config {path} must be a mapping")
    return flatten(tree)


def _typed(flat: dict, key: str, kind, default):
    if key not in flat:
        return default
    value = flat[key]
    if value is None and default is None:
        return None
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if isinstance(value, bool) or not isinstance(value, kinds):
        names = "/".join(k.__name__ for k in kinds)
        raise ConfigError(f"config key {key!r} must be {names}, got {value!r}", key)
    return value


def build_config(flat: Mapping[str, Any]) -> EngineConfig:
    flat = dict(flat)
    for key in sorted(flat):
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}", key)

    fields = dict(
        ms_max=_typed(flat, "budget.ms_max", int, DEFAULT_MS_MAX),
        sm_limit=_typed(flat, "budget.sm_limit", int, 120),
        unc_floor_fraction=float(_typed(flat, "budget.threshold", (int, float), 0.75)),
        eec_max_tokens=_typed(flat, "budget.eec_max_tokens", int, None),
    )
    try:
        budget = TokenBudget(**fields)
    except ValidationError as exc:
        raise ConfigError(f"budget: {exc}", "budget") from exc

    labels = {
        k: _typed(flat, f"render.labels.{k}", str, getattr(RenderTemplate, k))
        for k in ("passage", "key_facts", "summary", "conversation", "question")
    }
    template = RenderTemplate(**labels, separator=_typed(flat, "render.separator", str, "\n\n"))

    options = {}
    for backend in ("summarizer", "entity_extractor", "qa"):
        opts = {k: flat[f"{backend}.{k}"] for k in _REMOTE_KEYS if f"{backend}.{k}" in flat}
        if opts:
            options[backend] = opts

    qa = _typed(flat, "qa.name", str, "stub-overlap")
    if qa not in QA_BACKENDS:
        raise ConfigError(f"unknown qa backend {qa!r} (config key 'qa.name')", "qa.name")
    try:
        strategy = StrategyKind.parse(_typed(flat, "strategy", str, "acm"))
    except ValidationError as exc:
        raise ConfigError(f"config key 'strategy': {exc}", "strategy") from exc

    names = {}
    for key, default in (("tokenizer.name", "reference-ws"),
                         ("summarizer.name", "reference-extractive"),
                         ("entity_extractor.name", "reference-rules")):
        names[key.split(".")[0]] = _typed(flat, key, str, default)
    try:
        return EngineConfig(budget=budget, qa=qa, template=template, strategy=strategy,
                            backend_options=options, **names)
    except ValidationError as exc:
        key = next((k for k in ("tokenizer.name", "summarizer.name", "entity_extractor.name")
                    if str(flat.get(k)) in str(exc)), None)
        raise ConfigError(f"{exc} (config key {key!r})", key) from exc


def load_config(path=None, overrides: Mapping[str, Any] | None = None) -> EngineConfig:
    flat = read_config_file(path) if path else {}
    if overrides:
        flat.update(overrides)
    return build_config(flat)


def make_qa_backend(config: EngineConfig):
    return QA_BACKENDS.create(config.qa, **config.backend_options.get("qa", {}))
