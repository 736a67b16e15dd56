"""Run configuration: defaults, then a JSON file, then command-line overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from pseudopairs.errors import DataError
from pseudopairs.exemplar import SelectionPolicy
from pseudopairs.fingerprints import FingerprintParams
from pseudopairs.llm_client import ClientConfig
from pseudopairs.retrieval import DEFAULT_K


@dataclass(frozen=True)
class PathsConfig:
    db: str | None = None
    exclusions: tuple[str, ...] = ()
    inputs: str | None = None
    output: str | None = None


@dataclass(frozen=True)
class RunConfig:
    fingerprint: FingerprintParams = field(default_factory=FingerprintParams)
    k: int = DEFAULT_K
    temperature: float = 1.0
    client: ClientConfig = field(default_factory=ClientConfig)
    template_path: str | None = None
    paths: PathsConfig = field(default_factory=PathsConfig)
    workers: int = 4
    seed: int = 0
    max_prompt_chars: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise DataError("k must be at least 1")
        if self.workers < 1:
            raise DataError("workers must be at least 1")

    @property
    def policy(self) -> SelectionPolicy:
        return SelectionPolicy(temperature=self.temperature, seed=self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, doc, where: str):
    if not isinstance(doc, dict):
        raise DataError(f"config section {where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise DataError(f"unknown config keys in {where}: {unknown}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad config section {where}: {exc}") from exc


def config_from_dict(doc: dict) -> RunConfig:
    doc = dict(doc)
    nested = {
        "fingerprint": FingerprintParams,
        "client": ClientConfig,
        "paths": PathsConfig,
    }
    for key, cls in nested.items():
        if key in doc:
            section = dict(doc[key]) if isinstance(doc[key], dict) else doc[key]
            if key == "paths" and isinstance(section, dict) and "exclusions" in section:
                section["exclusions"] = tuple(section["exclusions"])
            doc[key] = _build(cls, section, key)
    return _build(RunConfig, doc, "top level")


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None overrides; flags always win over the file."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg
