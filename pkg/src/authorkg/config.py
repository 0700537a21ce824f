"""Configuration: defaults, file loading (JSON or YAML), and snapshots.

Config files mirror the dotted key scheme: a top-level section per pipeline
area, e.g. ``{"ingest": {"seed_concept_id": "C555008776"}}`` supplies
``ingest.seed_concept_id``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .errors import UserError


class ConfigError(UserError):
    pass


@dataclass
class IngestConfig:
    seed_concept_id: str = "C555008776"
    min_year: int = 1990
    top_n_authors: int = 10000
    parallelism: int = 4
    contact_email: str | None = None
    fixture_dir: str | None = None
    page_size: int = 200
    requests_per_second: float = 10.0
    max_retries: int = 5


@dataclass
class KeyphraseConfig:
    kind: str = "embedding_rank"  # embedding_rank | llm_http
    endpoint: str | None = None
    model_name: str | None = None
    max_title: int = 2
    max_abstract: int = 10
    max_candidates: int = 20
    embedder: str = "hash"


@dataclass
class EvalConfig:
    tau: float = 0.6
    embedder: str = "hash"


@dataclass
class VectorsConfig:
    vocab_size: int = 1000
    f_p0: float = 0.25
    f_p1: float = 0.5
    f_p2: float = 1.0
    w_first: float = 2.0
    w_nonfirst: float = 1.0
    w_c: float = 1.0
    w_pa: float = 1.0
    w_pt: float = 2.0


@dataclass
class SimgraphConfig:
    threshold: float = 0.35
    max_neighbors: int = 25
    community_max_iterations: int = 100


@dataclass
class RdfConfig:
    namespace: str = "https://example.org/kg/"
    allow_network: bool = False
    wikidata_endpoint: str = "https://www.wikidata.org/w/api.php"


@dataclass
class ServiceConfig:
    bind_addr: str = "127.0.0.1:8080"
    cors_origin: str = "*"
    ui_dir: str | None = None


@dataclass
class AppConfig:
    data_dir: str = "data"
    ingest: IngestConfig = field(default_factory=IngestConfig)
    keyphrase: KeyphraseConfig = field(default_factory=KeyphraseConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    vectors: VectorsConfig = field(default_factory=VectorsConfig)
    simgraph: SimgraphConfig = field(default_factory=SimgraphConfig)
    rdf: RdfConfig = field(default_factory=RdfConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def snapshot(self) -> dict[str, Any]:
        """Plain-dict view of the effective configuration (manifest / /api/meta)."""
        return dataclasses.asdict(self)

    def section_snapshot(self, section: str) -> dict[str, Any]:
        return dataclasses.asdict(getattr(self, section))


_SECTIONS = {
    "ingest": IngestConfig,
    "keyphrase": KeyphraseConfig,
    "eval": EvalConfig,
    "vectors": VectorsConfig,
    "simgraph": SimgraphConfig,
    "rdf": RdfConfig,
    "service": ServiceConfig,
}


def _build_section(name: str, cls: type, raw: Any) -> Any:
    if not isinstance(raw, dict):
        raise ConfigError(f"config section '{name}' must be a mapping, got {type(raw).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in config section '{name}': {', '.join(unknown)}")
    return cls(**raw)


def load_config(path: str | Path | None = None, data_dir: str | None = None) -> AppConfig:
    """Load config from a JSON/YAML file; missing file path -> defaults.

    ``data_dir`` (CLI --data-dir) overrides the file value when given.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
        try:
            if path.suffix.lower() in (".yaml", ".yml"):
                raw = yaml.safe_load(text) or {}
            else:
                raw = json.loads(text) if text.strip() else {}
        except (yaml.YAMLError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must contain a mapping at top level")

    unknown = sorted(set(raw) - set(_SECTIONS) - {"data_dir"})
    if unknown:
        raise ConfigError(f"unknown top-level config key(s): {', '.join(unknown)}")

    sections = {
        name: _build_section(name, cls, raw[name]) if name in raw else cls()
        for name, cls in _SECTIONS.items()
    }
    cfg = AppConfig(data_dir=raw.get("data_dir", "data"), **sections)
    if data_dir is not None:
        cfg.data_dir = data_dir
    _validate(cfg)
    return cfg


def _validate(cfg: AppConfig) -> None:
    if not (cfg.ingest.seed_concept_id.startswith("C") and cfg.ingest.seed_concept_id[1:].isdigit()):
        raise ConfigError(
            f"ingest.seed_concept_id must be 'C' followed by digits, got {cfg.ingest.seed_concept_id!r}"
        )
    if cfg.ingest.top_n_authors < 1:
        raise ConfigError("ingest.top_n_authors must be >= 1")
    if cfg.ingest.min_year < 1990:
        raise ConfigError("ingest.min_year must be >= 1990 (temporal periods start at 1990)")
    if cfg.ingest.parallelism < 1:
        raise ConfigError("ingest.parallelism must be >= 1")
    if not 0.0 <= cfg.eval.tau <= 1.0:
        raise ConfigError("eval.tau must lie in [0, 1]")
    if cfg.vectors.vocab_size < 1:
        raise ConfigError("vectors.vocab_size must be >= 1")
    for name in ("f_p0", "f_p1", "f_p2", "w_first", "w_nonfirst", "w_c", "w_pa", "w_pt"):
        if getattr(cfg.vectors, name) < 0:
            raise ConfigError(f"vectors.{name} must be >= 0")
    if cfg.keyphrase.kind not in ("embedding_rank", "llm_http"):
        raise ConfigError(f"keyphrase.kind must be embedding_rank or llm_http, got {cfg.keyphrase.kind!r}")
    if cfg.keyphrase.kind == "llm_http" and not cfg.keyphrase.endpoint:
        raise ConfigError("keyphrase.kind=llm_http requires keyphrase.endpoint")
    if not cfg.rdf.namespace.endswith("/"):
        raise ConfigError("rdf.namespace must end with '/'")
    if not 0.0 <= cfg.simgraph.threshold <= 1.0:
        raise ConfigError("simgraph.threshold must lie in [0, 1]")
