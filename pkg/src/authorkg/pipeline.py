"""Pipeline orchestration: staged runs, digests, and the run manifest.

Each stage declares its upstream stages, input files, and output files. A
stage runs only when every upstream's recorded output digest still matches the
files on disk (otherwise the caller is told which stage to rerun), and
re-running a stage whose inputs have not changed is a no-op unless forced.
Outputs are written atomically; the manifest records timestamps, digests, and
the full config snapshot.
"""

from __future__ import annotations

import fcntl
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from . import aggregate as agg
from . import evaluation, ingest, rdf, simgraph, vectors
from .config import AppConfig
from .embedding import build_embedder
from .errors import DependencyError, UserError
from .keyphrase import ExtractorSpec, KeyphraseSet, build_extractor, extract_keyphrases
from .storage import (
    atomic_write_bytes,
    digest_files,
    digest_obj,
    read_json,
    read_jsonl,
    write_json,
    write_jsonl,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
LOCK_NAME = ".pipeline.lock"

PIPELINE_STAGES = ("ingest", "extract", "aggregate", "vectorize", "simgraph", "rdf")
ALL_STAGES = PIPELINE_STAGES + ("eval",)


class StaleUpstreamError(DependencyError):
    pass


@dataclass(frozen=True)
class StageDef:
    name: str
    deps: tuple[str, ...]
    inputs: tuple[str, ...]   # data_dir-relative file paths
    outputs: tuple[str, ...]
    config_sections: tuple[str, ...]
    run: Callable[[AppConfig, Path], None]


class PipelineLock:
    """Advisory lock on the data directory.

    Stages take it exclusively; the service takes it shared, so readers can
    coexist but a stage never runs concurrently with serving the same data.
    """

    def __init__(self, data_dir: Path, shared: bool = False):
        self.path = Path(data_dir) / LOCK_NAME
        self.shared = shared
        self._fh = None

    def __enter__(self) -> "PipelineLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a+")
        mode = fcntl.LOCK_SH if self.shared else fcntl.LOCK_EX
        try:
            fcntl.flock(self._fh, mode | fcntl.LOCK_NB)
        except OSError as exc:
            self._fh.close()
            self._fh = None
            raise DependencyError(
                f"data directory {self.path.parent} is locked by another process"
            ) from exc
        return self

    def __exit__(self, *exc_info) -> None:
        if self._fh is not None:
            fcntl.flock(self._fh, fcntl.LOCK_UN)
            self._fh.close()
            self._fh = None


class Manifest:
    def __init__(self, data_dir: Path):
        self.path = Path(data_dir) / MANIFEST_NAME
        self.data: dict[str, Any] = {"config": {}, "stages": {}}
        if self.path.exists():
            self.data = read_json(self.path)

    def stage(self, name: str) -> dict[str, Any] | None:
        return self.data["stages"].get(name)

    def record(self, name: str, input_digest: str, output_digest: str, config: AppConfig) -> None:
        self.data["config"] = config.snapshot()
        self.data["stages"][name] = {
            "completed_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "input_digest": input_digest,
            "output_digest": output_digest,
        }
        write_json(self.path, self.data)

    def digests(self) -> dict[str, Any]:
        return {
            name: {k: v for k, v in entry.items()}
            for name, entry in sorted(self.data["stages"].items())
        }


# ---------------------------------------------------------------------------
# stage bodies


def _load_keyphrase_sets(path: Path) -> dict[str, KeyphraseSet]:
    out = {}
    for row in read_jsonl(path):
        ks = KeyphraseSet.from_dict(row)
        out[ks.work_id] = ks
    return out


def _run_ingest(config: AppConfig, data_dir: Path) -> None:
    ic = config.ingest
    if ic.fixture_dir:
        source = ingest.FixturePageSource(ic.fixture_dir)
    else:
        source = ingest.ApiPageSource(
            seed_concept_id=ic.seed_concept_id,
            contact_email=ic.contact_email,
            page_size=ic.page_size,
            requests_per_second=ic.requests_per_second,
            max_retries=ic.max_retries,
        )
    records, summary = ingest.normalize_corpus(
        ingest.iter_harvest(source), ic.seed_concept_id, ic.min_year
    )
    logger.info(
        "ingest: fetched=%d kept=%d rejected_pre1990=%d rejected_no_date=%d",
        summary["fetched"], summary["kept"],
        summary["rejected_pre1990"], summary["rejected_no_date"],
    )
    ingest.save_corpus(data_dir / "corpus" / "works.jsonl", records)
    write_json(data_dir / "corpus" / "harvest_summary.json", summary)


def _run_extract(config: AppConfig, data_dir: Path) -> None:
    kc = config.keyphrase
    works = ingest.load_corpus(data_dir / "corpus" / "works.jsonl")
    spec = ExtractorSpec(
        kind=kc.kind, endpoint=kc.endpoint, model_name=kc.model_name,
        max_candidates=kc.max_candidates,
    )
    embedder = build_embedder(kc.embedder) if kc.kind == "embedding_rank" else None
    extractor = build_extractor(spec, embedder=embedder)

    def extract_one(work: ingest.WorkRecord) -> KeyphraseSet:
        return extract_keyphrases(
            work.title, work.abstract_text, extractor,
            max_title=kc.max_title, max_abstract=kc.max_abstract, work_id=work.work_id,
        )

    with_text = [w for w in works if w.has_text]
    skipped = len(works) - len(with_text)
    if skipped:
        logger.info("extract: skipping %d work(s) without title or abstract", skipped)
    with ThreadPoolExecutor(max_workers=config.ingest.parallelism) as pool:
        sets = list(pool.map(extract_one, with_text))
    sets.sort(key=lambda ks: ks.work_id)
    write_jsonl(data_dir / "corpus" / "keyphrases.jsonl", (ks.to_dict() for ks in sets))


def _run_aggregate(config: AppConfig, data_dir: Path) -> None:
    works = ingest.load_corpus(data_dir / "corpus" / "works.jsonl")
    ksets = _load_keyphrase_sets(data_dir / "corpus" / "keyphrases.jsonl")
    selected = ingest.select_top_authors(works, config.ingest.top_n_authors)
    aggregates = agg.build_aggregates(works, ksets, selected)
    agg.save_aggregates(data_dir / "corpus" / "aggregates.jsonl", aggregates)


def _run_vectorize(config: AppConfig, data_dir: Path) -> None:
    vc = config.vectors
    aggregates = agg.load_aggregates(data_dir / "corpus" / "aggregates.jsonl")
    weights = vectors.WeightConfig(
        f_p0=vc.f_p0, f_p1=vc.f_p1, f_p2=vc.f_p2,
        w_first=vc.w_first, w_nonfirst=vc.w_nonfirst,
        w_c=vc.w_c, w_pa=vc.w_pa, w_pt=vc.w_pt,
    )
    vocab = vectors.build_vocabulary(aggregates, size=vc.vocab_size)
    author_vectors = vectors.build_author_vectors(aggregates, vocab, weights)
    vectors.save_vocabulary(data_dir / "corpus" / "vocabulary.json", vocab, weights)
    vectors.save_vectors(data_dir / "corpus" / "vectors.jsonl", author_vectors, vocab, weights)


def _run_simgraph(config: AppConfig, data_dir: Path) -> None:
    index = simgraph.SimilarityIndex.from_artifacts(data_dir)
    index.save_neighbor_cache(
        data_dir / "corpus" / "neighbors.jsonl", k=config.simgraph.max_neighbors
    )


def _run_rdf(config: AppConfig, data_dir: Path) -> None:
    rc = config.rdf
    works = ingest.load_corpus(data_dir / "corpus" / "works.jsonl")
    ksets = _load_keyphrase_sets(data_dir / "corpus" / "keyphrases.jsonl")
    vocab, _ = vectors.load_vocabulary(data_dir / "corpus" / "vocabulary.json")
    resolver = rdf.WikidataResolver(
        cache_path=data_dir / "export" / "wikidata_cache.json",
        endpoint=rc.wikidata_endpoint,
        allow_network=rc.allow_network,
    )
    links: dict[str, rdf.WikidataLink] = {}
    names = {aff for _, aff in rdf.latest_affiliations(works).values() if aff}
    names.update(e.name for e in vocab.entries)
    for name in sorted(names):
        link = resolver.resolve(name)
        if link is not None:
            links[rdf.normalize_link_key(name)] = link
    graph = rdf.build_triples(works, ksets, vocab, links, rc.namespace)
    (data_dir / "export").mkdir(parents=True, exist_ok=True)
    atomic_write_bytes(data_dir / "export" / "graph.nt", rdf.serialize_graph(graph, "ntriples"))
    atomic_write_bytes(data_dir / "export" / "graph.ttl", rdf.serialize_graph(graph, "turtle"))


def _run_eval(config: AppConfig, data_dir: Path) -> None:
    root = data_dir / "eval"
    eval_config = evaluation.EvalConfig(
        tau=config.eval.tau, embedder=build_embedder(config.eval.embedder)
    )
    reports = {}
    for extractor in evaluation.list_extractors(root):
        report = evaluation.evaluate_sample(root, extractor, eval_config)
        evaluation.write_report(root, extractor, report)
        reports[extractor] = report
        logger.info(
            "eval: %s S=%.4f N=%d skipped=%d",
            extractor, report.dataset_score,
            report.n_documents_scored, report.n_documents_skipped,
        )
    if not reports:
        raise UserError(f"no extractor prediction directories under {root / 'predicted'}")
    evaluation.write_comparison(root, reports)


# ---------------------------------------------------------------------------
# stage table + runner

_CORPUS = "corpus"

STAGES: dict[str, StageDef] = {
    "ingest": StageDef(
        name="ingest", deps=(), inputs=(),
        outputs=(f"{_CORPUS}/works.jsonl", f"{_CORPUS}/harvest_summary.json"),
        config_sections=("ingest",), run=_run_ingest,
    ),
    "extract": StageDef(
        name="extract", deps=("ingest",), inputs=(f"{_CORPUS}/works.jsonl",),
        outputs=(f"{_CORPUS}/keyphrases.jsonl",),
        config_sections=("keyphrase",), run=_run_extract,
    ),
    "aggregate": StageDef(
        name="aggregate", deps=("ingest", "extract"),
        inputs=(f"{_CORPUS}/works.jsonl", f"{_CORPUS}/keyphrases.jsonl"),
        outputs=(f"{_CORPUS}/aggregates.jsonl",),
        config_sections=("ingest",), run=_run_aggregate,
    ),
    "vectorize": StageDef(
        name="vectorize", deps=("aggregate",), inputs=(f"{_CORPUS}/aggregates.jsonl",),
        outputs=(f"{_CORPUS}/vocabulary.json", f"{_CORPUS}/vectors.jsonl"),
        config_sections=("vectors",), run=_run_vectorize,
    ),
    "simgraph": StageDef(
        name="simgraph", deps=("aggregate", "vectorize"),
        inputs=(
            f"{_CORPUS}/works.jsonl", f"{_CORPUS}/aggregates.jsonl",
            f"{_CORPUS}/vocabulary.json", f"{_CORPUS}/vectors.jsonl",
        ),
        outputs=(f"{_CORPUS}/neighbors.jsonl",),
        config_sections=("simgraph",), run=_run_simgraph,
    ),
    "rdf": StageDef(
        name="rdf", deps=("ingest", "extract", "vectorize"),
        inputs=(
            f"{_CORPUS}/works.jsonl", f"{_CORPUS}/keyphrases.jsonl",
            f"{_CORPUS}/vocabulary.json",
        ),
        outputs=("export/graph.nt", "export/graph.ttl"),
        config_sections=("rdf",), run=_run_rdf,
    ),
    "eval": StageDef(
        name="eval", deps=(), inputs=(),
        outputs=("eval/comparison.tsv",),
        config_sections=("eval",), run=_run_eval,
    ),
}


def _stage_input_digest(stage: StageDef, config: AppConfig, data_dir: Path) -> str:
    sections = {s: config.section_snapshot(s) for s in stage.config_sections}
    file_digest = digest_files(data_dir / rel for rel in stage.inputs)
    extra = ""
    if stage.name == "ingest" and config.ingest.fixture_dir:
        extra = digest_files(sorted(Path(config.ingest.fixture_dir).glob("*.json")))
    return digest_obj({"config": sections, "files": file_digest, "extra": extra})


def _stage_output_digest(stage: StageDef, data_dir: Path) -> str:
    return digest_files(data_dir / rel for rel in stage.outputs)


def run_stage(stage_name: str, config: AppConfig, force: bool = False) -> bool:
    """Run one stage; returns True if it ran, False if it was an up-to-date no-op."""
    stage = STAGES.get(stage_name)
    if stage is None:
        raise UserError(f"unknown stage {stage_name!r} (expected one of {', '.join(STAGES)})")
    data_dir = Path(config.data_dir)
    manifest = Manifest(data_dir)

    for dep in stage.deps:
        entry = manifest.stage(dep)
        if entry is None:
            raise StaleUpstreamError(
                f"stage '{stage_name}' needs '{dep}' to run first", stage=dep
            )
        if _stage_output_digest(STAGES[dep], data_dir) != entry["output_digest"]:
            raise StaleUpstreamError(
                f"outputs of stage '{dep}' changed since it last ran; rerun '{dep}'", stage=dep
            )

    input_digest = _stage_input_digest(stage, config, data_dir)
    entry = manifest.stage(stage_name)
    if (
        not force
        and entry is not None
        and entry["input_digest"] == input_digest
        and all((data_dir / rel).exists() for rel in stage.outputs)
        and _stage_output_digest(stage, data_dir) == entry["output_digest"]
    ):
        logger.info("stage %s is up to date; skipping", stage_name)
        return False

    with PipelineLock(data_dir):
        logger.info("running stage %s", stage_name)
        started = time.monotonic()
        stage.run(config, data_dir)
        logger.info("stage %s finished in %.2fs", stage_name, time.monotonic() - started)
        manifest.record(stage_name, input_digest, _stage_output_digest(stage, data_dir), config)
    return True


def run_all(config: AppConfig, force: bool = False) -> list[str]:
    """Run the full pipeline chain; returns the stages that actually ran."""
    ran = []
    for name in PIPELINE_STAGES:
        if run_stage(name, config, force=force):
            ran.append(name)
    return ran
