"""Read-only HTTP API over a loaded similarity index.

Every endpoint is a pure function of (index, request): the index is built once
at startup from pipeline artifacts and never mutated, so identical requests
always produce identical bodies.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .config import AppConfig
from .errors import AuthorKGError, NotFoundError, UserError
from .pipeline import Manifest
from .simgraph import SimilarityIndex

logger = logging.getLogger(__name__)

REQUIRED_ARTIFACTS = (
    "corpus/works.jsonl",
    "corpus/aggregates.jsonl",
    "corpus/vocabulary.json",
    "corpus/vectors.jsonl",
)


class ApiError(AuthorKGError):
    """Error surfaced as a JSON body with a machine-readable code."""

    STATUS = {"not_found": 404, "bad_request": 400, "index_not_ready": 503}

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.http_status = self.STATUS[code]


def _check_artifacts(data_dir: Path) -> None:
    missing = [rel for rel in REQUIRED_ARTIFACTS if not (data_dir / rel).exists()]
    if missing:
        raise UserError(
            "cannot serve: missing pipeline artifacts "
            + ", ".join(missing)
            + f" under {data_dir} — run the pipeline first (authorkg all)"
        )


def create_app(
    config: AppConfig,
    index: SimilarityIndex | None = None,
    load_index: bool = True,
) -> FastAPI:
    """Build the API app; loads the index from config.data_dir unless given one."""
    data_dir = Path(config.data_dir)
    if index is None and load_index:
        _check_artifacts(data_dir)
        index = SimilarityIndex.from_artifacts(data_dir)
        logger.info("index loaded: %d authors, %d descriptors", len(index.author_ids),
                    len(index.vocab))

    app = FastAPI(title="authorkg", docs_url=None, redoc_url=None)
    app.state.index = index
    app.state.config = config

    app.add_middleware(
        CORSMiddleware,
        allow_origins=[config.service.cors_origin],
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def api_error_handler(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status, content={"code": exc.code, "message": str(exc)}
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(
        _request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"code": "bad_request", "message": str(exc.errors())}
        )

    def get_index() -> SimilarityIndex:
        if app.state.index is None:
            raise ApiError("index_not_ready", "index not loaded; run the pipeline and restart")
        return app.state.index

    def author_entry(idx: SimilarityIndex, author_id: str) -> dict[str, Any]:
        return {
            "author_id": author_id,
            "display_name": idx.display_name(author_id),
            "nb_publications": idx.publications(author_id),
        }

    def positive(value: int, name: str) -> int:
        if value < 1:
            raise ApiError("bad_request", f"{name} must be >= 1")
        return value

    def threshold_in_range(value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ApiError("bad_request", "threshold must lie in [0, 1]")
        return value

    def wrap_not_found(fn, *args):
        try:
            return fn(*args)
        except NotFoundError as exc:
            raise ApiError("not_found", str(exc)) from exc

    @app.get("/api/authors/search")
    def authors_search(q: str = Query(""), limit: int = Query(50)) -> JSONResponse:
        idx = get_index()
        if not q:
            raise ApiError("bad_request", "query parameter q must be non-empty")
        positive(limit, "limit")
        needle = q.lower()
        hits = [
            author_entry(idx, a)
            for a in idx.author_ids
            if needle in idx.display_name(a).lower()
        ]
        hits.sort(key=lambda h: (-h["nb_publications"], h["author_id"]))
        return JSONResponse(hits[:limit])

    @app.get("/api/descriptors/search")
    def descriptors_search(q: str = Query(""), limit: int = Query(50)) -> JSONResponse:
        idx = get_index()
        if not q:
            raise ApiError("bad_request", "query parameter q must be non-empty")
        positive(limit, "limit")
        needle = q.lower()
        hits = [
            {"name": e.name, "corpus_frequency": e.corpus_frequency}
            for e in idx.vocab.entries
            if needle in e.name
        ]
        hits.sort(key=lambda h: (-h["corpus_frequency"], h["name"]))
        return JSONResponse(hits[:limit])

    @app.get("/api/descriptors/{name}/authors")
    def descriptor_authors(name: str) -> JSONResponse:
        idx = get_index()
        ranked = wrap_not_found(idx.authors_by_descriptor, name)
        return JSONResponse(
            {
                "descriptor": name,
                "authors": [author_entry(idx, a) for a, _ in ranked],
            }
        )

    @app.get("/api/authors/{author_id}")
    def author_profile(author_id: str) -> JSONResponse:
        idx = get_index()
        if author_id not in idx.vectors:
            raise ApiError("not_found", f"unknown author: {author_id}")
        aggregate = idx.aggregates.get(author_id)
        periods = {}
        if aggregate is not None:
            for key, bucket in aggregate.periods.items():
                periods[key] = {
                    "nb_publications": bucket.nb_publications,
                    "nb_publications_first_author": bucket.nb_publications_first_author,
                    "nb_publications_non_first_author": bucket.nb_publications_non_first_author,
                    "nb_publications_corresponding": bucket.nb_publications_corresponding,
                }
        top = idx.wordcloud_frequencies(author_id, 10)
        profile = author_entry(idx, author_id)
        profile["periods"] = periods
        profile["top_descriptors"] = [{"name": n, "weight": w} for n, w in top]
        return JSONResponse(profile)

    @app.get("/api/authors/{author_id}/ego")
    def author_ego(
        author_id: str,
        threshold: float | None = Query(None),
        max_neighbors: int | None = Query(None, alias="max"),
    ) -> JSONResponse:
        idx = get_index()
        cfg = app.state.config.simgraph
        t = threshold_in_range(threshold if threshold is not None else cfg.threshold)
        m = positive(max_neighbors if max_neighbors is not None else cfg.max_neighbors, "max")
        graph = wrap_not_found(idx.ego_graph, author_id, t, m)
        return JSONResponse(graph.to_dict())

    @app.get("/api/authors/{author_id}/similar")
    def author_similar(author_id: str, k: int = Query(10)) -> JSONResponse:
        idx = get_index()
        positive(k, "k")
        ranked = wrap_not_found(idx.top_k_similar, author_id, k)
        return JSONResponse(
            {
                "author_id": author_id,
                "results": [
                    {
                        "author_id": a,
                        "display_name": idx.display_name(a),
                        "score": score,
                    }
                    for a, score in ranked
                ],
            }
        )

    @app.get("/api/authors/{a}/shared/{b}")
    def authors_shared(a: str, b: str) -> JSONResponse:
        idx = get_index()
        shared = wrap_not_found(idx.shared_descriptors, a, b)
        return JSONResponse(shared.to_dict())

    @app.get("/api/authors/{author_id}/wordcloud")
    def author_wordcloud(author_id: str, n: int = Query(40)) -> JSONResponse:
        idx = get_index()
        positive(n, "n")
        rows = wrap_not_found(idx.wordcloud_frequencies, author_id, n)
        return JSONResponse(
            {
                "author_id": author_id,
                "descriptors": [{"name": name, "weight": weight} for name, weight in rows],
            }
        )

    @app.get("/api/communities")
    def communities(threshold: float | None = Query(None)) -> JSONResponse:
        idx = get_index()
        cfg = app.state.config.simgraph
        t = threshold_in_range(threshold if threshold is not None else cfg.threshold)
        mapping = idx.detect_communities(t, cfg.community_max_iterations)
        return JSONResponse({"threshold": t, "communities": mapping})

    @app.get("/api/meta")
    def meta() -> JSONResponse:
        manifest = Manifest(Path(app.state.config.data_dir))
        return JSONResponse(
            {
                "config": app.state.config.snapshot(),
                "manifest": manifest.digests(),
            }
        )

    ui_dir = config.service.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
        logger.info("serving UI bundle from %s", ui_dir)

    return app


def bind_address(config: AppConfig) -> tuple[str, int]:
    addr = config.service.bind_addr
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise UserError(f"service.bind_addr must look like host:port, got {addr!r}")
    return host, int(port)
