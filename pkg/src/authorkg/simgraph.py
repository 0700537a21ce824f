"""Author similarity retrieval and graph exploration.

Everything here reads an immutable in-memory index (vectors + aggregates +
vocabulary + author directory) built once from pipeline artifacts; queries are
pure functions of that index, so concurrent reads need no coordination.

Similarity is cosine over the non-negative descriptor vectors, which makes
scores live in [0, 1] and renders them invariant to uniform weight rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .aggregate import AuthorAggregate, load_aggregates
from .errors import AuthorKGError, NotFoundError
from .ingest import WorkRecord, load_corpus
from .keyphrase import normalize_descriptor
from .storage import read_jsonl, write_jsonl
from .vectors import AuthorVector, DescriptorVocabulary, load_vectors, load_vocabulary

DEFAULT_SIMILARITY_THRESHOLD = 0.35
DEFAULT_MAX_NEIGHBORS = 25
DEFAULT_COMMUNITY_MAX_ITERATIONS = 100


class AuthorNotFoundError(NotFoundError):
    pass


class DescriptorNotFoundError(NotFoundError):
    pass


class VocabularyMismatchError(AuthorKGError):
    pass


@dataclass(frozen=True)
class SimilarityEdge:
    author_a: str
    author_b: str
    score: float
    kind: str  # primary | secondary

    def to_dict(self) -> dict[str, Any]:
        return {
            "author_a": self.author_a,
            "author_b": self.author_b,
            "score": self.score,
            "kind": self.kind,
        }


@dataclass
class EgoGraph:
    center: str
    nodes: list[dict[str, Any]] = field(default_factory=list)
    edges: list[SimilarityEdge] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "center": self.center,
            "nodes": self.nodes,
            "edges": [e.to_dict() for e in self.edges],
        }


@dataclass
class SharedDescriptors:
    author_a: str
    author_b: str
    descriptors: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "author_a": self.author_a,
            "author_b": self.author_b,
            "descriptors": self.descriptors,
        }


def _sparse_cosine(u: Mapping[int, float], v: Mapping[int, float]) -> float:
    if not u or not v:
        return 0.0
    if u == v:
        return 1.0  # cos(x, x) is exactly 1; skip the float-noise route
    shared = u.keys() & v.keys()
    if not shared:
        return 0.0
    # fsum is correctly rounded, so the result is independent of component
    # order and cosine symmetry holds exactly
    dot = math.fsum(u[i] * v[i] for i in shared)
    if dot == 0.0:
        return 0.0
    norm_u = math.sqrt(math.fsum(x * x for x in u.values()))
    norm_v = math.sqrt(math.fsum(x * x for x in v.values()))
    return min(1.0, dot / (norm_u * norm_v))


def cosine_similarity(u: AuthorVector, v: AuthorVector) -> float:
    """Cosine over sparse components; 0 when either vector is zero."""
    if (
        u.vocab_digest is not None
        and v.vocab_digest is not None
        and u.vocab_digest != v.vocab_digest
    ):
        raise VocabularyMismatchError(
            f"vectors built against different vocabularies: {u.vocab_digest} vs {v.vocab_digest}"
        )
    return _sparse_cosine(u.components, v.components)


class SimilarityIndex:
    """Immutable read view over vectors, aggregates, and the author directory."""

    def __init__(
        self,
        vectors: Mapping[str, AuthorVector],
        aggregates: Mapping[str, AuthorAggregate],
        vocab: DescriptorVocabulary,
        display_names: Mapping[str, str] | None = None,
    ):
        self.vectors = dict(vectors)
        self.aggregates = dict(aggregates)
        self.vocab = vocab
        self.display_names = dict(display_names or {})
        self.author_ids = sorted(self.vectors)
        self.publication_counts = {
            a: agg.total_publications() for a, agg in self.aggregates.items()
        }
        self._coauthors: dict[str, dict[str, int]] = {}
        for author_id, agg in self.aggregates.items():
            merged: dict[str, int] = {}
            for bucket in agg.periods.values():
                for role in (bucket.first_author, bucket.non_first_author):
                    for other, count in role.co_authors.items():
                        merged[other] = merged.get(other, 0) + count
            self._coauthors[author_id] = merged

    @classmethod
    def from_artifacts(cls, data_dir: str | Path) -> "SimilarityIndex":
        data_dir = Path(data_dir)
        vectors, _ = load_vectors(data_dir / "corpus" / "vectors.jsonl")
        aggregates = load_aggregates(data_dir / "corpus" / "aggregates.jsonl")
        vocab, _ = load_vocabulary(data_dir / "corpus" / "vocabulary.json")
        works = load_corpus(data_dir / "corpus" / "works.jsonl")
        return cls(vectors, aggregates, vocab, display_names_from_corpus(works))

    # -- basics ------------------------------------------------------------

    def _require_author(self, author_id: str) -> AuthorVector:
        vec = self.vectors.get(author_id)
        if vec is None:
            raise AuthorNotFoundError(f"unknown author: {author_id}")
        return vec

    def display_name(self, author_id: str) -> str:
        return self.display_names.get(author_id, author_id)

    def publications(self, author_id: str) -> int:
        return self.publication_counts.get(author_id, 0)

    def coauthor_count(self, a: str, b: str) -> int:
        return self._coauthors.get(a, {}).get(b, 0)

    def similarity(self, a: str, b: str) -> float:
        return cosine_similarity(self._require_author(a), self._require_author(b))

    def _node(self, author_id: str, selected: bool = False) -> dict[str, Any]:
        node = {
            "author_id": author_id,
            "display_name": self.display_name(author_id),
            "nb_publications": self.publications(author_id),
        }
        if selected:
            node["selected"] = True
        return node

    # -- retrieval ---------------------------------------------------------

    def top_k_similar(self, center: str, k: int) -> list[tuple[str, float]]:
        """The k most similar authors (excluding center); exhaustive scan."""
        if k < 1:
            raise ValueError("k must be >= 1")
        center_vec = self._require_author(center)
        scored = [
            (other, cosine_similarity(center_vec, self.vectors[other]))
            for other in self.author_ids
            if other != center
        ]
        scored.sort(key=lambda item: (-item[1], item[0]))
        return scored[:k]

    def shared_descriptors(self, a: str, b: str) -> SharedDescriptors:
        """Common positive-weight descriptors, ranked by weight product."""
        vec_a = self._require_author(a)
        vec_b = self._require_author(b)
        rows = []
        for pos in vec_a.components.keys() & vec_b.components.keys():
            weight_a = vec_a.components[pos]
            weight_b = vec_b.components[pos]
            if weight_a > 0 and weight_b > 0:
                rows.append(
                    {
                        "name": self.vocab.name_of(pos),
                        "weight_a": weight_a,
                        "weight_b": weight_b,
                        "rank_score": weight_a * weight_b,
                    }
                )
        rows.sort(key=lambda r: (-r["rank_score"], r["name"]))
        return SharedDescriptors(author_a=a, author_b=b, descriptors=rows)

    def _primary_neighbors(
        self, center: str, threshold: float, max_neighbors: int
    ) -> list[tuple[str, float]]:
        center_vec = self.vectors[center]
        candidates = []
        coauthors = self._coauthors.get(center, {})
        for other in self.author_ids:
            if other == center:
                continue
            score = cosine_similarity(center_vec, self.vectors[other])
            if score > threshold or coauthors.get(other, 0) > 0:
                candidates.append((other, score))
        candidates.sort(key=lambda item: (-item[1], item[0]))
        return candidates[:max_neighbors]

    def ego_graph(
        self,
        center: str,
        similarity_threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
        max_neighbors: int = DEFAULT_MAX_NEIGHBORS,
    ) -> EgoGraph:
        """Primary edges join the center to similar or co-authoring authors;
        secondary edges extend one hop from those neighbors to authors outside
        the primary circle."""
        self._require_author(center)
        primary = self._primary_neighbors(center, similarity_threshold, max_neighbors)
        primary_ids = {a for a, _ in primary}
        edges = [
            SimilarityEdge(author_a=center, author_b=other, score=score, kind="primary")
            for other, score in primary
        ]
        secondary_nodes: list[str] = []
        seen_pairs = {frozenset((center, other)) for other, _ in primary}
        for neighbor, _ in primary:
            for far, far_score in self._primary_neighbors(
                neighbor, similarity_threshold, max_neighbors
            ):
                if far == center or far in primary_ids:
                    continue
                pair = frozenset((neighbor, far))
                if pair in seen_pairs:
                    continue
                seen_pairs.add(pair)
                edges.append(
                    SimilarityEdge(
                        author_a=neighbor, author_b=far, score=far_score, kind="secondary"
                    )
                )
                if far not in secondary_nodes:
                    secondary_nodes.append(far)
        nodes = [self._node(center, selected=True)]
        nodes.extend(self._node(a) for a, _ in primary)
        nodes.extend(self._node(a) for a in sorted(secondary_nodes))
        edges.sort(key=lambda e: (e.kind != "primary", e.author_a, e.author_b))
        return EgoGraph(center=center, nodes=nodes, edges=edges)

    def authors_by_descriptor(self, descriptor: str) -> list[tuple[str, int]]:
        """Authors holding the descriptor, ranked by publication count."""
        name = normalize_descriptor(descriptor)
        position = self.vocab.index.get(name)
        if position is None:
            raise DescriptorNotFoundError(f"descriptor not in vocabulary: {descriptor}")
        holders = [
            (author_id, self.publications(author_id))
            for author_id in self.author_ids
            if self.vectors[author_id].components.get(position, 0.0) > 0.0
        ]
        holders.sort(key=lambda item: (-item[1], item[0]))
        return holders

    # -- communities ---------------------------------------------------------

    def detect_communities(
        self,
        threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
        max_iterations: int = DEFAULT_COMMUNITY_MAX_ITERATIONS,
    ) -> dict[str, str]:
        """Synchronous label propagation over the cosine > threshold graph.

        Deterministic: every node adopts the most frequent neighbor label with
        lexicographic tie-breaks, all updates computed from the previous
        iteration. Labels only travel along edges, so disconnected components
        can never share a community.
        """
        adjacency: dict[str, list[str]] = {a: [] for a in self.author_ids}
        for i, a in enumerate(self.author_ids):
            vec_a = self.vectors[a]
            for b in self.author_ids[i + 1 :]:
                if cosine_similarity(vec_a, self.vectors[b]) > threshold:
                    adjacency[a].append(b)
                    adjacency[b].append(a)
        labels = {a: a for a in self.author_ids}
        for _ in range(max_iterations):
            updated = {}
            changed = False
            for author_id in self.author_ids:
                neighbors = adjacency[author_id]
                if not neighbors:
                    updated[author_id] = labels[author_id]
                    continue
                counts: dict[str, int] = {}
                for n in neighbors:
                    counts[labels[n]] = counts.get(labels[n], 0) + 1
                best = sorted(counts.items(), key=lambda item: (-item[1], item[0]))[0][0]
                updated[author_id] = best
                changed = changed or best != labels[author_id]
            labels = updated
            if not changed:
                break
        return {a: labels[a] for a in self.author_ids}

    # -- profiles ------------------------------------------------------------

    def wordcloud_frequencies(self, author_id: str, top_n: int) -> list[tuple[str, float]]:
        """Top descriptors with weights rescaled so the maximum is 1.0."""
        vec = self._require_author(author_id)
        if not vec.components:
            return []
        ranked = sorted(
            ((self.vocab.name_of(pos), weight) for pos, weight in vec.components.items()),
            key=lambda item: (-item[1], item[0]),
        )[:top_n]
        peak = ranked[0][1]
        return [(name, weight / peak) for name, weight in ranked]

    # -- caches ----------------------------------------------------------------

    def save_neighbor_cache(self, path: Path, k: int = DEFAULT_MAX_NEIGHBORS) -> None:
        rows = []
        for author_id in self.author_ids:
            neighbors = self.top_k_similar(author_id, k)
            rows.append(
                {
                    "author_id": author_id,
                    "neighbors": [{"author_id": a, "score": s} for a, s in neighbors],
                }
            )
        write_jsonl(path, rows)


def display_names_from_corpus(works: Iterable[WorkRecord]) -> dict[str, str]:
    """Latest-work display name per author (ties: greatest work_id)."""
    latest: dict[str, tuple[str, str, str]] = {}
    for work in works:
        for ref in work.authorships:
            key = (work.publication_date, work.work_id, ref.display_name)
            if ref.author_id not in latest or key > latest[ref.author_id]:
                latest[ref.author_id] = key
    return {author_id: name for author_id, (_, _, name) in latest.items()}


def load_neighbor_cache(path: Path) -> dict[str, list[tuple[str, float]]]:
    out = {}
    for row in read_jsonl(path):
        out[row["author_id"]] = [(n["author_id"], n["score"]) for n in row["neighbors"]]
    return out
