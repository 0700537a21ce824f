from __future__ import annotations

import math
import random

import pytest

from authorkg.aggregate import AuthorAggregate, PeriodBucket, RoleBucket
from authorkg.simgraph import (
    AuthorNotFoundError,
    DescriptorNotFoundError,
    SimilarityIndex,
    VocabularyMismatchError,
    cosine_similarity,
    display_names_from_corpus,
)
from authorkg.vectors import AuthorVector, DescriptorVocabulary, VocabEntry


def vocab_of_size(n):
    return DescriptorVocabulary(
        entries=[VocabEntry(f"descriptor{i:03d}", "concept", n - i) for i in range(n)]
    )


def vec(author_id, components, digest=None):
    return AuthorVector(author_id=author_id, components=components, vocab_digest=digest)


def agg(author_id, nb, coauthors=None):
    bucket = PeriodBucket(
        nb_publications=nb,
        nb_publications_first_author=nb,
        first_author=RoleBucket(co_authors=dict(coauthors or {})),
    )
    return AuthorAggregate(author_id=author_id, periods={"2011-2023": bucket})


def make_index(vectors, coauthors=None, names=None, vocab=None):
    aggregates = {
        a: agg(a, nb=i + 1, coauthors=(coauthors or {}).get(a))
        for i, a in enumerate(sorted(vectors))
    }
    return SimilarityIndex(
        vectors={a: vec(a, c) for a, c in vectors.items()},
        aggregates=aggregates,
        vocab=vocab or vocab_of_size(64),
        display_names=names or {},
    )


# ---------------------------------------------------------------------------
# cosine


def test_cosine_self_similarity_is_exactly_one():
    v = vec("A1", {0: 0.3, 5: 2.7})
    assert cosine_similarity(v, v) == 1.0


def test_cosine_disjoint_supports_is_zero():
    assert cosine_similarity(vec("A1", {0: 1.0}), vec("A2", {1: 1.0})) == 0.0


def test_cosine_hand_example():
    u = vec("A1", {0: 1.0, 1: 2.0})
    v = vec("A2", {0: 2.0, 1: 1.0})
    assert cosine_similarity(u, v) == pytest.approx(0.8, abs=1e-12)


def test_cosine_zero_vector_is_zero():
    assert cosine_similarity(vec("A1", {}), vec("A2", {0: 1.0})) == 0.0


def test_cosine_vocab_mismatch_raises():
    u = vec("A1", {0: 1.0}, digest="aaaa")
    v = vec("A2", {0: 1.0}, digest="bbbb")
    with pytest.raises(VocabularyMismatchError):
        cosine_similarity(u, v)


def test_cosine_scale_invariant():
    rng = random.Random(5)
    for _ in range(50):
        u = vec("A1", {i: rng.uniform(0.1, 5) for i in rng.sample(range(20), 6)})
        v = vec("A2", {i: rng.uniform(0.1, 5) for i in rng.sample(range(20), 6)})
        lam = rng.choice([0.25, 3.0, 117.0])
        scaled = vec("A1", {k: lam * x for k, x in u.components.items()})
        assert cosine_similarity(scaled, v) == pytest.approx(
            cosine_similarity(u, v), abs=1e-12
        )


def test_cosine_symmetric():
    rng = random.Random(6)
    for _ in range(50):
        u = vec("A1", {i: rng.uniform(0.1, 5) for i in rng.sample(range(20), 5)})
        v = vec("A2", {i: rng.uniform(0.1, 5) for i in rng.sample(range(20), 5)})
        assert cosine_similarity(u, v) == cosine_similarity(v, u)
        assert 0.0 <= cosine_similarity(u, v) <= 1.0


# ---------------------------------------------------------------------------
# top-k retrieval


def oracle_cosine(u: dict, v: dict) -> float:
    # independent plain implementation (no fast paths)
    shared = set(u) & set(v)
    dot = sum(u[i] * v[i] for i in sorted(shared))
    nu = math.sqrt(sum(x * x for x in u.values()))
    nv = math.sqrt(sum(x * x for x in v.values()))
    if nu == 0 or nv == 0 or dot == 0:
        return 0.0
    return min(1.0, dot / (nu * nv))


def random_vector_population(n=100, seed=21):
    rng = random.Random(seed)
    vectors = {}
    for i in range(n):
        support = rng.sample(range(64), rng.randint(0, 8))
        vectors[f"A{i:03d}"] = {p: round(rng.uniform(0.1, 9.0), 3) for p in support}
    return vectors


def test_top_k_matches_exhaustive_oracle():
    vectors = random_vector_population()
    index = make_index(vectors)
    for center in list(vectors)[::7]:
        for k in (1, 3, 10):
            got = index.top_k_similar(center, k)
            expected = sorted(
                (
                    (other, oracle_cosine(vectors[center], vectors[other]))
                    for other in vectors
                    if other != center
                ),
                key=lambda item: (-item[1], item[0]),
            )[:k]
            assert [a for a, _ in got] == [a for a, _ in expected]
            for (_, s_got), (_, s_exp) in zip(got, expected):
                assert s_got == pytest.approx(s_exp, abs=1e-12)


def test_top_k_saturates_population():
    index = make_index({"A1": {0: 1.0}, "A2": {0: 1.0}, "A3": {1: 1.0}})
    assert len(index.top_k_similar("A1", 99)) == 2


def test_top_k_zero_vector_center_lexicographic():
    index = make_index({"A1": {}, "A2": {0: 1.0}, "A3": {1: 1.0}})
    got = index.top_k_similar("A1", 2)
    assert got == [("A2", 0.0), ("A3", 0.0)]


def test_top_k_unknown_author():
    index = make_index({"A1": {0: 1.0}})
    with pytest.raises(AuthorNotFoundError):
        index.top_k_similar("A404", 3)
    with pytest.raises(ValueError):
        index.top_k_similar("A1", 0)


# ---------------------------------------------------------------------------
# shared descriptors


def test_shared_descriptors_identical_vectors():
    components = {0: 1.0, 3: 2.0, 7: 0.5}
    index = make_index({"A1": dict(components), "A2": dict(components)})
    shared = index.shared_descriptors("A1", "A2")
    assert len(shared.descriptors) == 3


def test_shared_descriptors_disjoint_is_empty():
    index = make_index({"A1": {0: 1.0}, "A2": {1: 1.0}})
    assert index.shared_descriptors("A1", "A2").descriptors == []


def test_shared_descriptors_product_rank_oracle():
    index = make_index(
        {"A1": {0: 2.0, 1: 1.0, 2: 3.0}, "A2": {0: 1.0, 1: 5.0, 2: 2.0}}
    )
    rows = index.shared_descriptors("A1", "A2").descriptors
    # products: d0 = 2, d1 = 5, d2 = 6 -> order d2, d1, d0
    assert [r["name"] for r in rows] == ["descriptor002", "descriptor001", "descriptor000"]
    assert [r["rank_score"] for r in rows] == [6.0, 5.0, 2.0]
    assert all(r["weight_a"] > 0 and r["weight_b"] > 0 for r in rows)


def test_shared_descriptors_symmetric_sets():
    index = make_index({"A1": {0: 2.0, 1: 1.0}, "A2": {1: 5.0, 2: 1.0}})
    ab = {r["name"] for r in index.shared_descriptors("A1", "A2").descriptors}
    ba = {r["name"] for r in index.shared_descriptors("A2", "A1").descriptors}
    assert ab == ba


# ---------------------------------------------------------------------------
# ego graphs


def test_ego_coauthor_only_edge():
    index = make_index(
        {"A1": {0: 1.0}, "A2": {1: 1.0}, "A3": {2: 1.0}},
        coauthors={"A1": {"A2": 3}, "A2": {"A1": 3}},
    )
    graph = index.ego_graph("A1", similarity_threshold=0.35, max_neighbors=10)
    assert [e.to_dict() for e in graph.edges] == [
        {"author_a": "A1", "author_b": "A2", "score": 0.0, "kind": "primary"}
    ]
    assert {n["author_id"] for n in graph.nodes} == {"A1", "A2"}


def test_ego_chain_secondary_edge():
    # cos(A,B) = cos(B,C) = 0.5 > threshold; cos(A,C) = 0
    vectors = {
        "A": {0: 1.0, 1: 1.0},
        "B": {1: 1.0, 2: 1.0},
        "C": {2: 1.0, 3: 1.0},
    }
    index = make_index(vectors)
    graph = index.ego_graph("A", similarity_threshold=0.35, max_neighbors=10)
    kinds = {(e.author_a, e.author_b): e.kind for e in graph.edges}
    assert kinds == {("A", "B"): "primary", ("B", "C"): "secondary"}
    assert [n["author_id"] for n in graph.nodes] == ["A", "B", "C"]
    assert graph.nodes[0].get("selected") is True


def test_ego_isolated_author():
    index = make_index({"A1": {0: 1.0}, "A2": {1: 1.0}})
    graph = index.ego_graph("A1", similarity_threshold=0.35, max_neighbors=10)
    assert graph.edges == []
    assert [n["author_id"] for n in graph.nodes] == ["A1"]


def test_ego_respects_max_neighbors_by_score():
    center = {i: 1.0 for i in range(4)}
    vectors = {"A0": center}
    # A1..A4 share progressively more support with A0
    for i in range(1, 5):
        vectors[f"A{i}"] = {j: 1.0 for j in range(i)}
    index = make_index(vectors)
    graph = index.ego_graph("A0", similarity_threshold=0.1, max_neighbors=2)
    primary = [e for e in graph.edges if e.kind == "primary"]
    assert len(primary) == 2
    best_two = {e.author_b for e in primary}
    assert best_two == {"A4", "A3"}  # highest cosine against A0


def test_ego_invariants_on_fixture_index(index):
    threshold = 0.35
    center = index.author_ids[0]
    graph = index.ego_graph(center, similarity_threshold=threshold, max_neighbors=25)
    node_ids = {n["author_id"] for n in graph.nodes}
    assert center in node_ids
    primary_ids = {e.author_b for e in graph.edges if e.kind == "primary"}
    for edge in graph.edges:
        assert edge.author_a != edge.author_b
        assert 0.0 <= edge.score <= 1.0
        if edge.kind == "primary":
            assert edge.author_a == center
            sim = index.similarity(edge.author_a, edge.author_b)
            coauth = index.coauthor_count(edge.author_a, edge.author_b)
            assert sim > threshold or coauth > 0
        else:
            assert edge.author_a in primary_ids
            assert edge.author_b not in primary_ids and edge.author_b != center


# ---------------------------------------------------------------------------
# descriptor-ranked authors


def test_authors_by_descriptor_ranked_by_publications():
    # A2 has more publications (agg index order), both hold descriptor000
    index = make_index({"A1": {0: 1.0}, "A2": {0: 2.0}, "A3": {1: 1.0}})
    ranked = index.authors_by_descriptor("descriptor000")
    assert [a for a, _ in ranked] == ["A2", "A1"]
    counts = dict(ranked)
    assert counts["A2"] > counts["A1"]


def test_authors_by_descriptor_normalizes_input():
    index = make_index({"A1": {0: 1.0}}, vocab=DescriptorVocabulary(
        entries=[VocabEntry("anode", "concept", 5)]
    ))
    assert index.authors_by_descriptor("Anodes") == [("A1", 1)]


def test_authors_by_descriptor_empty_and_missing():
    vocab = DescriptorVocabulary(
        entries=[VocabEntry("anode", "concept", 5), VocabEntry("cathode", "concept", 4)]
    )
    index = make_index({"A1": {0: 1.0}}, vocab=vocab)
    assert index.authors_by_descriptor("cathode") == []
    with pytest.raises(DescriptorNotFoundError):
        index.authors_by_descriptor("unobtainium")


def test_authors_by_descriptor_tie_is_lexicographic():
    vectors = {"A1": {0: 1.0}, "A2": {0: 1.0}}
    aggregates = {a: agg(a, nb=7) for a in vectors}
    index = SimilarityIndex(
        vectors={a: vec(a, c) for a, c in vectors.items()},
        aggregates=aggregates,
        vocab=vocab_of_size(4),
    )
    assert [a for a, _ in index.authors_by_descriptor("descriptor000")] == ["A1", "A2"]


# ---------------------------------------------------------------------------
# communities


def _clique(ids, offset):
    return {a: {offset: 1.0, offset + 1: 1.0} for a in ids}


def test_two_disjoint_cliques_two_communities():
    vectors = {**_clique(["A1", "A2", "A3"], 0), **_clique(["B1", "B2", "B3"], 10)}
    index = make_index(vectors)
    communities = index.detect_communities(threshold=0.5)
    groups = {}
    for author, label in communities.items():
        groups.setdefault(label, set()).add(author)
    assert sorted(groups.values(), key=len) == sorted(
        [{"A1", "A2", "A3"}, {"B1", "B2", "B3"}], key=len
    )


def test_single_author_singleton_community():
    index = make_index({"A1": {0: 1.0}})
    assert index.detect_communities() == {"A1": "A1"}


def bfs_components(vectors, threshold):
    ids = sorted(vectors)
    adjacency = {a: set() for a in ids}
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if oracle_cosine(vectors[a], vectors[b]) > threshold:
                adjacency[a].add(b)
                adjacency[b].add(a)
    seen, components = set(), []
    for a in ids:
        if a in seen:
            continue
        queue, comp = [a], set()
        while queue:
            node = queue.pop()
            if node in comp:
                continue
            comp.add(node)
            queue.extend(adjacency[node] - comp)
        seen |= comp
        components.append(comp)
    return components


def test_triangles_with_weak_bridge_match_component_oracle():
    # two triangles sharing no support; bridge pair has cosine below threshold
    vectors = {
        "A1": {0: 1.0, 1: 1.0},
        "A2": {0: 1.0, 1: 1.0},
        "A3": {0: 1.0, 1: 1.0},
        "B1": {10: 1.0, 11: 1.0},
        "B2": {10: 1.0, 11: 1.0},
        "B3": {10: 1.0, 11: 1.0, 1: 0.2},  # weak tie to the A side
    }
    threshold = 0.5
    index = make_index(vectors)
    communities = index.detect_communities(threshold=threshold)
    groups = {}
    for author, label in communities.items():
        groups[label] = groups.get(label, frozenset()) | {author}
    assert set(map(frozenset, groups.values())) == set(
        map(frozenset, bfs_components(vectors, threshold))
    )


def test_communities_deterministic_across_input_permutations():
    vectors = random_vector_population(n=30, seed=77)
    items = list(vectors.items())
    rng = random.Random(0)
    baseline = None
    for _ in range(3):
        rng.shuffle(items)
        index = make_index(dict(items))
        result = index.detect_communities(threshold=0.5)
        if baseline is None:
            baseline = result
        assert result == baseline


def test_disconnected_never_share_community():
    vectors = random_vector_population(n=40, seed=78)
    threshold = 0.6
    index = make_index(vectors)
    communities = index.detect_communities(threshold=threshold)
    for comp in bfs_components(vectors, threshold):
        labels_outside = {communities[a] for a in vectors if a not in comp}
        labels_inside = {communities[a] for a in comp}
        assert not (labels_inside & labels_outside)


# ---------------------------------------------------------------------------
# word clouds


def test_wordcloud_rescales_to_unit_max():
    index = make_index({"A1": {0: 4.0, 1: 1.8}})
    rows = index.wordcloud_frequencies("A1", 10)
    assert rows == [("descriptor000", 1.0), ("descriptor001", 0.45)]


def test_wordcloud_zero_vector_empty():
    index = make_index({"A1": {}})
    assert index.wordcloud_frequencies("A1", 5) == []


def test_wordcloud_truncates_to_top_n():
    index = make_index({"A1": {0: 4.0, 1: 2.0, 2: 1.0}})
    rows = index.wordcloud_frequencies("A1", 1)
    assert rows == [("descriptor000", 1.0)]


# ---------------------------------------------------------------------------
# directory helpers


def test_display_names_latest_work_wins(fixture_raws):
    from authorkg.ingest import normalize_corpus

    works, _ = normalize_corpus(fixture_raws, "C555008776")
    names = display_names_from_corpus(works)
    by_author = {}
    for work in works:
        for ref in work.authorships:
            key = (work.publication_date, work.work_id)
            if ref.author_id not in by_author or key > by_author[ref.author_id][0]:
                by_author[ref.author_id] = (key, ref.display_name)
    assert names == {a: n for a, (_, n) in by_author.items()}


def test_neighbor_cache_roundtrip(tmp_path):
    from authorkg.simgraph import load_neighbor_cache

    index = make_index(random_vector_population(n=10, seed=3))
    path = tmp_path / "neighbors.jsonl"
    index.save_neighbor_cache(path, k=3)
    cache = load_neighbor_cache(path)
    for author in index.author_ids:
        assert cache[author] == index.top_k_similar(author, 3)
