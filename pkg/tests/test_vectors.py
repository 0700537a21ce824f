from __future__ import annotations

import math
import random

import pytest

from authorkg.aggregate import (
    AggregateBuilder,
    AuthorAggregate,
    DescriptorStat,
    KeyphraseStat,
    PeriodBucket,
    RoleBucket,
)
from authorkg.ingest import AuthorRef, ConceptTag, WorkRecord
from authorkg.keyphrase import Keyphrase, KeyphraseSet
from authorkg.vectors import (
    DescriptorVocabulary,
    EmptyVocabularyError,
    VocabEntry,
    WeightConfig,
    author_vector,
    build_vocabulary,
    load_vectors,
    load_vocabulary,
    role_descriptor_vector,
    save_vectors,
    save_vocabulary,
)

DEFAULTS = WeightConfig()


def agg_with(concepts=None, keyphrases=None, period="2011-2023", role="first_author"):
    """Hand-built single-bucket aggregate."""
    bucket = RoleBucket(concepts=concepts or {}, keyphrases=keyphrases or {})
    period_bucket = PeriodBucket(nb_publications=1)
    if role == "first_author":
        period_bucket.nb_publications_first_author = 1
        period_bucket.first_author = bucket
    else:
        period_bucket.nb_publications_non_first_author = 1
        period_bucket.non_first_author = bucket
    return AuthorAggregate(author_id="A1", periods={period: period_bucket})


def kstat(title_freq=0, title_conf=0.0, abstract_freq=0, abstract_conf=0.0):
    sources = {}
    total_conf = []
    if title_freq:
        sources["title"] = DescriptorStat(title_freq, title_conf)
        total_conf += [title_conf] * title_freq
    if abstract_freq:
        sources["abstract"] = DescriptorStat(abstract_freq, abstract_conf)
        total_conf += [abstract_conf] * abstract_freq
    return KeyphraseStat(
        freq=title_freq + abstract_freq,
        avg_confidence_score=sum(total_conf) / len(total_conf),
        sources=sources,
    )


# ---------------------------------------------------------------------------
# vocabulary


def test_vocabulary_merges_concept_and_keyphrase_names():
    aggregates = {
        "A1": agg_with(concepts={"Anode": DescriptorStat(10, 0.5)}),
        "A2": agg_with(keyphrases={"anodes": kstat(abstract_freq=5, abstract_conf=0.4)}),
    }
    vocab = build_vocabulary(aggregates)
    assert len(vocab) == 1
    entry = vocab.entries[0]
    assert entry.name == "anode"
    assert entry.origin == "both"
    assert entry.corpus_frequency == 15


def test_vocabulary_truncates_to_top_1000():
    aggregates = {}
    for i in range(1500):
        aggregates[f"A{i}"] = agg_with(
            concepts={f"descriptor{i:04d}": DescriptorStat(1500 - i, 0.5)}
        )
    vocab = build_vocabulary(aggregates, size=1000)
    assert len(vocab) == 1000
    frequencies = [e.corpus_frequency for e in vocab.entries]
    assert frequencies == sorted(frequencies, reverse=True)
    assert min(frequencies) == 501  # the 1000 most frequent survive


def test_vocabulary_tie_at_cut_is_lexicographic():
    aggregates = {
        "A1": agg_with(
            concepts={
                "alpha": DescriptorStat(5, 0.5),
                "beta": DescriptorStat(1, 0.5),
                "aardvark": DescriptorStat(1, 0.5),
            }
        )
    }
    vocab = build_vocabulary(aggregates, size=2)
    assert [e.name for e in vocab.entries] == ["alpha", "aardvark"]


def test_vocabulary_orders_ties_lexicographically():
    aggregates = {
        "A1": agg_with(
            concepts={"zeta": DescriptorStat(3, 0.5), "eta": DescriptorStat(3, 0.5)}
        )
    }
    vocab = build_vocabulary(aggregates)
    assert [e.name for e in vocab.entries] == ["eta", "zeta"]


def test_empty_pool_is_error():
    with pytest.raises(EmptyVocabularyError):
        build_vocabulary({"A1": agg_with()})


# ---------------------------------------------------------------------------
# role vectors


def _vocab(*names):
    return DescriptorVocabulary(
        entries=[VocabEntry(n, "concept", 1) for n in names]
    )


def test_concept_component_is_freq_times_score():
    vocab = _vocab("anode")
    bucket = RoleBucket(concepts={"anode": DescriptorStat(123, 0.8)})
    vec = role_descriptor_vector(bucket, vocab, WeightConfig(w_c=1.0))
    assert vec[0] == pytest.approx(98.4, rel=1e-12)


def test_keyphrase_component_ignores_confidence():
    vocab = _vocab("anode")
    bucket = RoleBucket(keyphrases={"anode": kstat(abstract_freq=3, abstract_conf=0.1)})
    vec = role_descriptor_vector(bucket, vocab, WeightConfig(w_pa=1.0, w_pt=2.0))
    assert vec[0] == 3.0


def test_out_of_vocabulary_contributes_nothing():
    vocab = _vocab("anode")
    bucket = RoleBucket(concepts={"cathode": DescriptorStat(5, 0.9)})
    assert role_descriptor_vector(bucket, vocab, DEFAULTS) == {}


# ---------------------------------------------------------------------------
# author vectors: the hand oracle


def single_publication_aggregate() -> AuthorAggregate:
    """One first-author 2015 work: concept electrolyte (freq 1, score 0.9) and
    title keyphrase "solid electrolyte" (freq 1)."""
    bucket = RoleBucket(
        concepts={"electrolyte": DescriptorStat(1, 0.9)},
        keyphrases={"solid electrolyte": kstat(title_freq=1, title_conf=0.8)},
    )
    period = PeriodBucket(
        nb_publications=1, nb_publications_first_author=1, first_author=bucket
    )
    return AuthorAggregate(author_id="A1", periods={"2011-2023": period})


def test_hand_oracle_default_weights_exact():
    vocab = _vocab("electrolyte", "solid electrolyte")
    vec = author_vector(single_publication_aggregate(), vocab, DEFAULTS)
    # period 2011-2023: f = 1.0; first author: w = 2.0
    # electrolyte: 1.0 * 2.0 * (w_c=1.0 * 1 * 0.9) = 1.8
    # solid electrolyte: 1.0 * 2.0 * (w_pt=2.0 * 1) = 4.0
    assert vec.components[0] == 1.8
    assert vec.components[1] == 4.0


def test_empty_aggregate_is_zero_vector():
    vocab = _vocab("electrolyte")
    vec = author_vector(AuthorAggregate(author_id="A1"), vocab, DEFAULTS)
    assert vec.is_zero()


def test_moving_periods_scales_by_decay_ratio():
    vocab = _vocab("electrolyte", "solid electrolyte")
    recent = single_publication_aggregate()
    old = AuthorAggregate(author_id="A1", periods={"1990-2000": recent.periods["2011-2023"]})
    v_recent = author_vector(recent, vocab, DEFAULTS)
    v_old = author_vector(old, vocab, DEFAULTS)
    ratio = DEFAULTS.f_p0 / DEFAULTS.f_p2
    for pos, value in v_recent.components.items():
        assert v_old.components[pos] == pytest.approx(value * ratio, rel=1e-12)


def test_nonfirst_weight_zero_uses_only_first_buckets():
    vocab = _vocab("anode", "cathode")
    first = RoleBucket(concepts={"anode": DescriptorStat(1, 1.0)})
    non_first = RoleBucket(concepts={"cathode": DescriptorStat(1, 1.0)})
    period = PeriodBucket(
        nb_publications=2,
        nb_publications_first_author=1,
        nb_publications_non_first_author=1,
        first_author=first,
        non_first_author=non_first,
    )
    aggregate = AuthorAggregate(author_id="A1", periods={"2011-2023": period})
    vec = author_vector(aggregate, vocab, WeightConfig(w_nonfirst=0.0))
    assert 0 in vec.components and 1 not in vec.components


def test_weights_must_be_non_negative():
    with pytest.raises(ValueError):
        WeightConfig(w_first=-1.0)


# ---------------------------------------------------------------------------
# linearity and homogeneity on randomized aggregates


def random_builder(rng: random.Random, author="A1") -> AggregateBuilder:
    names = ["anode", "cathode", "electrolyte", "separator", "graphite", "dendrite"]
    builder = AggregateBuilder({author})
    for i in range(rng.randint(1, 8)):
        year = rng.choice([1995, 2005, 2015, 2024])
        position = rng.choice(["first", "last"])
        concepts = [
            ConceptTag(f"C{j}", rng.choice(names), 2, round(rng.uniform(0.05, 1.0), 3))
            for j in range(rng.randint(0, 4))
        ]
        work = WorkRecord(
            work_id=f"W{rng.randrange(10**9)}",
            doi=None,
            title="t",
            publication_year=year,
            publication_date=f"{year}-01-01",
            abstract_text=None,
            authorships=[AuthorRef(author_id=author, display_name=author, position=position)],
            concepts=concepts,
        )
        kset = KeyphraseSet(
            work_id=work.work_id,
            title_keyphrases=[
                Keyphrase.make(rng.choice(names), round(rng.random(), 3))
                for _ in range(rng.randint(0, 2))
            ],
            abstract_keyphrases=[
                Keyphrase.make(rng.choice(names), round(rng.random(), 3))
                for _ in range(rng.randint(0, 4))
            ],
        )
        builder.add_work(work, kset)
    return builder


FULL_VOCAB = _vocab("anode", "cathode", "electrolyte", "separator", "graphite", "dendrite")


def _close(u: dict[int, float], v: dict[int, float], tol=1e-9):
    for k in set(u) | set(v):
        assert math.isclose(u.get(k, 0.0), v.get(k, 0.0), rel_tol=tol, abs_tol=tol)


def test_linearity_over_100_randomized_aggregates():
    rng = random.Random(42)
    for trial in range(100):
        left = random_builder(rng)
        right = random_builder(rng)
        merged = left.merge(right).finalize()["A1"]
        v_merged = author_vector(merged, FULL_VOCAB, DEFAULTS)
        v_left = author_vector(left.finalize()["A1"], FULL_VOCAB, DEFAULTS)
        v_right = author_vector(right.finalize()["A1"], FULL_VOCAB, DEFAULTS)
        summed = dict(v_left.components)
        for pos, val in v_right.components.items():
            summed[pos] = summed.get(pos, 0.0) + val
        _close(v_merged.components, summed)


def test_decay_scaling_homogeneity():
    rng = random.Random(43)
    for trial in range(100):
        aggregate = random_builder(rng).finalize()["A1"]
        lam = rng.choice([0.5, 2.0, 3.5])
        scaled = WeightConfig(
            f_p0=DEFAULTS.f_p0 * lam, f_p1=DEFAULTS.f_p1 * lam, f_p2=DEFAULTS.f_p2 * lam
        )
        base = author_vector(aggregate, FULL_VOCAB, DEFAULTS).components
        bumped = author_vector(aggregate, FULL_VOCAB, scaled).components
        _close(bumped, {k: v * lam for k, v in base.items()})


def test_every_component_traces_to_a_descriptor_stat():
    rng = random.Random(44)
    for trial in range(20):
        aggregate = random_builder(rng).finalize()["A1"]
        vec = author_vector(aggregate, FULL_VOCAB, DEFAULTS)
        names_present = set()
        for bucket in aggregate.periods.values():
            for role in (bucket.first_author, bucket.non_first_author):
                names_present.update(role.concepts)
                names_present.update(role.keyphrases)
        for pos in vec.components:
            assert FULL_VOCAB.name_of(pos) in names_present


# ---------------------------------------------------------------------------
# persistence


def test_vocabulary_roundtrip(tmp_path):
    aggregates = {"A1": agg_with(concepts={"anode": DescriptorStat(3, 0.6)})}
    vocab = build_vocabulary(aggregates)
    path = tmp_path / "vocabulary.json"
    save_vocabulary(path, vocab, DEFAULTS)
    loaded, weights = load_vocabulary(path)
    assert [e.name for e in loaded.entries] == ["anode"]
    assert loaded.digest == vocab.digest
    assert weights == DEFAULTS


def test_vectors_roundtrip_and_meta(tmp_path):
    vocab = _vocab("electrolyte", "solid electrolyte")
    vec = author_vector(single_publication_aggregate(), vocab, DEFAULTS)
    path = tmp_path / "vectors.jsonl"
    save_vectors(path, {"A1": vec}, vocab, DEFAULTS)
    loaded, meta = load_vectors(path)
    assert loaded["A1"].components == vec.components
    assert loaded["A1"].vocab_digest == vocab.digest
    assert meta["weights"] == DEFAULTS.to_dict()
    assert meta["vocab_size"] == 2
