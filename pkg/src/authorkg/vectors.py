"""Descriptor vocabulary and weighted author vectors.

The vocabulary is the top-1000 most frequent normalized descriptors pooled
from concepts and keyphrases (frequencies merged for overlapping names).
Author vectors combine, per temporal period and authorship role:

    component = sum_periods f_p * (w_first * D + w_nonfirst * D')

where a role's descriptor vector weighs concepts by freq * avg_confidence
(catalogue relevance) and keyphrases by frequency alone, split into title and
abstract contributions with their own weights.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .aggregate import PERIOD_KEYS, AuthorAggregate, RoleBucket
from .errors import AuthorKGError
from .keyphrase import normalize_descriptor
from .storage import read_json, read_jsonl, write_json, write_jsonl


class EmptyVocabularyError(AuthorKGError):
    pass


ORIGIN_CONCEPT = "concept"
ORIGIN_KEYPHRASE = "keyphrase"
ORIGIN_BOTH = "both"


@dataclass(frozen=True)
class VocabEntry:
    name: str
    origin: str  # concept | keyphrase | both
    corpus_frequency: int


@dataclass
class DescriptorVocabulary:
    entries: list[VocabEntry]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.index:
            self.index = {entry.name: i for i, entry in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def name_of(self, position: int) -> str:
        return self.entries[position].name

    @property
    def digest(self) -> str:
        payload = json.dumps([(e.name, e.corpus_frequency) for e in self.entries])
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class WeightConfig:
    """Period decay factors, role weights, and origin weights (all >= 0).

    Defaults down-weight older periods (0.25 / 0.5 / 1.0), favor first-author
    records (2.0 vs 1.0), and give title keyphrases double weight (titles are
    the most distilled signal and already capped at 2 per work).
    """

    f_p0: float = 0.25
    f_p1: float = 0.5
    f_p2: float = 1.0
    w_first: float = 2.0
    w_nonfirst: float = 1.0
    w_c: float = 1.0
    w_pa: float = 1.0
    w_pt: float = 2.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"weight {name} must be >= 0, got {value}")

    def period_factor(self, period_key: str) -> float:
        return (self.f_p0, self.f_p1, self.f_p2)[PERIOD_KEYS.index(period_key)]

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, float]) -> "WeightConfig":
        return cls(**d)


@dataclass
class AuthorVector:
    author_id: str
    components: dict[int, float] = field(default_factory=dict)
    vocab_digest: str | None = None

    def is_zero(self) -> bool:
        return not self.components


def build_vocabulary(
    aggregates: Mapping[str, AuthorAggregate], size: int = 1000
) -> DescriptorVocabulary:
    """Pool descriptor frequencies across all authors/periods/roles, merge
    concept and keyphrase entries by normalized name, keep the top ``size``."""
    concept_freq: dict[str, int] = {}
    keyphrase_freq: dict[str, int] = {}
    for aggregate in aggregates.values():
        for bucket in aggregate.periods.values():
            for role in (bucket.first_author, bucket.non_first_author):
                for name, stat in role.concepts.items():
                    key = normalize_descriptor(name)
                    concept_freq[key] = concept_freq.get(key, 0) + stat.freq
                for name, kstat in role.keyphrases.items():
                    key = normalize_descriptor(name)
                    keyphrase_freq[key] = keyphrase_freq.get(key, 0) + kstat.freq
    names = set(concept_freq) | set(keyphrase_freq)
    names.discard("")
    if not names:
        raise EmptyVocabularyError("no descriptors to build a vocabulary from")
    entries = []
    for name in names:
        cf = concept_freq.get(name, 0)
        kf = keyphrase_freq.get(name, 0)
        origin = ORIGIN_BOTH if cf and kf else (ORIGIN_CONCEPT if cf else ORIGIN_KEYPHRASE)
        entries.append(VocabEntry(name=name, origin=origin, corpus_frequency=cf + kf))
    entries.sort(key=lambda e: (-e.corpus_frequency, e.name))
    return DescriptorVocabulary(entries=entries[:size])


def role_descriptor_vector(
    bucket: RoleBucket, vocab: DescriptorVocabulary, weights: WeightConfig
) -> dict[int, float]:
    """w_c * C + w_pa * K_abstract + w_pt * K_title over the vocabulary.

    Concept components carry freq * avg_confidence (the catalogue relevance
    score); keyphrase components carry plain frequency. Out-of-vocabulary
    descriptors contribute nothing.
    """
    acc: dict[int, float] = {}
    for name in sorted(bucket.concepts):
        position = vocab.index.get(name)
        if position is None:
            continue
        stat = bucket.concepts[name]
        value = weights.w_c * (stat.freq * stat.avg_confidence_score)
        if value != 0.0:
            acc[position] = acc.get(position, 0.0) + value
    for name in sorted(bucket.keyphrases):
        position = vocab.index.get(name)
        if position is None:
            continue
        kstat = bucket.keyphrases[name]
        value = weights.w_pt * kstat.source_freq("title") + weights.w_pa * kstat.source_freq(
            "abstract"
        )
        if value != 0.0:
            acc[position] = acc.get(position, 0.0) + value
    return acc


def author_vector(
    aggregate: AuthorAggregate, vocab: DescriptorVocabulary, weights: WeightConfig
) -> AuthorVector:
    """Combine role vectors across periods with decay and role weights."""
    acc: dict[int, float] = {}
    for period_key in PERIOD_KEYS:
        bucket = aggregate.periods.get(period_key)
        if bucket is None:
            continue
        factor = weights.period_factor(period_key)
        if factor == 0.0:
            continue
        for role_weight, role_bucket in (
            (weights.w_first, bucket.first_author),
            (weights.w_nonfirst, bucket.non_first_author),
        ):
            if role_weight == 0.0:
                continue
            for position, value in role_descriptor_vector(role_bucket, vocab, weights).items():
                acc[position] = acc.get(position, 0.0) + factor * (role_weight * value)
    components = {pos: val for pos, val in sorted(acc.items()) if val != 0.0}
    return AuthorVector(
        author_id=aggregate.author_id, components=components, vocab_digest=vocab.digest
    )


def build_author_vectors(
    aggregates: Mapping[str, AuthorAggregate],
    vocab: DescriptorVocabulary,
    weights: WeightConfig,
) -> dict[str, AuthorVector]:
    return {a: author_vector(aggregates[a], vocab, weights) for a in sorted(aggregates)}


# ---------------------------------------------------------------------------
# persistence (both artifacts embed the WeightConfig used, for provenance)


def save_vocabulary(path: Path, vocab: DescriptorVocabulary, weights: WeightConfig) -> None:
    write_json(
        path,
        {
            "weights": weights.to_dict(),
            "vocab_size": len(vocab),
            "digest": vocab.digest,
            "entries": [
                {"name": e.name, "origin": e.origin, "corpus_frequency": e.corpus_frequency}
                for e in vocab.entries
            ],
        },
    )


def load_vocabulary(path: Path) -> tuple[DescriptorVocabulary, WeightConfig]:
    payload = read_json(path)
    vocab = DescriptorVocabulary(
        entries=[
            VocabEntry(e["name"], e["origin"], e["corpus_frequency"])
            for e in payload["entries"]
        ]
    )
    return vocab, WeightConfig.from_dict(payload["weights"])


def save_vectors(
    path: Path, vectors: Mapping[str, AuthorVector], vocab: DescriptorVocabulary,
    weights: WeightConfig,
) -> None:
    rows: list[dict[str, Any]] = [
        {"meta": {"weights": weights.to_dict(), "vocab_digest": vocab.digest,
                  "vocab_size": len(vocab)}}
    ]
    for author_id in sorted(vectors):
        vec = vectors[author_id]
        rows.append(
            {
                "author_id": author_id,
                "components": {str(pos): val for pos, val in sorted(vec.components.items())},
            }
        )
    write_jsonl(path, rows)


def load_vectors(path: Path) -> tuple[dict[str, AuthorVector], dict[str, Any]]:
    rows = iter(read_jsonl(path))
    try:
        meta = next(rows)["meta"]
    except (StopIteration, KeyError) as exc:
        raise AuthorKGError(f"vectors file {path} is missing its meta header") from exc
    vectors = {}
    for row in rows:
        vec = AuthorVector(
            author_id=row["author_id"],
            components={int(pos): val for pos, val in row["components"].items()},
            vocab_digest=meta["vocab_digest"],
        )
        vectors[vec.author_id] = vec
    return vectors, meta
