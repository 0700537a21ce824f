"""Per-author aggregation of descriptors, roles, periods, and co-authors.

The output structure mirrors the aggregated author data layout: per author,
per temporal period, publication counts split by authorship role, and per role
a map of concepts, keyphrases (with per-source title/abstract stats), and
co-author counts.

Aggregation is a monoid: builders accumulate raw occurrence lists and only
finalization computes averages (over canonically ordered occurrences), so
splitting a corpus, aggregating the parts, and merging gives bit-identical
output to aggregating the whole.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import AuthorKGError
from .ingest import WorkRecord
from .keyphrase import KeyphraseSet, normalize_descriptor
from .storage import read_jsonl, write_jsonl

PERIOD_KEYS = ("1990-2000", "2001-2010", "2011-2023")

ROLE_FIRST = "first_author"
ROLE_NON_FIRST = "non_first_author"

SOURCE_TITLE = "title"
SOURCE_ABSTRACT = "abstract"


class AggregationError(AuthorKGError):
    pass


class PeriodRangeError(AggregationError):
    pass


def period_of(year: int) -> str:
    """Map a publication year to its period bucket; years past the last
    boundary fold into the latest bucket so fresher harvests keep working."""
    if year < 1990:
        raise PeriodRangeError(f"year {year} precedes the first period (ingest filters these)")
    if year <= 2000:
        return PERIOD_KEYS[0]
    if year <= 2010:
        return PERIOD_KEYS[1]
    return PERIOD_KEYS[2]


# ---------------------------------------------------------------------------
# finalized (serializable) shapes


@dataclass(frozen=True)
class DescriptorStat:
    freq: int
    avg_confidence_score: float

    def to_dict(self) -> dict[str, Any]:
        return {"freq": self.freq, "avg_confidence_score": self.avg_confidence_score}


@dataclass(frozen=True)
class KeyphraseStat:
    freq: int
    avg_confidence_score: float
    sources: Mapping[str, DescriptorStat] = field(default_factory=dict)

    def source_freq(self, source: str) -> int:
        stat = self.sources.get(source)
        return stat.freq if stat else 0

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"freq": self.freq, "avg_confidence_score": self.avg_confidence_score}
        if self.sources:
            d["sources"] = {s: st.to_dict() for s, st in sorted(self.sources.items())}
        return d


@dataclass
class RoleBucket:
    concepts: dict[str, DescriptorStat] = field(default_factory=dict)
    keyphrases: dict[str, KeyphraseStat] = field(default_factory=dict)
    co_authors: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "concepts": {n: s.to_dict() for n, s in sorted(self.concepts.items())},
            "keyphrases": {n: s.to_dict() for n, s in sorted(self.keyphrases.items())},
            "co_authors": dict(sorted(self.co_authors.items())),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RoleBucket":
        concepts = {
            name: DescriptorStat(s["freq"], s["avg_confidence_score"])
            for name, s in d.get("concepts", {}).items()
        }
        keyphrases = {}
        for name, s in d.get("keyphrases", {}).items():
            sources = {
                src: DescriptorStat(ss["freq"], ss["avg_confidence_score"])
                for src, ss in s.get("sources", {}).items()
            }
            keyphrases[name] = KeyphraseStat(s["freq"], s["avg_confidence_score"], sources)
        return cls(concepts, keyphrases, dict(d.get("co_authors", {})))


@dataclass
class PeriodBucket:
    nb_publications: int = 0
    nb_publications_first_author: int = 0
    nb_publications_non_first_author: int = 0
    nb_publications_corresponding: int = 0
    first_author: RoleBucket = field(default_factory=RoleBucket)
    non_first_author: RoleBucket = field(default_factory=RoleBucket)

    def role(self, role_key: str) -> RoleBucket:
        return self.first_author if role_key == ROLE_FIRST else self.non_first_author

    def to_dict(self) -> dict[str, Any]:
        # field names (and role sub-objects) follow the published aggregate layout
        return {
            "nb_publications": self.nb_publications,
            "nb_publications_first_author": self.nb_publications_first_author,
            "nb_publications_non_first_author": self.nb_publications_non_first_author,
            "nb_publications_corresponding": self.nb_publications_corresponding,
            "first_author": self.first_author.to_dict(),
            "non_first_author": self.non_first_author.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PeriodBucket":
        return cls(
            nb_publications=d["nb_publications"],
            nb_publications_first_author=d["nb_publications_first_author"],
            nb_publications_non_first_author=d["nb_publications_non_first_author"],
            nb_publications_corresponding=d.get("nb_publications_corresponding", 0),
            first_author=RoleBucket.from_dict(d.get("first_author", {})),
            non_first_author=RoleBucket.from_dict(d.get("non_first_author", {})),
        )


@dataclass
class AuthorAggregate:
    author_id: str
    periods: dict[str, PeriodBucket] = field(default_factory=dict)

    def total_publications(self) -> int:
        return sum(b.nb_publications for b in self.periods.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "author_id": self.author_id,
            "periods": {
                key: self.periods[key].to_dict() for key in PERIOD_KEYS if key in self.periods
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AuthorAggregate":
        return cls(
            author_id=d["author_id"],
            periods={k: PeriodBucket.from_dict(v) for k, v in d["periods"].items()},
        )


# ---------------------------------------------------------------------------
# accumulation


@dataclass
class _RoleAcc:
    # occurrence lists, not running averages: merging stays exact
    concepts: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    keyphrases: dict[str, list[tuple[str, str, float]]] = field(default_factory=dict)
    co_authors: Counter = field(default_factory=Counter)


@dataclass
class _PeriodAcc:
    nb_publications: int = 0
    nb_first: int = 0
    nb_non_first: int = 0
    nb_corresponding: int = 0
    roles: dict[str, _RoleAcc] = field(
        default_factory=lambda: {ROLE_FIRST: _RoleAcc(), ROLE_NON_FIRST: _RoleAcc()}
    )


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def _finalize_role(acc: _RoleAcc) -> RoleBucket:
    concepts = {}
    for name, occurrences in acc.concepts.items():
        occurrences = sorted(occurrences)
        concepts[name] = DescriptorStat(
            freq=len(occurrences), avg_confidence_score=_mean([score for _, score in occurrences])
        )
    keyphrases = {}
    for name, occurrences in acc.keyphrases.items():
        occurrences = sorted(occurrences)
        sources = {}
        for source in (SOURCE_ABSTRACT, SOURCE_TITLE):
            subset = [conf for _, src, conf in occurrences if src == source]
            if subset:
                sources[source] = DescriptorStat(len(subset), _mean(subset))
        keyphrases[name] = KeyphraseStat(
            freq=len(occurrences),
            avg_confidence_score=_mean([conf for _, _, conf in occurrences]),
            sources=sources,
        )
    return RoleBucket(concepts, keyphrases, dict(acc.co_authors))


class AggregateBuilder:
    """Mergeable accumulator over (work, keyphrase set) pairs."""

    def __init__(self, selected_authors: set[str] | None = None):
        self.selected_authors = selected_authors
        self._authors: dict[str, dict[str, _PeriodAcc]] = {}

    def _period_acc(self, author_id: str, period_key: str) -> _PeriodAcc:
        return self._authors.setdefault(author_id, {}).setdefault(period_key, _PeriodAcc())

    def add_work(self, work: WorkRecord, keyphrases: KeyphraseSet | None) -> None:
        period_key = period_of(work.publication_year)
        # first occurrence wins when a noisy record repeats an author
        by_author: dict[str, Any] = {}
        for ref in work.authorships:
            by_author.setdefault(ref.author_id, ref)
        for author_id, ref in by_author.items():
            if self.selected_authors is not None and author_id not in self.selected_authors:
                continue
            acc = self._period_acc(author_id, period_key)
            role_key = ROLE_FIRST if ref.position == "first" else ROLE_NON_FIRST
            acc.nb_publications += 1
            if role_key == ROLE_FIRST:
                acc.nb_first += 1
            else:
                acc.nb_non_first += 1
            if ref.is_corresponding:
                acc.nb_corresponding += 1
            role = acc.roles[role_key]
            for concept in work.concepts:
                name = normalize_descriptor(concept.display_name)
                role.concepts.setdefault(name, []).append((work.work_id, concept.score))
            if keyphrases is not None:
                for source, kp in keyphrases.all_keyphrases():
                    role.keyphrases.setdefault(kp.normalized_text, []).append(
                        (work.work_id, source, kp.confidence)
                    )
            for other_id in by_author:
                if other_id != author_id:
                    role.co_authors[other_id] += 1

    def merge(self, other: "AggregateBuilder") -> "AggregateBuilder":
        """Set-union style merge; commutative and associative up to finalization."""
        merged = AggregateBuilder(self.selected_authors)
        for builder in (self, other):
            for author_id, periods in builder._authors.items():
                for period_key, acc in periods.items():
                    target = merged._period_acc(author_id, period_key)
                    target.nb_publications += acc.nb_publications
                    target.nb_first += acc.nb_first
                    target.nb_non_first += acc.nb_non_first
                    target.nb_corresponding += acc.nb_corresponding
                    for role_key in (ROLE_FIRST, ROLE_NON_FIRST):
                        src, dst = acc.roles[role_key], target.roles[role_key]
                        for name, occ in src.concepts.items():
                            dst.concepts.setdefault(name, []).extend(occ)
                        for name, occ in src.keyphrases.items():
                            dst.keyphrases.setdefault(name, []).extend(occ)
                        dst.co_authors.update(src.co_authors)
        return merged

    def finalize(self) -> dict[str, AuthorAggregate]:
        out: dict[str, AuthorAggregate] = {}
        for author_id in sorted(self._authors):
            periods: dict[str, PeriodBucket] = {}
            for period_key in PERIOD_KEYS:
                acc = self._authors[author_id].get(period_key)
                if acc is None or acc.nb_publications == 0:
                    continue
                periods[period_key] = PeriodBucket(
                    nb_publications=acc.nb_publications,
                    nb_publications_first_author=acc.nb_first,
                    nb_publications_non_first_author=acc.nb_non_first,
                    nb_publications_corresponding=acc.nb_corresponding,
                    first_author=_finalize_role(acc.roles[ROLE_FIRST]),
                    non_first_author=_finalize_role(acc.roles[ROLE_NON_FIRST]),
                )
            out[author_id] = AuthorAggregate(author_id=author_id, periods=periods)
        return out


def build_aggregates(
    works: Iterable[WorkRecord],
    keyphrase_sets: Mapping[str, KeyphraseSet],
    selected_authors: set[str] | None = None,
) -> dict[str, AuthorAggregate]:
    """Aggregate a normalized corpus; keyphrase sets are keyed by work_id."""
    works = list(works)
    known_ids = {w.work_id for w in works}
    unknown = sorted(set(keyphrase_sets) - known_ids)
    if unknown:
        raise AggregationError(
            f"keyphrase sets reference unknown work IDs: {', '.join(unknown[:5])}"
        )
    builder = AggregateBuilder(selected_authors)
    for work in works:
        builder.add_work(work, keyphrase_sets.get(work.work_id))
    return builder.finalize()


def save_aggregates(path: Path, aggregates: Mapping[str, AuthorAggregate]) -> None:
    write_jsonl(path, (aggregates[a].to_dict() for a in sorted(aggregates)))


def load_aggregates(path: Path) -> dict[str, AuthorAggregate]:
    out = {}
    for row in read_jsonl(path):
        agg = AuthorAggregate.from_dict(row)
        out[agg.author_id] = agg
    return out
