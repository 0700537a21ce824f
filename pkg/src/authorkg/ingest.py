"""Corpus harvesting and normalization.

Works are pulled from an OpenAlex-compatible works endpoint (or a fixture
directory of page files for offline runs), their abstracts reconstructed from
the inverted word-position index the catalogue ships, and the records filtered
and projected down to the fields the rest of the pipeline consumes.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

import requests

from .errors import AuthorKGError, RetriableError
from .storage import read_json, read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

RawWork = dict[str, Any]

OPENALEX_WORKS_URL = "https://api.openalex.org/works"

REJECT_PRE_MIN_YEAR = "pre-1990"
REJECT_NO_DATE = "no-date"


class WorkParseError(AuthorKGError):
    """A harvested record or page payload is structurally broken."""


class PageParseError(WorkParseError):
    pass


class ReconstructionError(AuthorKGError):
    """Two different words claim the same abstract position."""


class HarvestError(RetriableError):
    """Network failure that outlived the retry budget; carries the last cursor."""

    def __init__(self, message: str, last_cursor: str | None):
        super().__init__(message)
        self.last_cursor = last_cursor


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ConceptTag:
    concept_id: str
    display_name: str
    level: int
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "concept_id": self.concept_id,
            "display_name": self.display_name,
            "level": self.level,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ConceptTag":
        return cls(d["concept_id"], d["display_name"], d["level"], d["score"])


@dataclass(frozen=True)
class AuthorRef:
    author_id: str
    display_name: str
    position: str  # first | middle | last
    is_corresponding: bool = False
    affiliation_name: str | None = None
    affiliation_id: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "author_id": self.author_id,
            "display_name": self.display_name,
            "position": self.position,
            "is_corresponding": self.is_corresponding,
            "affiliation_name": self.affiliation_name,
            "affiliation_id": self.affiliation_id,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AuthorRef":
        return cls(
            d["author_id"],
            d["display_name"],
            d["position"],
            d.get("is_corresponding", False),
            d.get("affiliation_name"),
            d.get("affiliation_id"),
        )


@dataclass
class WorkRecord:
    work_id: str
    doi: str | None
    title: str
    publication_year: int
    publication_date: str
    abstract_text: str | None
    authorships: list[AuthorRef] = field(default_factory=list)
    concepts: list[ConceptTag] = field(default_factory=list)
    publisher_name: str | None = None
    source_name: str | None = None

    @property
    def has_text(self) -> bool:
        """False for records lacking both title and abstract; extraction skips those."""
        return bool(self.title) or bool(self.abstract_text)

    def distinct_author_ids(self) -> list[str]:
        seen: set[str] = set()
        out: list[str] = []
        for ref in self.authorships:
            if ref.author_id not in seen:
                seen.add(ref.author_id)
                out.append(ref.author_id)
        return out

    def to_dict(self) -> dict[str, Any]:
        # key order is the documented corpus/works.jsonl column order
        return {
            "work_id": self.work_id,
            "doi": self.doi,
            "title": self.title,
            "publication_year": self.publication_year,
            "publication_date": self.publication_date,
            "abstract_text": self.abstract_text,
            "authorships": [a.to_dict() for a in self.authorships],
            "concepts": [c.to_dict() for c in self.concepts],
            "publisher_name": self.publisher_name,
            "source_name": self.source_name,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "WorkRecord":
        return cls(
            work_id=d["work_id"],
            doi=d.get("doi"),
            title=d.get("title", ""),
            publication_year=d["publication_year"],
            publication_date=d["publication_date"],
            abstract_text=d.get("abstract_text"),
            authorships=[AuthorRef.from_dict(a) for a in d.get("authorships", [])],
            concepts=[ConceptTag.from_dict(c) for c in d.get("concepts", [])],
            publisher_name=d.get("publisher_name"),
            source_name=d.get("source_name"),
        )


@dataclass(frozen=True)
class Rejected:
    """Filter outcome for records dropped during normalization; not an error."""

    reason: str  # REJECT_PRE_MIN_YEAR | REJECT_NO_DATE


# ---------------------------------------------------------------------------
# normalization


def normalize_entity_id(value: str, expected_prefix: str) -> str:
    """Strip the catalogue URL prefix and uppercase the ID token.

    "https://openalex.org/w123" -> "W123"; raises WorkParseError on anything
    that does not normalize to <letter><digits> with the expected letter.
    """
    token = value.rsplit("/", 1)[-1].strip().upper()
    if not token or token[0] != expected_prefix or not token[1:].isdigit():
        raise WorkParseError(f"cannot normalize {value!r} to a {expected_prefix}-prefixed ID")
    return token


def reconstruct_abstract(inverted_index: Mapping[str, list[int]]) -> str:
    """Rebuild abstract text from a word -> positions index.

    Missing positions collapse (real records carry off-by-one gaps); a position
    claimed by two different words is an error.
    """
    placed: dict[int, str] = {}
    for word, positions in inverted_index.items():
        for pos in positions:
            if pos < 0:
                raise ReconstructionError(f"negative position {pos} for word {word!r}")
            existing = placed.get(pos)
            if existing is not None and existing != word:
                raise ReconstructionError(
                    f"position {pos} claimed by both {existing!r} and {word!r}"
                )
            placed[pos] = word
    return " ".join(placed[pos] for pos in sorted(placed))


def _normalize_position(raw_position: Any, index: int, count: int) -> str:
    if raw_position in ("first", "middle", "last"):
        return raw_position
    if index == 0:
        return "first"
    if index == count - 1:
        return "last"
    return "middle"


def _normalize_authorships(raw: RawWork) -> list[AuthorRef]:
    entries = raw.get("authorships") or []
    refs: list[AuthorRef] = []
    seen_first = False
    for i, entry in enumerate(entries):
        author = entry.get("author") or {}
        raw_id = author.get("id") or ""
        if not raw_id:
            logger.debug("work %s: dropping authorship without author id", raw.get("id"))
            continue
        author_id = normalize_entity_id(raw_id, "A")
        position = _normalize_position(entry.get("author_position"), i, len(entries))
        if position == "first":
            if seen_first:
                position = "middle"
            seen_first = True
        institutions = entry.get("institutions") or []
        affiliation_name = affiliation_id = None
        if institutions:
            affiliation_name = institutions[0].get("display_name") or None
            inst_id = institutions[0].get("id")
            if inst_id:
                try:
                    affiliation_id = normalize_entity_id(inst_id, "I")
                except WorkParseError:
                    affiliation_id = None
        refs.append(
            AuthorRef(
                author_id=author_id,
                display_name=author.get("display_name") or author_id,
                position=position,
                is_corresponding=bool(entry.get("is_corresponding", False)),
                affiliation_name=affiliation_name,
                affiliation_id=affiliation_id,
            )
        )
    return refs


def _normalize_concepts(raw: RawWork, seed_concept_id: str) -> list[ConceptTag]:
    tags: list[ConceptTag] = []
    for entry in raw.get("concepts") or []:
        cid_raw = entry.get("id") or ""
        if not cid_raw:
            continue
        cid = normalize_entity_id(cid_raw, "C")
        if cid == seed_concept_id:
            continue  # the harvest seed tags every record and carries no signal
        score = float(entry.get("score") or 0.0)
        if score <= 0.0:
            continue  # zero scores mark hierarchy-propagated ancestors
        level = int(entry.get("level", 0))
        if not 0 <= level <= 5 or score > 1.0:
            logger.debug("work %s: dropping malformed concept %s", raw.get("id"), cid)
            continue
        tags.append(ConceptTag(cid, entry.get("display_name") or cid, level, score))
    return tags


def normalize_work(
    raw: RawWork, seed_concept_id: str, min_year: int = 1990
) -> WorkRecord | Rejected:
    """Filter and project one harvested record.

    Returns Rejected("no-date") / Rejected("pre-1990") when the date filter
    fails; otherwise a WorkRecord with the seed concept and zero-score concepts
    pruned and the abstract reconstructed.
    """
    raw_id = raw.get("id") or ""
    if not raw_id:
        raise WorkParseError("harvested record has no identifier")
    work_id = normalize_entity_id(raw_id, "W")

    date = raw.get("publication_date")
    if not date:
        return Rejected(REJECT_NO_DATE)
    year = raw.get("publication_year")
    if year is None:
        try:
            year = int(str(date)[:4])
        except ValueError as exc:
            raise WorkParseError(f"work {work_id}: bad publication_date {date!r}") from exc
    year = int(year)
    if year < min_year:
        return Rejected(REJECT_PRE_MIN_YEAR)

    abstract = None
    inverted = raw.get("abstract_inverted_index")
    if inverted:
        abstract = reconstruct_abstract(inverted) or None

    doi = raw.get("doi") or None
    title = raw.get("title") or raw.get("display_name") or ""

    source = (raw.get("primary_location") or {}).get("source") or {}
    source_name = source.get("display_name") or None
    publisher_name = source.get("host_organization_name") or None
    if publisher_name is None:
        publisher_name = (raw.get("host_venue") or {}).get("publisher") or None

    record = WorkRecord(
        work_id=work_id,
        doi=doi,
        title=title,
        publication_year=year,
        publication_date=str(date),
        abstract_text=abstract,
        authorships=_normalize_authorships(raw),
        concepts=_normalize_concepts(raw, seed_concept_id),
        publisher_name=publisher_name,
        source_name=source_name,
    )
    if not record.has_text:
        logger.info("work %s kept without title or abstract; extraction will skip it", work_id)
    return record


def normalize_corpus(
    raws: Iterable[RawWork], seed_concept_id: str, min_year: int = 1990
) -> tuple[list[WorkRecord], dict[str, int]]:
    """Normalize a harvested stream; returns (records, harvest summary counts)."""
    records: list[WorkRecord] = []
    summary = {"fetched": 0, "rejected_pre1990": 0, "rejected_no_date": 0, "kept": 0}
    for raw in raws:
        summary["fetched"] += 1
        result = normalize_work(raw, seed_concept_id, min_year)
        if isinstance(result, Rejected):
            key = "rejected_pre1990" if result.reason == REJECT_PRE_MIN_YEAR else "rejected_no_date"
            summary[key] += 1
            continue
        records.append(result)
    summary["kept"] = len(records)
    records.sort(key=lambda r: r.work_id)
    return records, summary


def select_top_authors(corpus: Iterable[WorkRecord], n: int) -> set[str]:
    """The n authors with the most publications; ties break on author_id ascending."""
    if n < 1:
        raise ValueError("n must be >= 1")
    counts: dict[str, int] = {}
    for work in corpus:
        for author_id in work.distinct_author_ids():
            counts[author_id] = counts.get(author_id, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return {author_id for author_id, _ in ranked[:n]}


# ---------------------------------------------------------------------------
# page sources


class FixturePageSource:
    """Pages read from a directory of JSON files, sorted by file name.

    Each file holds {"results": [...]} as the works endpoint would return it;
    the cursor is the page index as a string.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.pages = sorted(self.directory.glob("*.json"))
        if not self.pages:
            raise WorkParseError(f"fixture directory {self.directory} contains no page files")

    def fetch(self, cursor: str | None) -> tuple[list[RawWork], str | None]:
        index = 0 if cursor is None else int(cursor)
        path = self.pages[index]
        try:
            payload = read_json(path)
            results = payload["results"]
            if not isinstance(results, list):
                raise TypeError("results is not a list")
        except Exception as exc:
            raise PageParseError(f"malformed fixture page {path.name}: {exc}") from exc
        next_cursor = str(index + 1) if index + 1 < len(self.pages) else None
        return results, next_cursor


class ApiPageSource:
    """Cursor-paged works endpoint client with polite rate limiting and retries."""

    def __init__(
        self,
        seed_concept_id: str,
        base_url: str = OPENALEX_WORKS_URL,
        contact_email: str | None = None,
        page_size: int = 200,
        requests_per_second: float = 10.0,
        max_retries: int = 5,
        session: requests.Session | None = None,
    ):
        self.seed_concept_id = seed_concept_id
        self.base_url = base_url
        self.contact_email = contact_email
        self.page_size = page_size
        self.min_interval = 1.0 / requests_per_second if requests_per_second > 0 else 0.0
        self.max_retries = max_retries
        self.session = session or requests.Session()
        self._last_request = 0.0

    def _throttle(self) -> None:
        elapsed = time.monotonic() - self._last_request
        if elapsed < self.min_interval:
            time.sleep(self.min_interval - elapsed)
        self._last_request = time.monotonic()

    def fetch(self, cursor: str | None) -> tuple[list[RawWork], str | None]:
        params: dict[str, Any] = {
            "filter": f"concepts.id:{self.seed_concept_id}",
            "per-page": self.page_size,
            "cursor": cursor or "*",
        }
        headers = {}
        if self.contact_email:
            params["mailto"] = self.contact_email
            headers["User-Agent"] = f"authorkg/0.1 (mailto:{self.contact_email})"
        delay = 0.5
        last_exc: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt:
                time.sleep(min(delay, 8.0))
                delay *= 2
            self._throttle()
            try:
                response = self.session.get(
                    self.base_url, params=params, headers=headers, timeout=60
                )
            except requests.RequestException as exc:
                last_exc = exc
                logger.warning("harvest request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code in (429,) or response.status_code >= 500:
                last_exc = RuntimeError(f"HTTP {response.status_code}")
                logger.warning(
                    "harvest got HTTP %d (attempt %d)", response.status_code, attempt + 1
                )
                continue
            try:
                payload = response.json()
                results = payload["results"]
                meta = payload.get("meta") or {}
            except (ValueError, KeyError, TypeError) as exc:
                raise PageParseError(f"malformed works page at cursor {cursor!r}: {exc}") from exc
            return results, meta.get("next_cursor")
        raise HarvestError(f"harvest failed after {self.max_retries} attempts: {last_exc}", cursor)


def harvest_works(source, page_cursor: str | None = None) -> tuple[list[RawWork], str | None]:
    """Fetch one page of raw works; validates that every record carries an ID."""
    results, next_cursor = source.fetch(page_cursor)
    for i, record in enumerate(results):
        if not isinstance(record, dict) or not record.get("id"):
            raise PageParseError(
                f"record {i} at cursor {page_cursor!r} has no identifier"
            )
    return results, next_cursor


def iter_harvest(source) -> Iterator[RawWork]:
    """Walk the full cursor chain, yielding raw records page by page."""
    cursor: str | None = None
    page_num = 0
    while True:
        results, cursor = harvest_works(source, cursor)
        page_num += 1
        logger.debug("harvested page %d (%d records)", page_num, len(results))
        yield from results
        if cursor is None:
            return


# ---------------------------------------------------------------------------
# corpus persistence


def save_corpus(path: Path, records: Iterable[WorkRecord]) -> None:
    write_jsonl(path, (r.to_dict() for r in records))


def load_corpus(path: Path) -> list[WorkRecord]:
    return [WorkRecord.from_dict(d) for d in read_jsonl(path)]
