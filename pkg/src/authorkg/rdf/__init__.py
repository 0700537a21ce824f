"""RDF export: Wikidata enrichment, triple building, and serialization.

Authors, works, and research descriptors each get a URI under the configured
namespace; established bibliographic predicates (creator, title, date,
publisher, subject) are reused and the full predicate table is versioned in
``predicates.json`` next to this module.

Both serializers are deterministic: N-Triples output is sorted line-wise and
Turtle output is subject-grouped with sorted predicates and objects, so equal
graphs always serialize to identical bytes.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping
from urllib.parse import quote

import requests

from ..errors import AuthorKGError, RetriableError
from ..ingest import WorkRecord
from ..keyphrase import KeyphraseSet, normalize_descriptor
from ..storage import read_json, write_json
from ..vectors import DescriptorVocabulary

XSD_STRING = "http://www.w3.org/2001/XMLSchema#string"
XSD_DATE = "http://www.w3.org/2001/XMLSchema#date"
XSD_GYEAR = "http://www.w3.org/2001/XMLSchema#gYear"
WIKIDATA_ENTITY_NS = "http://www.wikidata.org/entity/"

_QID_RE = re.compile(r"^Q\d+$")
_ABS_URI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")
_BAD_IRI_CHARS = re.compile(r'[\x00-\x20<>"{}|^`\\]')


class SerializationError(AuthorKGError):
    pass


class GraphConsistencyError(AuthorKGError):
    pass


class ResolverUnavailableError(RetriableError):
    pass


def load_predicates() -> dict[str, Any]:
    text = resources.files("authorkg.rdf").joinpath("predicates.json").read_text("utf-8")
    return json.loads(text)


# ---------------------------------------------------------------------------
# terms and graph


@dataclass(frozen=True)
class URIRef:
    value: str


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING
    language: str | None = None


Term = URIRef | Literal


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Term


@dataclass
class TripleGraph:
    namespace: str
    triples: set[Triple] = field(default_factory=set)

    def add(self, subject: str, predicate: str, obj: Term) -> None:
        for uri in (subject, predicate):
            if not _ABS_URI_RE.match(uri):
                raise SerializationError(f"not an absolute URI: {uri!r}")
        self.triples.add(Triple(subject, predicate, obj))

    def __len__(self) -> int:
        return len(self.triples)


# ---------------------------------------------------------------------------
# URI minting

_KIND_SEGMENTS = {"author": "author/", "work": "work/", "descriptor": "descriptor/"}


def mint_uri(entity_kind: str, key: str, namespace: str) -> str:
    """<namespace><kind>/<percent-encoded key>; injective per kind."""
    segment = _KIND_SEGMENTS.get(entity_kind)
    if segment is None:
        raise ValueError(f"unknown entity kind {entity_kind!r}")
    if not namespace.endswith("/"):
        raise ValueError("namespace must end with '/'")
    encoded = quote(key, safe="")
    if not encoded:
        raise ValueError("key percent-encodes to the empty string")
    return f"{namespace}{segment}{encoded}"


# ---------------------------------------------------------------------------
# Wikidata enrichment


@dataclass(frozen=True)
class WikidataLink:
    name: str
    qid: str
    retrieved_at: str
    source: str  # live | cache | manual

    def __post_init__(self) -> None:
        if not _QID_RE.match(self.qid):
            raise ValueError(f"malformed QID {self.qid!r}")

    def entity_uri(self) -> str:
        return WIKIDATA_ENTITY_NS + self.qid


def normalize_link_key(name: str) -> str:
    return re.sub(r"\s+", " ", name.strip().lower())


class WikidataResolver:
    """Entity-search client with a mandatory on-disk cache.

    Cache-first: a cached entry (including a cached miss, stored as null) is
    never overwritten. Live lookups run only when allow_network is set; a
    lookup resolves only on an unambiguous label/alias match, never a guess.
    """

    def __init__(
        self,
        cache_path: str | Path,
        endpoint: str = "https://www.wikidata.org/w/api.php",
        allow_network: bool = False,
        transport: Callable[..., requests.Response] | None = None,
    ):
        self.cache_path = Path(cache_path)
        self.endpoint = endpoint
        self.allow_network = allow_network
        self.transport = transport or requests.get
        self._cache: dict[str, dict[str, Any]] = {}
        if self.cache_path.exists():
            self._cache = read_json(self.cache_path)

    def _store(self, key: str, qid: str | None, source: str) -> None:
        if key in self._cache:
            return  # cache entries are immutable
        self._cache[key] = {
            "qid": qid,
            "retrieved_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "source": source,
        }
        write_json(self.cache_path, dict(sorted(self._cache.items())))

    def _search(self, name: str) -> str | None:
        params = {
            "action": "wbsearchentities",
            "search": name,
            "language": "en",
            "type": "item",
            "format": "json",
            "limit": 10,
        }
        try:
            response = self.transport(self.endpoint, params=params, timeout=30)
            response.raise_for_status()
            hits = response.json().get("search", [])
        except (requests.RequestException, ValueError) as exc:
            raise ResolverUnavailableError(f"wikidata lookup failed for {name!r}: {exc}") from exc
        exact = [h for h in hits if h.get("label") == name]
        if len(exact) == 1:
            return exact[0]["id"]
        lowered = name.lower()
        loose = [
            h
            for h in hits
            if (h.get("label") or "").lower() == lowered
            or any(a.lower() == lowered for a in h.get("aliases") or [])
        ]
        if len(loose) == 1:
            return loose[0]["id"]
        return None  # zero or ambiguous: never guess

    def resolve(self, name: str) -> WikidataLink | None:
        key = normalize_link_key(name)
        if not key:
            return None
        entry = self._cache.get(key)
        if entry is not None:
            if entry["qid"] is None:
                return None
            return WikidataLink(name=name, qid=entry["qid"], retrieved_at=entry["retrieved_at"],
                                source="cache")
        if not self.allow_network:
            return None
        qid = self._search(name)
        self._store(key, qid, "live")
        if qid is None:
            return None
        return WikidataLink(name=name, qid=qid, retrieved_at=self._cache[key]["retrieved_at"],
                            source="live")


def resolve_affiliation_qid(institution_name: str, resolver: WikidataResolver) -> WikidataLink | None:
    """Resolve an institution name to its Wikidata entity, or None if unresolved."""
    if not institution_name.strip():
        raise ValueError("institution name must be non-empty")
    return resolver.resolve(institution_name)


# ---------------------------------------------------------------------------
# triple building


def latest_affiliations(works: Iterable[WorkRecord]) -> dict[str, tuple[str, str | None]]:
    """Per author: (display name, affiliation name) from the most recent work
    (ties broken by greatest work_id)."""
    latest: dict[str, tuple[tuple[str, str], str, str | None]] = {}
    for work in works:
        order_key = (work.publication_date, work.work_id)
        for ref in work.authorships:
            current = latest.get(ref.author_id)
            if current is None or order_key > current[0]:
                latest[ref.author_id] = (order_key, ref.display_name, ref.affiliation_name)
    return {a: (name, aff) for a, (_, name, aff) in latest.items()}


def work_descriptors(
    work: WorkRecord, keyphrases: KeyphraseSet | None, vocab: DescriptorVocabulary
) -> list[str]:
    """A work's research descriptors: its pruned concepts plus its extracted
    keyphrases that made the vocabulary (union, normalized)."""
    names = {normalize_descriptor(c.display_name) for c in work.concepts}
    if keyphrases is not None:
        for _, kp in keyphrases.all_keyphrases():
            if kp.normalized_text in vocab.index:
                names.add(kp.normalized_text)
    names.discard("")
    return sorted(names)


def build_triples(
    works: Iterable[WorkRecord],
    keyphrase_sets: Mapping[str, KeyphraseSet],
    vocab: DescriptorVocabulary,
    links: Mapping[str, WikidataLink],
    namespace: str,
    predicates: dict[str, Any] | None = None,
) -> TripleGraph:
    """Emit the full graph: author nodes (name, affiliation, optional Wikidata
    entity), work nodes (title, date, publisher, authorship, descriptors), and
    descriptor nodes (label, optional Wikidata match)."""
    table = predicates or load_predicates()
    pred = table["predicates"]
    classes = table["classes"]
    works = list(works)

    known_ids = {w.work_id for w in works}
    dangling = sorted(set(keyphrase_sets) - known_ids)
    if dangling:
        raise GraphConsistencyError(
            f"keyphrase sets reference unknown works: {', '.join(dangling[:5])}"
        )

    graph = TripleGraph(namespace=namespace)
    directory = latest_affiliations(works)

    for author_id, (display_name, affiliation) in sorted(directory.items()):
        author_uri = mint_uri("author", author_id, namespace)
        graph.add(author_uri, pred["type"], URIRef(classes["author"]))
        graph.add(author_uri, pred["name"], Literal(display_name))
        if affiliation:
            graph.add(author_uri, pred["affiliation_name"], Literal(affiliation))
            link = links.get(normalize_link_key(affiliation))
            if link is not None:
                graph.add(author_uri, pred["affiliation_entity"], URIRef(link.entity_uri()))

    descriptor_names: set[str] = set()
    for work in works:
        work_uri = mint_uri("work", work.work_id, namespace)
        graph.add(work_uri, pred["type"], URIRef(classes["work"]))
        if work.title:
            graph.add(work_uri, pred["title"], Literal(work.title))
        graph.add(work_uri, pred["date"], Literal(work.publication_date, datatype=XSD_DATE))
        if work.publisher_name:
            graph.add(work_uri, pred["publisher"], Literal(work.publisher_name))
        for author_id in work.distinct_author_ids():
            graph.add(work_uri, pred["creator"], URIRef(mint_uri("author", author_id, namespace)))
        for name in work_descriptors(work, keyphrase_sets.get(work.work_id), vocab):
            descriptor_names.add(name)
            graph.add(work_uri, pred["subject"], URIRef(mint_uri("descriptor", name, namespace)))

    for name in sorted(descriptor_names):
        descriptor_uri = mint_uri("descriptor", name, namespace)
        graph.add(descriptor_uri, pred["type"], URIRef(classes["descriptor"]))
        graph.add(descriptor_uri, pred["label"], Literal(name))
        link = links.get(normalize_link_key(name))
        if link is not None:
            graph.add(descriptor_uri, pred["descriptor_match"], URIRef(link.entity_uri()))

    return graph


# ---------------------------------------------------------------------------
# serialization

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape_literal(lexical: str, triple: Triple) -> str:
    try:
        lexical.encode("utf-8")
    except UnicodeEncodeError as exc:
        raise SerializationError(f"unencodable literal in triple {triple}: {exc}") from exc
    out = []
    for ch in lexical:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def _check_iri(uri: str, triple: Triple) -> str:
    if _BAD_IRI_CHARS.search(uri) or not _ABS_URI_RE.match(uri):
        raise SerializationError(f"invalid IRI {uri!r} in triple {triple}")
    return uri


def _nt_term(term: Term, triple: Triple) -> str:
    if isinstance(term, URIRef):
        return f"<{_check_iri(term.value, triple)}>"
    quoted = f'"{_escape_literal(term.lexical, triple)}"'
    if term.language:
        return f"{quoted}@{term.language}"
    if term.datatype and term.datatype != XSD_STRING:
        return f"{quoted}^^<{_check_iri(term.datatype, triple)}>"
    return quoted


def _nt_line(triple: Triple) -> str:
    subject = f"<{_check_iri(triple.subject, triple)}>"
    predicate = f"<{_check_iri(triple.predicate, triple)}>"
    return f"{subject} {predicate} {_nt_term(triple.object, triple)} ."


_PN_LOCAL_RE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.-]|%[0-9A-Fa-f]{2})*$")


def _pname(uri: str, prefixes: Mapping[str, str]) -> str | None:
    best: tuple[str, str] | None = None
    for prefix, ns in prefixes.items():
        if uri.startswith(ns) and (best is None or len(ns) > len(prefixes[best[0]])):
            best = (prefix, uri[len(ns) :])
    if best is None:
        return None
    prefix, local = best
    if local and (not _PN_LOCAL_RE.match(local) or local.endswith(".")):
        return None
    return f"{prefix}:{local}"


def _ttl_uri(uri: str, prefixes: Mapping[str, str], triple: Triple) -> str:
    pname = _pname(uri, prefixes)
    return pname if pname is not None else f"<{_check_iri(uri, triple)}>"


def _ttl_term(term: Term, prefixes: Mapping[str, str], triple: Triple) -> str:
    if isinstance(term, URIRef):
        return _ttl_uri(term.value, prefixes, triple)
    quoted = f'"{_escape_literal(term.lexical, triple)}"'
    if term.language:
        return f"{quoted}@{term.language}"
    if term.datatype and term.datatype != XSD_STRING:
        return f"{quoted}^^{_ttl_uri(term.datatype, prefixes, triple)}"
    return quoted


RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


def serialize_graph(graph: TripleGraph, format: str = "ntriples") -> bytes:
    """Serialize to canonical, deterministic N-Triples or Turtle bytes."""
    if format == "ntriples":
        lines = sorted(_nt_line(t) for t in graph.triples)
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    if format != "turtle":
        raise ValueError(f"unknown serialization format {format!r}")

    prefixes = dict(load_predicates()["prefixes"])
    prefixes.setdefault("", graph.namespace)
    out = [f"@prefix {p}: <{ns}> ." for p, ns in sorted(prefixes.items())]
    out.append("")

    by_subject: dict[str, dict[str, list[Term]]] = {}
    for t in graph.triples:
        by_subject.setdefault(t.subject, {}).setdefault(t.predicate, []).append(t.object)

    def term_sort_key(term: Term) -> tuple:
        if isinstance(term, URIRef):
            return (0, term.value, "", "")
        return (1, term.lexical, term.datatype, term.language or "")

    for subject in sorted(by_subject):
        probe = Triple(subject, RDF_TYPE, URIRef(RDF_TYPE))
        lines = []
        for predicate in sorted(by_subject[subject]):
            rendered_pred = "a" if predicate == RDF_TYPE else _ttl_uri(predicate, prefixes, probe)
            objects = sorted(by_subject[subject][predicate], key=term_sort_key)
            rendered_objs = ", ".join(_ttl_term(o, prefixes, probe) for o in objects)
            lines.append(f"{rendered_pred} {rendered_objs}")
        subject_str = _ttl_uri(subject, prefixes, probe)
        body = " ;\n    ".join(lines)
        out.append(f"{subject_str} {body} .")
    return ("\n".join(out) + "\n").encode("utf-8")
