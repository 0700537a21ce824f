"""Keyphrase extraction and research-descriptor normalization.

Two extractor backends share one interface: an offline embedding ranker
(candidate n-grams scored by cosine against the document embedding) and an
HTTP chat-completion client. Titles are capped at 2 keyphrases, abstracts at
10, both ranked by confidence.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Sequence

import requests

from .embedding import Embedder, cosine, tokenize
from .errors import AuthorKGError, RetriableError

TITLE_KEYPHRASE_CAP = 2
ABSTRACT_KEYPHRASE_CAP = 10

LLM_API_KEY_ENV = "KG_LLM_API_KEY"

DEFAULT_PROMPT_TEMPLATE = (
    "Extract up to {max_candidates} short keyphrases that best represent the text below. "
    "Phrases must not contain commas. Respond with a JSON array of objects, each "
    '{{"phrase": "<keyphrase>", "score": <number in [0,1]>}}, ordered by descending score.\n'
    "Text:\n{text}"
)
_STRICT_SUFFIX = "\nReturn the JSON array only: no prose, no code fences."


class ExtractionError(RetriableError):
    """Extractor endpoint unreachable after retries."""


class ExtractorResponseError(AuthorKGError):
    """Extractor returned a payload that cannot be parsed; raw response attached."""

    def __init__(self, message: str, raw_response: str):
        super().__init__(message)
        self.raw_response = raw_response


# ---------------------------------------------------------------------------
# descriptor normalization


def _load_stopwords() -> frozenset[str]:
    text = resources.files("authorkg").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


STOPWORDS = _load_stopwords()

# Tokens singularization must leave alone (domain terms the suffix rules would mangle).
_SINGULAR_EXCEPTIONS = frozenset(
    {"glass", "analysis", "gas", "bias", "lens", "series", "species", "basis", "axis", "plus"}
)

_WS_RE = re.compile(r"\s+")


def _singularize_token(token: str) -> str:
    # Every branch returns a fixed point of this function; that is what makes
    # normalize_descriptor idempotent.
    if token in _SINGULAR_EXCEPTIONS:
        return token
    if len(token) > 4 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) > 4 and token.endswith("sses"):
        return token[:-2]
    if len(token) > 3 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def normalize_descriptor(text: str) -> str:
    """Lowercase, trim, collapse whitespace, singularize the final token."""
    collapsed = _WS_RE.sub(" ", text.strip().lower())
    if not collapsed:
        return ""
    head, _, last = collapsed.rpartition(" ")
    last = _singularize_token(last)
    return f"{head} {last}" if head else last


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Keyphrase:
    text: str
    normalized_text: str
    confidence: float

    @classmethod
    def make(cls, text: str, confidence: float) -> "Keyphrase":
        return cls(text=text, normalized_text=normalize_descriptor(text), confidence=confidence)

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "normalized_text": self.normalized_text,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Keyphrase":
        return cls(d["text"], d["normalized_text"], d["confidence"])


@dataclass
class KeyphraseSet:
    work_id: str
    title_keyphrases: list[Keyphrase] = field(default_factory=list)
    abstract_keyphrases: list[Keyphrase] = field(default_factory=list)

    def all_keyphrases(self) -> list[tuple[str, Keyphrase]]:
        """(source, keyphrase) pairs; source is "title" or "abstract"."""
        return [("title", k) for k in self.title_keyphrases] + [
            ("abstract", k) for k in self.abstract_keyphrases
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "work_id": self.work_id,
            "title_keyphrases": [k.to_dict() for k in self.title_keyphrases],
            "abstract_keyphrases": [k.to_dict() for k in self.abstract_keyphrases],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "KeyphraseSet":
        return cls(
            work_id=d["work_id"],
            title_keyphrases=[Keyphrase.from_dict(k) for k in d["title_keyphrases"]],
            abstract_keyphrases=[Keyphrase.from_dict(k) for k in d["abstract_keyphrases"]],
        )


@dataclass
class ExtractorSpec:
    kind: str  # "llm_http" | "embedding_rank"
    endpoint: str | None = None
    model_name: str | None = None
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    max_candidates: int = 20

    def __post_init__(self) -> None:
        if self.kind not in ("llm_http", "embedding_rank"):
            raise ValueError(f"unknown extractor kind {self.kind!r}")
        if self.kind == "llm_http" and not self.endpoint:
            raise ValueError("llm_http extractor requires an endpoint")


# ---------------------------------------------------------------------------
# candidate generation + embedding ranking


def candidate_phrases(text: str, max_ngram: int = 3) -> list[str]:
    """Uni/bi/tri-gram spans containing no stopwords and at least one alphabetic token."""
    tokens = tokenize(text)
    seen: set[str] = set()
    out: list[str] = []
    for n in range(1, max_ngram + 1):
        for i in range(len(tokens) - n + 1):
            span = tokens[i : i + n]
            if any(t in STOPWORDS for t in span):
                continue
            if not any(any(c.isalpha() for c in t) for t in span):
                continue
            phrase = " ".join(span)
            key = normalize_descriptor(phrase)
            if key in seen:
                continue
            seen.add(key)
            out.append(phrase)
    return out


def rank_candidates_by_embedding(
    document_text: str, candidates: Sequence[str], embedder: Embedder
) -> list[tuple[str, float]]:
    """Candidates sorted by cosine against the document embedding, descending.

    Confidences are the cosines clamped to [0, 1]; ties break lexicographically.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    vectors = embedder.embed([document_text, *candidates])
    doc_vec = vectors[0]
    scored = []
    for cand, vec in zip(candidates, vectors[1:]):
        score = min(1.0, max(0.0, cosine(doc_vec, vec)))
        scored.append((cand, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


class EmbeddingRankExtractor:
    """Offline extractor: rank candidate n-grams by embedding cosine."""

    def __init__(self, embedder: Embedder, max_candidates: int = 20):
        self.embedder = embedder
        self.max_candidates = max_candidates

    def extract(self, text: str, limit: int) -> list[Keyphrase]:
        candidates = candidate_phrases(text)
        if not candidates:
            return []
        ranked = rank_candidates_by_embedding(text, candidates, self.embedder)
        return [Keyphrase.make(c, s) for c, s in ranked[: max(limit, self.max_candidates)]]


class LlmHttpExtractor:
    """Chat-completion HTTP extractor.

    Sends the fixed prompt at temperature 0 and expects a JSON array of
    {"phrase", "score"} objects back; retries once with a stricter JSON-only
    suffix before giving up on an unparseable response.
    """

    def __init__(
        self,
        spec: ExtractorSpec,
        transport: Callable[..., requests.Response] | None = None,
        timeout: float = 60.0,
    ):
        if spec.kind != "llm_http":
            raise ValueError("LlmHttpExtractor requires an llm_http spec")
        self.spec = spec
        self.transport = transport or requests.post
        self.timeout = timeout

    def _request(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(LLM_API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.spec.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        try:
            response = self.transport(
                self.spec.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ExtractionError(f"extractor endpoint unreachable: {exc}") from exc
        if response.status_code >= 500:
            raise ExtractionError(f"extractor endpoint returned {response.status_code}")
        if response.status_code != 200:
            raise ExtractorResponseError(
                f"extractor endpoint returned {response.status_code}", response.text
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ExtractorResponseError(
                f"malformed chat-completion envelope: {exc}", response.text
            ) from exc

    @staticmethod
    def _parse_phrases(content: str) -> list[tuple[str, float]]:
        stripped = content.strip()
        if stripped.startswith("```"):
            stripped = re.sub(r"^```[a-zA-Z]*\n?|```$", "", stripped).strip()
        data = json.loads(stripped)
        if not isinstance(data, list):
            raise ValueError("expected a JSON array")
        out = []
        for item in data:
            phrase = str(item["phrase"]).strip()
            score = float(item["score"])
            if phrase:
                out.append((phrase, min(1.0, max(0.0, score))))
        return out

    def extract(self, text: str, limit: int) -> list[Keyphrase]:
        prompt = self.spec.prompt_template.format(
            max_candidates=self.spec.max_candidates, text=text
        )
        content = self._request(prompt)
        try:
            pairs = self._parse_phrases(content)
        except (ValueError, KeyError, TypeError):
            content = self._request(prompt + _STRICT_SUFFIX)
            try:
                pairs = self._parse_phrases(content)
            except (ValueError, KeyError, TypeError) as exc:
                raise ExtractorResponseError(
                    f"unparseable extractor response: {exc}", content
                ) from exc
        return [Keyphrase.make(p, s) for p, s in pairs]


def build_extractor(
    spec: ExtractorSpec,
    embedder: Embedder | None = None,
    transport: Callable[..., requests.Response] | None = None,
):
    if spec.kind == "embedding_rank":
        if embedder is None:
            raise ValueError("embedding_rank extractor requires an embedding provider")
        return EmbeddingRankExtractor(embedder, max_candidates=spec.max_candidates)
    return LlmHttpExtractor(spec, transport=transport)


# ---------------------------------------------------------------------------
# top-level extraction


def _finalize(phrases: list[Keyphrase], cap: int) -> list[Keyphrase]:
    # highest confidence first, lexicographic on ties, one entry per normalized text
    ordered = sorted(phrases, key=lambda k: (-k.confidence, k.normalized_text, k.text))
    out: list[Keyphrase] = []
    seen: set[str] = set()
    for kp in ordered:
        if not kp.normalized_text or kp.normalized_text in seen:
            continue
        seen.add(kp.normalized_text)
        out.append(kp)
        if len(out) == cap:
            break
    return out


def extract_keyphrases(
    title: str,
    abstract: str | None,
    extractor,
    max_title: int = TITLE_KEYPHRASE_CAP,
    max_abstract: int = ABSTRACT_KEYPHRASE_CAP,
    work_id: str = "",
) -> KeyphraseSet:
    """Extract capped, confidence-ranked keyphrase lists for one document."""
    if not title and not abstract:
        raise ValueError("need a title or an abstract to extract from")
    title_kps: list[Keyphrase] = []
    if title:
        title_kps = _finalize(extractor.extract(title, max_title), max_title)
    abstract_kps: list[Keyphrase] = []
    if abstract:
        abstract_kps = _finalize(extractor.extract(abstract, max_abstract), max_abstract)
    return KeyphraseSet(
        work_id=work_id, title_keyphrases=title_kps, abstract_keyphrases=abstract_kps
    )
