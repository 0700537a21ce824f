"""Extractor evaluation: thresholded-cosine scoring of predicted vs expected keyphrases.

A predicted phrase scores against an expected keyword through
phi(e, p) = max(0, cos(e, p) * [cos(e, p) > tau]); per-document scores average
phi over the trimmed prediction/expectation sets, and the dataset score is the
mean over scoreable documents.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .embedding import Embedder, cosine
from .errors import UserError
from .keyphrase import Keyphrase
from .storage import atomic_write_text, write_json

logger = logging.getLogger(__name__)


class EmptyEvaluationError(UserError):
    """Every document was skipped; there is nothing to average."""


@dataclass
class EvalDocument:
    doc_id: str
    predicted: list[Keyphrase]
    expected: list[str]


@dataclass
class EvalConfig:
    tau: float
    embedder: Embedder

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")


@dataclass
class EvalReport:
    per_document: dict[str, float] = field(default_factory=dict)
    dataset_score: float = 0.0
    n_documents_scored: int = 0
    n_documents_skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "dataset_score": self.dataset_score,
            "n_documents_scored": self.n_documents_scored,
            "n_documents_skipped": self.n_documents_skipped,
            "per_document": {k: self.per_document[k] for k in sorted(self.per_document)},
        }


def thresholded_similarity(e: str, p: str, config: EvalConfig) -> float:
    """phi(e, p): the cosine, forwarded only when strictly above tau, floored at 0."""
    vecs = config.embedder.embed([e, p])
    cos = cosine(vecs[0], vecs[1])
    return max(0.0, cos if cos > config.tau else 0.0)


def _trim(doc: EvalDocument) -> tuple[list[str], list[str], int]:
    """Trim to k = min(|P|, |E|): top-k predictions by confidence, first-k expected."""
    k = min(len(doc.predicted), len(doc.expected))
    if k == 0:
        return [], [], 0
    ranked = sorted(doc.predicted, key=lambda kp: (-kp.confidence, kp.text))
    predicted = [kp.text for kp in ranked[:k]]
    expected = list(doc.expected[:k])
    return expected, predicted, k


def document_score(doc: EvalDocument, config: EvalConfig) -> float | None:
    """Per-document score, or None when the document is unscoreable (k = 0).

    Equals (1/k^2) * sum over the trimmed expected x predicted phi matrix,
    which is the mean over expected keywords of their per-keyword scores.
    """
    expected, predicted, k = _trim(doc)
    if k == 0:
        return None
    vecs = config.embedder.embed(expected + predicted)
    e_vecs, p_vecs = vecs[:k], vecs[k:]
    total = 0.0
    for i in range(k):
        for j in range(k):
            cos = cosine(e_vecs[i], p_vecs[j])
            if cos > config.tau:
                total += max(0.0, cos)
    score = total / (k * k)
    return min(1.0, max(0.0, score))


def dataset_score(docs: Sequence[EvalDocument], config: EvalConfig) -> EvalReport:
    """Average document scores over the N scoreable documents."""
    report = EvalReport()
    values: list[float] = []
    for doc in docs:
        s_d = document_score(doc, config)
        if s_d is None:
            report.n_documents_skipped += 1
            continue
        report.per_document[doc.doc_id] = s_d
        values.append(s_d)
    if not values:
        raise EmptyEvaluationError("empty evaluation set: every document was skipped")
    report.n_documents_scored = len(values)
    report.dataset_score = math.fsum(values) / len(values)
    return report


def rank_extractors(reports: Mapping[str, EvalReport]) -> list[tuple[str, float]]:
    """Extractors by dataset score descending; ties break on name ascending."""
    if not reports:
        raise ValueError("need at least one report to rank")
    return sorted(
        ((name, rep.dataset_score) for name, rep in reports.items()),
        key=lambda item: (-item[1], item[0]),
    )


# ---------------------------------------------------------------------------
# evaluation sample layout
#
#   <root>/expected/<doc_id>.txt          one keyword per line
#   <root>/predicted/<extractor>/<doc_id>.json
#       {"keyphrases": [{"text": ..., "confidence": ...}, ...]}


def load_expected(root: Path) -> dict[str, list[str]]:
    expected_dir = Path(root) / "expected"
    if not expected_dir.is_dir():
        raise UserError(f"missing expected-keywords directory: {expected_dir}")
    out: dict[str, list[str]] = {}
    for path in sorted(expected_dir.glob("*.txt")):
        lines = [ln.strip() for ln in path.read_text("utf-8").splitlines()]
        out[path.stem] = [ln for ln in lines if ln]
    return out


def load_predicted(root: Path, extractor: str) -> dict[str, list[Keyphrase]]:
    pred_dir = Path(root) / "predicted" / extractor
    out: dict[str, list[Keyphrase]] = {}
    for path in sorted(pred_dir.glob("*.json")):
        payload = json.loads(path.read_text("utf-8"))
        phrases = [
            Keyphrase.make(entry["text"], float(entry["confidence"]))
            for entry in payload["keyphrases"]
        ]
        phrases.sort(key=lambda kp: (-kp.confidence, kp.text))
        out[path.stem] = phrases
    return out


def list_extractors(root: Path) -> list[str]:
    pred_dir = Path(root) / "predicted"
    if not pred_dir.is_dir():
        raise UserError(f"missing predictions directory: {pred_dir}")
    return sorted(p.name for p in pred_dir.iterdir() if p.is_dir())


def evaluate_sample(root: Path, extractor: str, config: EvalConfig) -> EvalReport:
    expected = load_expected(root)
    predicted = load_predicted(root, extractor)
    docs = [
        EvalDocument(doc_id=doc_id, predicted=predicted.get(doc_id, []), expected=keywords)
        for doc_id, keywords in sorted(expected.items())
    ]
    if not docs:
        raise EmptyEvaluationError(f"no expected-keyword files under {root}")
    return dataset_score(docs, config)


def write_report(root: Path, extractor: str, report: EvalReport) -> Path:
    path = Path(root) / f"report_{extractor}.json"
    write_json(path, report.to_dict())
    return path


def write_comparison(root: Path, reports: Mapping[str, EvalReport]) -> Path:
    """TSV: extractor, S, N, skipped — ranked best-first."""
    lines = ["extractor\tS\tN\tskipped"]
    for name, score in rank_extractors(reports):
        rep = reports[name]
        lines.append(f"{name}\t{score:.6f}\t{rep.n_documents_scored}\t{rep.n_documents_skipped}")
    path = Path(root) / "comparison.tsv"
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path
