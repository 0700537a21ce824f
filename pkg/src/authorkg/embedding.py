"""Embedding providers and cosine helpers.

The hash embedder is the deterministic, fully offline provider the test suite
and fixture pipeline run on: each token maps to a fixed pseudo-random vector
seeded from its sha256, and a text embeds as the normalized token-vector sum.
Texts sharing tokens therefore land near each other, which is all the ranking
and evaluation code needs from a provider.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:[-'][A-Za-z0-9]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; internal hyphens/apostrophes kept."""
    return [t.lower() for t in _TOKEN_RE.findall(text)]


class Embedder(Protocol):
    dim: int

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return an array of shape (len(texts), dim); rows need not be unit norm."""
        ...


class HashEmbedder:
    """Deterministic hash-to-vector embedder (process- and run-independent)."""

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 2:
            raise ValueError("embedding dim must be >= 2")
        self.dim = dim
        self.seed = seed
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.sha256(f"{self.seed}:{token}".encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
            vec = rng.standard_normal(self.dim)
            self._token_cache[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            tokens = tokenize(text)
            if not tokens:
                continue
            acc = np.zeros(self.dim)
            for token in tokens:
                acc += self._token_vector(token)
            norm = float(np.linalg.norm(acc))
            if norm > 0.0:
                out[row] = acc / norm
        return out


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity with an exact identity fast path.

    cos(x, x) is mathematically 1; the fast path returns it exactly instead of
    the float-noise value the dot/norm route would produce.
    """
    if u.shape != v.shape:
        raise ValueError(f"embedding shape mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    if np.array_equal(u, v):
        return 1.0
    return float(np.dot(u, v) / (nu * nv))


def build_embedder(spec: str) -> Embedder:
    """Build a provider from a config reference like "hash", "hash:32", "hash:32:7"."""
    parts = spec.split(":")
    if parts[0] != "hash":
        raise ValueError(f"unknown embedder kind {parts[0]!r} (supported: hash)")
    dim = int(parts[1]) if len(parts) > 1 else 64
    seed = int(parts[2]) if len(parts) > 2 else 0
    return HashEmbedder(dim=dim, seed=seed)
