"""Similarity re-ranking of top-k predictions against the session summary.

The summary and each candidate item's attribute text are embedded; the
candidate list is reordered by cosine similarity, descending, with ties
keeping the base model's order. A deterministic hashing embedder serves as
the offline provider; a live HTTP provider plugs into the same contract
(unit-norm vectors).
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .catalog import CatalogSnapshot, attribute_text
from .errors import (
    DimensionMismatchError,
    DuplicateItemError,
    ProviderUnavailableError,
    UnsortedScoresError,
)
from .summarize import ABSENT, KeywordSummary

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_FNV_MASK = (1 << 64) - 1

_TOKEN = re.compile(r"[0-9a-z]+")

DEFAULT_DIM = 256


def _fnv1a_64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _FNV_MASK
    return h


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run."""
    return _TOKEN.findall(text.lower())


def hash_embed(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic bag-of-tokens embedding.

    Each token hashes (FNV-1a, 64-bit) to a coordinate mod dim; counts
    accumulate and the vector is L2-normalized. No tokens yields the zero
    vector.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    vec = np.zeros(dim)
    for token in tokenize(text):
        vec[_fnv1a_64(token) % dim] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector is zero."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"dimensions differ: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class EmbeddingProvider(Protocol):
    """Anything that maps text to a fixed-dimension unit-norm (or zero) vector."""

    dim: int

    def embed(self, text: str) -> np.ndarray: ...


class HashEmbeddingProvider:
    """The deterministic offline provider; memoizes per instance."""

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = hash_embed(text, self.dim)
            self._cache[text] = vec
        return vec


class LiveEmbeddingProvider:
    """HTTP text-embedding client with the same unit-norm contract.

    Configured via arguments or INTERAREC_EMBED_URL / INTERAREC_EMBED_KEY.
    """

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        *,
        dim: int = DEFAULT_DIM,
        client=None,
    ):
        self.url = url or os.environ.get("INTERAREC_EMBED_URL")
        self.api_key = api_key or os.environ.get("INTERAREC_EMBED_KEY")
        self.dim = dim
        self._client = client
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        if not self.url:
            raise ProviderUnavailableError(
                "embedding provider not configured: set INTERAREC_EMBED_URL"
            )
        import httpx

        if self._client is None:
            self._client = httpx.Client(timeout=30.0)
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._client.post(
                self.url, json={"input": [text]}, headers=headers
            )
        except httpx.HTTPError as exc:
            raise ProviderUnavailableError(f"transport error: {exc}") from exc
        if response.status_code != 200:
            raise ProviderUnavailableError(
                f"provider returned {response.status_code}"
            )
        try:
            values = np.asarray(
                response.json()["data"][0]["embedding"], dtype=float
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderUnavailableError(f"malformed provider response: {exc}") from exc
        norm = float(np.linalg.norm(values))
        if norm > 0.0:
            values = values / norm
        self._cache[text] = values
        return values


# --- embedding cache file ------------------------------------------------------

def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class CachingProvider:
    """Wraps a provider with a line-delimited JSON cache file.

    Rows are {text_hash, dim, values}; hits never touch the inner provider.
    """

    def __init__(self, inner: EmbeddingProvider, path: Path | str):
        self.inner = inner
        self.dim = inner.dim
        self.path = Path(path)
        self._cache: dict[str, np.ndarray] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    row = json.loads(line)
                    if row.get("dim") == self.dim:
                        self._cache[row["text_hash"]] = np.asarray(
                            row["values"], dtype=float
                        )

    def embed(self, text: str) -> np.ndarray:
        key = text_digest(text)
        vec = self._cache.get(key)
        if vec is not None:
            return vec
        vec = self.inner.embed(text)
        self._cache[key] = vec
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {"text_hash": key, "dim": self.dim, "values": [float(x) for x in vec]}
                )
                + "\n"
            )
        return vec


# --- ranked predictions ----------------------------------------------------------

@dataclass(frozen=True)
class PredictionEntry:
    item_id: str
    score: float


@dataclass(frozen=True)
class RankedPredictions:
    """A model's top-k list: distinct items, scores non-increasing."""

    session_id: str
    entries: tuple[PredictionEntry, ...]
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if len(self.entries) > self.k:
            raise ValueError(f"{len(self.entries)} entries exceed k={self.k}")
        seen = set()
        for entry in self.entries:
            if entry.item_id in seen:
                raise DuplicateItemError(f"duplicate item {entry.item_id!r}")
            seen.add(entry.item_id)
        for a, b in zip(self.entries, self.entries[1:]):
            if b.score > a.score:
                raise UnsortedScoresError(
                    f"scores increase at {b.item_id!r}: {a.score} -> {b.score}"
                )

    @property
    def item_ids(self) -> tuple[str, ...]:
        return tuple(e.item_id for e in self.entries)


def summary_to_text(summary: KeywordSummary) -> str:
    """Serialize the summary for embedding: present category values joined '. '."""
    return ". ".join(v for v in summary.entries.values() if v != ABSENT)


def rerank_topk(
    predictions: RankedPredictions,
    summary: KeywordSummary,
    catalog: CatalogSnapshot,
    provider: EmbeddingProvider,
) -> RankedPredictions:
    """Reorder the top-k list by summary similarity, descending.

    The summary embeds once; each entry's attribute text embeds once.
    Items missing from the catalog embed as empty text (cosine 0). Ties
    keep the base model's order; the new scores are the cosines.
    """
    if not predictions.entries:
        return predictions
    summary_vec = provider.embed(summary_to_text(summary))
    scored = []
    for position, entry in enumerate(predictions.entries):
        item = catalog.get(entry.item_id)
        text = attribute_text(item) if item is not None else ""
        similarity = cosine(summary_vec, provider.embed(text))
        scored.append((-similarity, position, entry.item_id))
    scored.sort()
    return RankedPredictions(
        session_id=predictions.session_id,
        entries=tuple(
            PredictionEntry(item_id=item_id, score=-neg)
            for neg, _, item_id in scored
        ),
        k=predictions.k,
    )
