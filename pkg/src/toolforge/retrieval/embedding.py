"""Embedding providers.

A provider exposes ``dim`` and ``embed_batch(texts) -> sequence of vectors``.
Two ship here: a hashed bag-of-tokens stub that needs no network, and a
minimal HTTP/JSON client.
"""

from __future__ import annotations

import hashlib
import json
import math
import urllib.error
import urllib.request
from collections import Counter
from collections.abc import Sequence
from typing import Protocol

import numpy as np

from ..errors import DimensionMismatch, ProviderError
from .ranking import tokenize

_EMPTY_TOKEN = "\x00empty"


class EmbeddingProvider(Protocol):
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> Sequence[Sequence[float]]: ...


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def stub_embed(text: str, dim: int) -> np.ndarray:
    """Hash token counts into ``dim`` buckets and L2-normalize.

    Depends only on the token multiset, so word order is irrelevant. Text
    without tokens maps to a fixed sentinel bucket so the norm stays 1.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    counts = Counter(tokenize(text)) or Counter({_EMPTY_TOKEN: 1})
    vec = np.zeros(dim, dtype=np.float64)
    for token, n in counts.items():
        vec[_bucket(token, dim)] += n
    return vec / math.sqrt(float(np.dot(vec, vec)))


class StubEmbedder:
    """Deterministic offline stand-in for a paid embedding model."""

    name = "stub"

    def __init__(self, dim: int = 1024):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [stub_embed(t, self.dim) for t in texts]


class HttpEmbedder:
    """Client for an embedding endpoint speaking a small JSON contract.

    Request body: ``{"texts": [...]}``. Response body:
    ``{"embeddings": [[...], ...]}`` with one vector per text, in order.
    Texts are sent in batches of ``batch_size``.
    """

    name = "http"

    def __init__(self, url: str, dim: int, *, timeout: float = 30.0, batch_size: int = 64):
        self.url = url
        self.dim = dim
        self.timeout = timeout
        self.batch_size = batch_size

    def _post(self, texts: Sequence[str]) -> list[list[float]]:
        body = json.dumps({"texts": list(texts)}).encode("utf-8")
        req = urllib.request.Request(self.url, data=body, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise ProviderError(f"embedding request to {self.url} failed: {exc}") from exc
        vectors = payload.get("embeddings") if isinstance(payload, dict) else None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("embedding response must carry one vector per text under 'embeddings'")
        return vectors

    def embed_batch(self, texts: Sequence[str]) -> list[list[float]]:
        out: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            out.extend(self._post(texts[start : start + self.batch_size]))
        return out


def embed(provider: EmbeddingProvider, texts: Sequence[str], *, expected_dim: int | None = None) -> np.ndarray:
    """Embed ``texts`` and return an ``(n, dim)`` float64 matrix.

    Validates count, dimensionality and finiteness of whatever the provider
    returns.
    """
    if not texts:
        raise ValueError("texts must be non-empty")
    raw = provider.embed_batch(list(texts))
    if len(raw) != len(texts):
        raise ProviderError(f"provider returned {len(raw)} vectors for {len(texts)} texts")
    try:
        matrix = np.asarray(raw, dtype=np.float64)
    except ValueError as exc:
        raise DimensionMismatch(f"provider returned ragged vectors: {exc}") from None
    if matrix.ndim != 2:
        raise DimensionMismatch("provider returned ragged vectors")
    dim = expected_dim if expected_dim is not None else provider.dim
    if matrix.shape[1] != dim:
        raise DimensionMismatch(f"expected dim {dim}, provider returned {matrix.shape[1]}")
    if not np.all(np.isfinite(matrix)):
        raise ProviderError("provider returned non-finite values")
    return matrix
