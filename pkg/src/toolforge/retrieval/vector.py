from __future__ import annotations

import json
from collections.abc import Collection, Mapping
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from ..errors import DataError, DimensionMismatch, ProviderError
from ..registry import Registry, ToolSpec
from .embedding import EmbeddingProvider, embed
from .ranking import RankedHit, Source, rank_scores

SNAPSHOT_FORMAT = "toolforge-vector-index"
SNAPSHOT_VERSION = 1


class TextMode(str, Enum):
    DESCRIPTION_ONLY = "description_only"
    DESCRIPTION_PLUS_ENRICHMENT = "description_plus_enrichment"


def tool_document(tool: ToolSpec, mode: TextMode = TextMode.DESCRIPTION_PLUS_ENRICHMENT) -> str:
    """Text indexed for a tool: name, description, and enrichment when asked for and present."""
    parts = [tool.name, tool.description]
    if mode is TextMode.DESCRIPTION_PLUS_ENRICHMENT and tool.enriched_context:
        parts.append(tool.enriched_context)
    return "\n".join(parts)


def tool_documents(registry: Registry, mode: TextMode = TextMode.DESCRIPTION_PLUS_ENRICHMENT) -> dict[str, str]:
    return {tid: tool_document(t, mode) for tid, t in registry.tools.items()}


def app_documents(registry: Registry) -> dict[str, str]:
    return {aid: f"{a.name}\n{a.description}" for aid, a in registry.apps.items()}


@dataclass(frozen=True, eq=False)
class VectorIndex:
    ids: tuple[str, ...]
    matrix: np.ndarray  # (n, dim), rows L2-normalized
    dim: int
    text_mode: TextMode = TextMode.DESCRIPTION_PLUS_ENRICHMENT

    def __post_init__(self) -> None:
        self.matrix.setflags(write=False)

    def __len__(self) -> int:
        return len(self.ids)

    def row_of(self, ident: str) -> int:
        return self.ids.index(ident)


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return m / norms


def build_index(documents: Mapping[str, str], embedder: EmbeddingProvider, *, text_mode: TextMode = TextMode.DESCRIPTION_PLUS_ENRICHMENT) -> VectorIndex:
    ids = tuple(sorted(documents))
    if not ids:
        return VectorIndex((), np.zeros((0, embedder.dim)), embedder.dim, text_mode)
    texts = [documents[i] for i in ids]
    try:
        matrix = embed(embedder, texts)
    except ProviderError:
        # re-embed one by one to name the offending document
        for ident, text in zip(ids, texts):
            try:
                embed(embedder, [text])
            except ProviderError as exc:
                raise type(exc)(f"{ident}: {exc}") from exc
        raise
    return VectorIndex(ids, _normalize_rows(matrix), embedder.dim, text_mode)


def build_vector_index(registry: Registry, embedder: EmbeddingProvider, text_mode: TextMode = TextMode.DESCRIPTION_PLUS_ENRICHMENT) -> VectorIndex:
    return build_index(tool_documents(registry, text_mode), embedder, text_mode=text_mode)


def build_app_index(registry: Registry, embedder: EmbeddingProvider) -> VectorIndex:
    return build_index(app_documents(registry), embedder)


def vector_search(
    index: VectorIndex,
    query: str,
    k: int,
    embedder: EmbeddingProvider,
    candidates: Collection[str] | None = None,
) -> list[RankedHit]:
    """Exact top-k by cosine similarity (full scan)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not index.ids:
        return []
    q = embed(embedder, [query], expected_dim=index.dim)[0]
    norm = np.linalg.norm(q)
    if norm > 0:
        q = q / norm
    scores = index.matrix @ q
    if candidates is None:
        pairs = zip(index.ids, scores.tolist())
    else:
        allowed = set(candidates)
        pairs = ((i, s) for i, s in zip(index.ids, scores.tolist()) if i in allowed)
    return rank_scores(pairs, k, Source.VECTOR)


# ---------------------------------------------------------------------------
# snapshots: a header line followed by one {"id", "vector"} line per row


def save_index(index: VectorIndex, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": SNAPSHOT_FORMAT, "version": SNAPSHOT_VERSION, "dim": index.dim, "count": len(index), "text_mode": index.text_mode.value}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for ident, row in zip(index.ids, index.matrix.tolist()):
            fh.write(json.dumps({"id": ident, "vector": row}) + "\n")


def load_index(path: str | Path) -> VectorIndex:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty index snapshot")
    try:
        header = json.loads(lines[0])
        if not isinstance(header, dict) or header.get("format") != SNAPSHOT_FORMAT or header.get("version") != SNAPSHOT_VERSION:
            raise DataError(f"{path}: not a version-{SNAPSHOT_VERSION} vector index snapshot")
        dim = int(header["dim"])
        rows = [json.loads(ln) for ln in lines[1:]]
        if len(rows) != header.get("count"):
            raise DataError(f"{path}: truncated snapshot")
        ids = tuple(r["id"] for r in rows)
        matrix = np.asarray([r["vector"] for r in rows], dtype=np.float64).reshape(len(rows), dim)
        return VectorIndex(ids, matrix, dim, TextMode(header["text_mode"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: corrupt index snapshot: {exc}") from None


def check_index_matches(index: VectorIndex, registry: Registry, embedder: EmbeddingProvider) -> None:
    if set(index.ids) != set(registry.tools):
        raise DataError("index snapshot does not cover the same tools as the registry")
    if index.dim != embedder.dim:
        raise DimensionMismatch(f"index dim {index.dim} != embedder dim {embedder.dim}")
