from __future__ import annotations

from collections.abc import Collection, Sequence
from dataclasses import dataclass

from .bm25 import Bm25Params, KeywordIndex, bm25_search
from .embedding import EmbeddingProvider
from .ranking import RankedHit, Source, rank_scores
from .vector import VectorIndex, vector_search


@dataclass(frozen=True)
class FusionParams:
    rrf_k: int = 60
    depth_factor: int = 2  # each input list is cut at depth_factor * k

    def __post_init__(self) -> None:
        if self.rrf_k < 0:
            raise ValueError("rrf_k must be >= 0")
        if self.depth_factor < 1:
            raise ValueError("depth_factor must be >= 1")


def reciprocal_rank_fusion(rankings: Sequence[Sequence[str]], rrf_k: int = 60) -> dict[str, float]:
    """Sum ``1 / (rrf_k + rank)`` over every list an id appears in (ranks start at 1)."""
    fused: dict[str, float] = {}
    for ranking in rankings:
        for rank, ident in enumerate(ranking, start=1):
            fused[ident] = fused.get(ident, 0.0) + 1.0 / (rrf_k + rank)
    return fused


def hybrid_search(
    vindex: VectorIndex,
    kindex: KeywordIndex,
    query: str,
    k: int,
    embedder: EmbeddingProvider,
    fusion: FusionParams = FusionParams(),
    bm25_params: Bm25Params = Bm25Params(),
    candidates: Collection[str] | None = None,
) -> list[RankedHit]:
    if k < 1:
        raise ValueError("k must be >= 1")
    depth = fusion.depth_factor * k
    semantic = vector_search(vindex, query, depth, embedder, candidates)
    lexical = bm25_search(kindex, query, depth, bm25_params, candidates)
    fused = reciprocal_rank_fusion([[h.tool_id for h in semantic], [h.tool_id for h in lexical]], fusion.rrf_k)
    return rank_scores(fused.items(), k, Source.HYBRID)
