"""Embedding, vector/keyword indexes, fusion, enrichment and LLM-backed search."""

from .bm25 import Bm25Params, KeywordIndex, bm25_search, bm25_scores, build_bm25_index
from .embedding import EmbeddingProvider, HttpEmbedder, StubEmbedder, embed, stub_embed
from .enrich import LLMEnricher, enrich_description, enrich_registry, template_enricher
from .hybrid import FusionParams, hybrid_search, reciprocal_rank_fusion
from .llm_search import llm_search
from .ranking import RankedHit, Source, rank_scores, tokenize
from .searchers import Bm25Searcher, HybridSearcher, LLMSearcher, Searcher, VectorSearcher, make_searcher
from .vector import TextMode, VectorIndex, build_vector_index, load_index, save_index, vector_search

__all__ = [
    "Bm25Params", "Bm25Searcher", "EmbeddingProvider", "FusionParams", "HttpEmbedder", "HybridSearcher",
    "KeywordIndex", "LLMEnricher", "LLMSearcher", "RankedHit", "Searcher", "Source", "StubEmbedder",
    "TextMode", "VectorIndex", "VectorSearcher", "bm25_scores", "bm25_search", "build_bm25_index",
    "build_vector_index", "embed", "enrich_description", "enrich_registry", "hybrid_search", "llm_search",
    "load_index", "make_searcher", "rank_scores", "reciprocal_rank_fusion", "save_index", "stub_embed",
    "template_enricher", "tokenize", "vector_search",
]
