"""Searchers bundle a registry with built indexes behind one ``search`` call.

Every searcher also answers ``search_apps`` so the app-level meta tool can
follow whatever strategy is configured.
"""

from __future__ import annotations

from collections.abc import Callable
from typing import Protocol

from ..errors import UsageError
from ..registry import Registry
from .bm25 import Bm25Params, KeywordIndex, bm25_search, build_app_keyword_index, build_bm25_index
from .embedding import EmbeddingProvider
from .hybrid import FusionParams, hybrid_search
from .llm_search import DEFAULT_MAX_TOOLS, llm_search
from .ranking import RankedHit, Source, rank_scores
from .vector import TextMode, VectorIndex, build_app_index, build_vector_index, vector_search


class Searcher(Protocol):
    name: str
    registry: Registry

    def search(self, query: str, k: int, app_id: str | None = None) -> list[RankedHit]: ...

    def search_apps(self, query: str, k: int) -> list[RankedHit]: ...


def _restrict(registry: Registry, app_id: str | None):
    return None if app_id is None else registry.tool_ids_of_app(app_id)


class VectorSearcher:
    def __init__(
        self,
        registry: Registry,
        embedder: EmbeddingProvider,
        text_mode: TextMode = TextMode.DESCRIPTION_PLUS_ENRICHMENT,
        *,
        index: VectorIndex | None = None,
        name: str = "vector",
    ):
        self.name = name
        self.registry = registry
        self.embedder = embedder
        self.index = index if index is not None else build_vector_index(registry, embedder, text_mode)
        self.app_index = build_app_index(registry, embedder)

    def search(self, query: str, k: int, app_id: str | None = None) -> list[RankedHit]:
        return vector_search(self.index, query, k, self.embedder, _restrict(self.registry, app_id))

    def search_apps(self, query: str, k: int) -> list[RankedHit]:
        return vector_search(self.app_index, query, k, self.embedder)


class Bm25Searcher:
    def __init__(
        self,
        registry: Registry,
        params: Bm25Params = Bm25Params(),
        text_mode: TextMode = TextMode.DESCRIPTION_PLUS_ENRICHMENT,
        *,
        name: str = "bm25",
    ):
        self.name = name
        self.registry = registry
        self.params = params
        self.index: KeywordIndex = build_bm25_index(registry, text_mode)
        self.app_index = build_app_keyword_index(registry)

    def search(self, query: str, k: int, app_id: str | None = None) -> list[RankedHit]:
        return bm25_search(self.index, query, k, self.params, _restrict(self.registry, app_id))

    def search_apps(self, query: str, k: int) -> list[RankedHit]:
        return bm25_search(self.app_index, query, k, self.params)


class HybridSearcher:
    def __init__(self, semantic: VectorSearcher, lexical: Bm25Searcher, fusion: FusionParams = FusionParams(), *, name: str = "hybrid"):
        if semantic.registry is not lexical.registry and semantic.registry != lexical.registry:
            raise ValueError("both indexes must be built over the same registry")
        self.name = name
        self.registry = semantic.registry
        self.semantic = semantic
        self.lexical = lexical
        self.fusion = fusion

    def search(self, query: str, k: int, app_id: str | None = None) -> list[RankedHit]:
        return hybrid_search(
            self.semantic.index,
            self.lexical.index,
            query,
            k,
            self.semantic.embedder,
            self.fusion,
            self.lexical.params,
            _restrict(self.registry, app_id),
        )

    def search_apps(self, query: str, k: int) -> list[RankedHit]:
        # app catalogs are tiny; the semantic ranking is enough
        return self.semantic.search_apps(query, k)


class LLMSearcher:
    """Adapts ``llm_search`` (an unscored id list) to the searcher interface with 1/rank scores."""

    def __init__(self, complete: Callable[[str], str], registry: Registry, *, max_tools: int = DEFAULT_MAX_TOOLS, name: str = "llm"):
        self.name = name
        self.registry = registry
        self.complete = complete
        self.max_tools = max_tools

    def search(self, query: str, k: int, app_id: str | None = None) -> list[RankedHit]:
        ids = llm_search(self.complete, self.registry, query, max_tools=self.max_tools)
        if app_id is not None:
            ids = [i for i in ids if self.registry.tools[i].app_id == app_id]
        return [RankedHit(i, 1.0 / r, r, Source.LLM) for r, i in enumerate(ids[:k], start=1)]

    def search_apps(self, query: str, k: int) -> list[RankedHit]:
        apps = list(dict.fromkeys(self.registry.tools[h.tool_id].app_id for h in self.search(query, len(self.registry) or 1)))
        return rank_scores(((a, 1.0 / r) for r, a in enumerate(apps, start=1)), k, Source.LLM) if apps else []


STRATEGIES = ("vector", "vector-plain", "bm25", "hybrid")


def make_searcher(
    strategy: str,
    registry: Registry,
    embedder: EmbeddingProvider,
    *,
    bm25_params: Bm25Params = Bm25Params(),
    fusion: FusionParams = FusionParams(),
    index: VectorIndex | None = None,
) -> Searcher:
    """Build a named strategy.

    ``vector`` embeds enrichment when present, ``vector-plain`` ignores it,
    ``bm25`` is keyword-only and ``hybrid`` fuses ``vector`` with ``bm25``.
    """
    if strategy == "vector":
        return VectorSearcher(registry, embedder, index=index)
    if strategy == "vector-plain":
        return VectorSearcher(registry, embedder, TextMode.DESCRIPTION_ONLY, name="vector-plain")
    if strategy == "bm25":
        return Bm25Searcher(registry, bm25_params)
    if strategy == "hybrid":
        return HybridSearcher(VectorSearcher(registry, embedder, index=index), Bm25Searcher(registry, bm25_params), fusion)
    raise UsageError(f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}")
