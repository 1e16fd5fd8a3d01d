"""Okapi BM25 over an inverted index.

idf uses the non-negative form ``ln(1 + (N - n + 0.5) / (n + 0.5))`` so a
document matching any query term always scores above zero. Repeated query
tokens contribute once per occurrence.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Collection, Mapping
from dataclasses import dataclass

from ..registry import Registry
from .ranking import RankedHit, Source, rank_scores, tokenize
from .vector import TextMode, app_documents, tool_documents


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if not self.k1 > 0:
            raise ValueError("k1 must be > 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")


class KeywordIndex:
    def __init__(self, documents: Mapping[str, str]):
        self.ids: tuple[str, ...] = tuple(sorted(documents))
        self.term_freqs: tuple[Counter, ...] = tuple(Counter(tokenize(documents[i])) for i in self.ids)
        self.doc_lengths: tuple[int, ...] = tuple(sum(tf.values()) for tf in self.term_freqs)
        self.doc_freqs: Counter = Counter()
        postings: dict[str, list[tuple[int, int]]] = {}
        for row, tf in enumerate(self.term_freqs):
            for term, n in tf.items():
                self.doc_freqs[term] += 1
                postings.setdefault(term, []).append((row, n))
        self.postings = postings
        n_docs = len(self.ids)
        self.avg_doc_length = (sum(self.doc_lengths) / n_docs) if n_docs else 0.0

    def __len__(self) -> int:
        return len(self.ids)

    def idf(self, term: str) -> float:
        n = self.doc_freqs.get(term, 0)
        return math.log(1.0 + (len(self.ids) - n + 0.5) / (n + 0.5))

    def df(self, term: str) -> int:
        return self.doc_freqs.get(term, 0)


def build_bm25_index(registry: Registry, text_mode: TextMode = TextMode.DESCRIPTION_PLUS_ENRICHMENT) -> KeywordIndex:
    return KeywordIndex(tool_documents(registry, text_mode))


def build_app_keyword_index(registry: Registry) -> KeywordIndex:
    return KeywordIndex(app_documents(registry))


def bm25_scores(index: KeywordIndex, query: str, params: Bm25Params = Bm25Params()) -> dict[str, float]:
    """Score every document sharing at least one token with ``query``."""
    scores: dict[int, float] = {}
    avgdl = index.avg_doc_length or 1.0
    for term in tokenize(query):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        for row, f in plist:
            norm = params.k1 * (1.0 - params.b + params.b * index.doc_lengths[row] / avgdl)
            scores[row] = scores.get(row, 0.0) + idf * f * (params.k1 + 1.0) / (f + norm)
    return {index.ids[row]: s for row, s in scores.items()}


def bm25_search(
    index: KeywordIndex,
    query: str,
    k: int,
    params: Bm25Params = Bm25Params(),
    candidates: Collection[str] | None = None,
) -> list[RankedHit]:
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = bm25_scores(index, query, params)
    if candidates is not None:
        allowed = set(candidates)
        scores = {i: s for i, s in scores.items() if i in allowed}
    return rank_scores(((i, s) for i, s in scores.items() if s > 0.0), k, Source.BM25)
