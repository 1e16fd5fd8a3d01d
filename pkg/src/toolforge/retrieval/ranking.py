from __future__ import annotations

import re
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum

_SPLIT = re.compile(r"[^0-9a-z]+")

# Scores closer than this (relative) are ties. Mathematically equal cosines
# can differ in the last ulp depending on summation order.
TIE_RTOL = 1e-12


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric run, underscores included."""
    return [t for t in _SPLIT.split(text.lower()) if t]


class Source(str, Enum):
    VECTOR = "vector"
    BM25 = "bm25"
    HYBRID = "hybrid"
    LLM = "llm"


@dataclass(frozen=True)
class RankedHit:
    tool_id: str
    score: float
    rank: int
    source: Source

    def to_dict(self) -> dict:
        return {"tool_id": self.tool_id, "score": self.score, "rank": self.rank, "source": self.source.value}


def _same_score(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_RTOL * max(1.0, abs(a), abs(b))


def rank_scores(scored: Iterable[tuple[str, float]], k: int, source: Source) -> list[RankedHit]:
    """Order (id, score) pairs by score descending, ties by ascending id.

    Members of a tie group all report the group's leading score so the
    returned list is exactly non-increasing.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ordered = sorted(scored, key=lambda p: (-p[1], p[0]))
    hits: list[RankedHit] = []
    i = 0
    while i < len(ordered) and len(hits) < k:
        head = ordered[i][1]
        j = i + 1
        while j < len(ordered) and _same_score(head, ordered[j][1]):
            j += 1
        for tool_id, _ in sorted(ordered[i:j]):
            if len(hits) == k:
                break
            hits.append(RankedHit(tool_id, head, len(hits) + 1, source))
        i = j
    return hits
