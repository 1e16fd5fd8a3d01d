"""Reference computations written independently of the package code."""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter


def words(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def hashed_vector(text: str, dim: int) -> list[float]:
    counts = Counter(words(text)) or Counter({"\x00empty": 1})
    vec = [0.0] * dim
    for tok, n in counts.items():
        vec[int.from_bytes(hashlib.blake2b(tok.encode(), digest_size=8).digest(), "big") % dim] += n
    length = math.sqrt(math.fsum(x * x for x in vec))
    return [x / length for x in vec]


def cosine(a: list[float], b: list[float]) -> float:
    return math.fsum(x * y for x, y in zip(a, b))


def tie_ranked(scores: dict[str, float], k: int, rtol: float = 1e-12) -> list[tuple[str, float]]:
    """Descending score, ties (relative rtol) by ascending id, reported at the group head."""
    items = sorted(scores.items(), key=lambda p: -p[1])
    out: list[tuple[str, float]] = []
    while items and len(out) < k:
        head = items[0][1]
        group = [p for p in items if abs(p[1] - head) <= rtol * max(1.0, abs(head), abs(p[1]))]
        items = [p for p in items if p not in group]
        out.extend((i, head) for i in sorted(i for i, _ in group))
    return out[:k]


def brute_cosine(docs: dict[str, str], query: str, k: int, dim: int) -> list[tuple[str, float]]:
    q = hashed_vector(query, dim)
    return tie_ranked({i: cosine(hashed_vector(t, dim), q) for i, t in docs.items()}, k)


def okapi(docs: dict[str, str], query: str, k1: float = 1.2, b: float = 0.75) -> dict[str, float]:
    """Textbook Okapi BM25 with the non-negative idf variant; zero scores dropped."""
    toks = {i: words(t) for i, t in docs.items()}
    n_docs = len(docs)
    avgdl = sum(len(t) for t in toks.values()) / n_docs
    out: dict[str, float] = {}
    for i, t in toks.items():
        tf = Counter(t)
        total = 0.0
        for term in words(query):
            if tf[term] == 0:
                continue
            df = sum(1 for other in toks.values() if term in other)
            idf = math.log(1 + (n_docs - df + 0.5) / (df + 0.5))
            total += idf * tf[term] * (k1 + 1) / (tf[term] + k1 * (1 - b + b * len(t) / avgdl))
        if total > 0:
            out[i] = total
    return out
