"""Lexical retrieval: tokenizer, inverted index, Okapi BM25 scoring."""

from __future__ import annotations

import json
import re
from math import log
from pathlib import Path

from .errors import NotFoundError
from .ingest import Chunk

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs, dropping empties."""
    return _TOKEN.findall(text.lower())


class LexicalIndex:
    """Inverted index over chunks with the statistics BM25 needs.

    Immutable once built; scoring depends only on counts, never on
    insertion order.
    """

    def __init__(self):
        self.postings: dict[str, dict[str, int]] = {}
        self.doc_lengths: dict[str, int] = {}

    @property
    def n_chunks(self) -> int:
        return len(self.doc_lengths)

    @property
    def avgdl(self) -> float:
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def add(self, chunk_id: str, text: str) -> None:
        tokens = tokenize(text)
        self.doc_lengths[chunk_id] = len(tokens)
        for tok in tokens:
            bucket = self.postings.setdefault(tok, {})
            bucket[chunk_id] = bucket.get(chunk_id, 0) + 1

    @classmethod
    def build(cls, chunks: list[Chunk]) -> "LexicalIndex":
        index = cls()
        for chunk in chunks:
            index.add(chunk.chunk_id, chunk.text)
        return index

    def save(self, path: str | Path) -> None:
        payload = {
            "postings": {t: sorted(d.items()) for t, d in sorted(self.postings.items())},
            "doc_lengths": dict(sorted(self.doc_lengths.items())),
            "N": self.n_chunks,
            "avgdl": self.avgdl,
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LexicalIndex":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        index = cls()
        index.postings = {t: dict(pairs) for t, pairs in payload["postings"].items()}
        index.doc_lengths = payload["doc_lengths"]
        return index


def idf(index: LexicalIndex, term: str) -> float:
    n, df = index.n_chunks, index.df(term)
    return log(1.0 + (n - df + 0.5) / (df + 0.5))


def bm25_score(
    index: LexicalIndex,
    query_terms: list[str],
    chunk_id: str,
    k1: float = 1.5,
    b: float = 0.75,
) -> float:
    """Okapi BM25 for one chunk: sum over query terms of
    idf * tf*(k1+1) / (tf + k1*(1 - b + b*|d|/avgdl))."""
    if chunk_id not in index.doc_lengths:
        raise NotFoundError(f"chunk not indexed: {chunk_id}")
    dl = index.doc_lengths[chunk_id]
    avgdl = index.avgdl
    norm = k1 * (1.0 - b + b * (dl / avgdl if avgdl else 0.0))
    score = 0.0
    for term in query_terms:
        tf = index.postings.get(term, {}).get(chunk_id, 0)
        if tf == 0:
            continue
        score += idf(index, term) * tf * (k1 + 1.0) / (tf + norm)
    return score
