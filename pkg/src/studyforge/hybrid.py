"""Hybrid retrieval: alias-aware query refinement plus BM25/dense fusion.

Per query, BM25 scores are min-max normalized over the candidate set
(all scores equal maps to 0.5 everywhere), cosine scores map to [0, 1]
via (c + 1) / 2, and the fused score is the convex combination
``alpha * lexical + (1 - alpha) * dense``. Chunks from alias-matched
documents are boosted multiplicatively after fusion (or, with
``hard_filter``, the candidate set is restricted to those documents).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .embeddings import DenseIndex, EmbeddingProvider, embed
from .errors import ArgumentError
from .retrieval import LexicalIndex, bm25_score, tokenize


@dataclass
class RefinedQuery:
    original: str
    terms: list[str]
    matched_aliases: list[tuple[str, str]] = field(default_factory=list)
    boost_docs: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class ScoredResult:
    chunk_id: str
    lexical_score: float
    dense_score: float
    fused_score: float
    boosted: bool = False


@dataclass
class HybridConfig:
    alpha: float = 0.5
    boost_factor: float = 1.5
    k1: float = 1.5
    b: float = 0.75
    hard_filter: bool = False


def refine_query(query: str, aliases: list[tuple[str, str]]) -> RefinedQuery:
    """Longest-match alias scan over the tokenized query.

    ``aliases`` is a list of (alias, doc_id) pairs. Matched alias token
    runs are excluded from the remaining query terms, and their documents
    collected for boosting.
    """
    tokens = tokenize(query)
    table = [(tuple(tokenize(alias)), alias, doc_id) for alias, doc_id in aliases]
    table = [t for t in table if t[0]]
    table.sort(key=lambda t: (-len(t[0]), t[1], t[2]))

    terms: list[str] = []
    matched: list[tuple[str, str]] = []
    i = 0
    while i < len(tokens):
        hit = None
        for alias_tokens, alias, doc_id in table:
            if tuple(tokens[i : i + len(alias_tokens)]) == alias_tokens:
                hit = (alias_tokens, alias, doc_id)
                break
        if hit is None:
            terms.append(tokens[i])
            i += 1
        else:
            alias_tokens, alias, doc_id = hit
            matched.append((alias, doc_id))
            i += len(alias_tokens)
    return RefinedQuery(
        original=query,
        terms=terms,
        matched_aliases=matched,
        boost_docs={doc_id for _, doc_id in matched},
    )


class HybridRetriever:
    def __init__(
        self,
        lexical: LexicalIndex,
        dense: DenseIndex,
        provider: EmbeddingProvider,
        chunk_docs: dict[str, str],
        aliases: list[tuple[str, str]] | None = None,
        config: HybridConfig | None = None,
    ):
        self.lexical = lexical
        self.dense = dense
        self.provider = provider
        self.chunk_docs = chunk_docs
        self.aliases = aliases or []
        self.config = config or HybridConfig()

    def retrieve(self, query: str, k: int) -> list[ScoredResult]:
        if k < 1:
            raise ArgumentError(f"k must be >= 1, got {k}")
        if self.lexical.n_chunks == 0 or not self.dense.vectors:
            raise ArgumentError("retrieval over an empty index", code="empty_index")
        cfg = self.config
        refined = refine_query(query, self.aliases)

        candidates = sorted(self.lexical.doc_lengths)
        if cfg.hard_filter and refined.boost_docs:
            candidates = [c for c in candidates if self.chunk_docs.get(c) in refined.boost_docs]

        lex_raw = {
            cid: bm25_score(self.lexical, refined.terms, cid, cfg.k1, cfg.b)
            for cid in candidates
        }
        lo, hi = min(lex_raw.values()), max(lex_raw.values())
        if hi > lo:
            lex_norm = {
                cid: (Fraction(s) - Fraction(lo)) / (Fraction(hi) - Fraction(lo))
                for cid, s in lex_raw.items()
            }
        else:
            lex_norm = {cid: Fraction(1, 2) for cid in lex_raw}

        query_vec = embed(query, self.provider)
        dense_raw = self.dense.scores(query_vec)

        # Fusion runs in exact rational arithmetic over the float inputs:
        # degenerate settings (alpha 0 or 1) then rank exactly like the
        # underlying score, with no float collisions near ties.
        alpha = Fraction(cfg.alpha)
        boost = Fraction(cfg.boost_factor)
        scored: list[tuple[Fraction, ScoredResult]] = []
        for cid in candidates:
            cos = dense_raw.get(cid, 0.0)
            fused = alpha * lex_norm[cid] + (1 - alpha) * (Fraction(cos) + 1) / 2
            boosted = (
                not cfg.hard_filter
                and bool(refined.boost_docs)
                and self.chunk_docs.get(cid) in refined.boost_docs
            )
            if boosted:
                fused *= boost
            scored.append(
                (
                    fused,
                    ScoredResult(
                        chunk_id=cid,
                        lexical_score=lex_raw[cid],
                        dense_score=cos,
                        fused_score=float(fused),
                        boosted=boosted,
                    ),
                )
            )
        scored.sort(key=lambda pair: (-pair[0], pair[1].chunk_id))
        return [r for _, r in scored[:k]]
