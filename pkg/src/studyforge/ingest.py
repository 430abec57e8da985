"""Corpus ingestion: text cleaning, overlapping chunking, manifest loading.

Cleaning applies three rule families, each counted in a ``CleaningReport``:

1. hyphenated line breaks: ``know-\\nledge`` is joined to ``knowledge``;
2. citations: parenthetical author-year citations ``(Smith, 1999)`` /
   ``(Smith et al., 2020)`` and bracketed numeric citations ``[12]`` /
   ``[3,4]`` are removed (conservative by design: only these two pattern
   families, configurable via ``citation_patterns``);
3. whitespace: every maximal whitespace run collapses to a single space,
   except runs containing two or more newlines, which become exactly one
   blank line (``"\\n\\n"``).

Chunking follows the recursive-separator idea: split points are generated
by descending the separator priority list (blank line, newline, ". ",
space, single character), recursing only into pieces that exceed
``max_chunk_chars``. Chunks are then assembled greedily over those split
points; each chunk after the first starts inside its predecessor, either
at the largest separator-aligned suffix not exceeding ``overlap_chars`` or,
failing that, exactly ``overlap_chars`` back. Chunk texts are exact
substrings of the cleaned document, so deduplicating spans reconstructs it.
"""

from __future__ import annotations

import bisect
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ArgumentError, CorpusLoadError

# Author-year parentheticals: "(Smith, 1999)", "(Smith et al., 2020)",
# "(Smith and Lee, 2021)", "(Smith & Lee, 2021b)". Nothing fancier on
# purpose: legitimate parentheticals must survive.
_AUTHOR = r"[A-Z][\w'’\-]+"
DEFAULT_CITATION_PATTERNS = (
    re.compile(
        rf"\(\s*{_AUTHOR}(?:\s+et\s+al\.?|\s+(?:and|&)\s+{_AUTHOR})?\s*,\s*\d{{4}}[a-z]?\s*\)"
    ),
    re.compile(r"\[\d+(?:\s*,\s*\d+)*\]"),
)

_HYPHEN_BREAK = re.compile(r"([A-Za-z])-\n([A-Za-z])")
_WS_RUN = re.compile(r"\s+")

SEPARATORS = ("\n\n", "\n", ". ", " ")


@dataclass
class Document:
    doc_id: str
    title: str
    source_uri: str
    raw_text: str
    year: int | None = None
    aliases: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    chunk_id: str
    text: str
    char_span: tuple[int, int]
    ordinal: int


@dataclass
class CleaningReport:
    citations_removed: int = 0
    hyphen_joins: int = 0
    whitespace_collapses: int = 0


def clean_text(
    raw: str,
    citation_patterns: tuple[re.Pattern, ...] = DEFAULT_CITATION_PATTERNS,
) -> tuple[str, CleaningReport]:
    """Clean extracted text; returns the cleaned string and rule-fire counts.

    Idempotent: each rule runs to a fixpoint, and the whitespace pass leaves
    only single spaces and blank-line pairs behind.
    """
    report = CleaningReport()
    text = raw

    # Hyphen joins look at single newlines only; run to fixpoint so that
    # pathological nestings cannot survive one pass and reappear later.
    while True:
        text, n = _HYPHEN_BREAK.subn(r"\1\2", text)
        if n == 0:
            break
        report.hyphen_joins += n

    while True:
        fired = 0
        for pat in citation_patterns:
            text, n = pat.subn("", text)
            fired += n
        if fired == 0:
            break
        report.citations_removed += fired

    def _collapse(m: re.Match) -> str:
        run = m.group(0)
        repl = "\n\n" if run.count("\n") >= 2 else " "
        if repl != run:
            report.whitespace_collapses += 1
        return repl

    text = _WS_RUN.sub(_collapse, text).strip()
    return text, report


def _split_points(text: str, lo: int, hi: int, max_chars: int, seps: tuple[str, ...]) -> list[int]:
    """End positions of pieces within [lo, hi), each piece <= max_chars.

    Descends the separator list; a finer separator is consulted only inside
    pieces the coarser one could not bring under the limit. Separators stay
    attached to the piece they terminate.
    """
    if hi - lo <= max_chars:
        return [hi]
    for i, sep in enumerate(seps):
        pts = [lo + m.end() for m in re.finditer(re.escape(sep), text[lo:hi])]
        pts = [p for p in pts if lo < p < hi]
        if not pts:
            continue
        out: list[int] = []
        prev = lo
        for p in pts + [hi]:
            if p - prev <= max_chars:
                out.append(p)
            else:
                out.extend(_split_points(text, prev, p, max_chars, seps[i + 1:]))
            prev = p
        return out
    # Character level: fixed-width cuts.
    return list(range(lo + max_chars, hi, max_chars)) + [hi]


def chunk_text(cleaned: str, max_chunk_chars: int = 1000, overlap_chars: int = 150) -> list[tuple[int, int]]:
    """Compute chunk spans [start, end) over ``cleaned``.

    Guarantees: every span <= max_chunk_chars; starts and ends strictly
    increase; consecutive spans overlap by at least one character; the
    union of spans is exactly [0, len(cleaned)).
    """
    if not 0 < overlap_chars < max_chunk_chars:
        raise ArgumentError(
            f"need 0 < overlap_chars < max_chunk_chars, got {overlap_chars}/{max_chunk_chars}"
        )
    n = len(cleaned)
    if n == 0:
        return []
    if n <= max_chunk_chars:
        return [(0, n)]

    points = sorted(set(_split_points(cleaned, 0, n, max_chunk_chars, SEPARATORS)))
    spans: list[tuple[int, int]] = []
    start = 0
    prev_end = 0
    while True:
        # Largest split point in (prev_end, start + max]; character cut otherwise.
        hi_idx = bisect.bisect_right(points, start + max_chunk_chars)
        lo_idx = bisect.bisect_right(points, prev_end)
        end = points[hi_idx - 1] if hi_idx > lo_idx else start + max_chunk_chars
        if end < n and end - start < 2:
            # A 1-char chunk mid-document cannot both overlap its successor
            # and make progress; take a character cut instead.
            end = start + max_chunk_chars
        spans.append((start, end))
        if end >= n:
            return spans
        # Next start: smallest split point within the overlap window, else
        # exactly overlap_chars back; never regress and always leave >= 1
        # character of overlap.
        window_lo = end - overlap_chars
        j = bisect.bisect_left(points, max(window_lo, start + 1))
        cand = points[j] if j < len(points) and points[j] < end else None
        nxt = cand if cand is not None else max(window_lo, 0)
        nxt = max(nxt, start + 1)
        if nxt >= end:
            nxt = end - 1
        prev_end = end
        start = nxt


def chunk_document(doc_id: str, cleaned: str, max_chunk_chars: int = 1000, overlap_chars: int = 150) -> list[Chunk]:
    """Chunk a cleaned document into ``Chunk`` records with contiguous ordinals."""
    spans = chunk_text(cleaned, max_chunk_chars, overlap_chars)
    return [
        Chunk(
            doc_id=doc_id,
            chunk_id=f"{doc_id}:{i}",
            text=cleaned[s:e],
            char_span=(s, e),
            ordinal=i,
        )
        for i, (s, e) in enumerate(spans)
    ]


def load_corpus(manifest_path: str | Path) -> list[Document]:
    """Load documents listed in a ``corpus.json`` manifest, in order.

    The manifest shape is ``{"documents": [{"doc_id", "title", "text_path",
    "year", "aliases": [...]}]}`` with ``text_path`` relative to the
    manifest's directory. Aliases are lowercased and deduplicated.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise CorpusLoadError(f"manifest not found: {manifest_path}", code="missing_manifest")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorpusLoadError(f"malformed manifest {manifest_path}: {exc}", code="malformed_manifest")
    entries = manifest.get("documents") if isinstance(manifest, dict) else None
    if not isinstance(entries, list):
        raise CorpusLoadError(
            f"malformed manifest {manifest_path}: expected a 'documents' list",
            code="malformed_manifest",
        )

    docs: list[Document] = []
    seen: set[str] = set()
    for entry in entries:
        try:
            doc_id = entry["doc_id"]
            title = entry["title"]
            text_path = entry["text_path"]
        except (TypeError, KeyError) as exc:
            raise CorpusLoadError(f"manifest entry missing field: {exc}", code="malformed_manifest")
        if doc_id in seen:
            raise CorpusLoadError(f"duplicate doc_id: {doc_id}", code="duplicate_doc_id")
        seen.add(doc_id)
        path = manifest_path.parent / text_path
        if not path.exists():
            raise CorpusLoadError(f"text file not found: {path}", code="missing_file")
        raw = path.read_text(encoding="utf-8")
        if not raw:
            raise CorpusLoadError(f"document {doc_id} is empty: {path}", code="empty_document")
        aliases: list[str] = []
        for alias in entry.get("aliases", []):
            alias = alias.lower().strip()
            if alias and alias not in aliases:
                aliases.append(alias)
        docs.append(
            Document(
                doc_id=doc_id,
                title=title,
                source_uri=str(path),
                raw_text=raw,
                year=entry.get("year"),
                aliases=aliases,
            )
        )
    return docs
