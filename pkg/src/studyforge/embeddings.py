"""Dense retrieval: embedding providers, cosine similarity, vector index.

Two providers satisfy the same contract (``dim`` plus ``embed_batch``):
an HTTP client speaking the common embeddings wire shape, and a
deterministic hashed bag-of-words provider for tests and offline runs.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from math import sqrt
from pathlib import Path
from typing import Protocol

import httpx

from .errors import ArgumentError, TransportError
from .ingest import Chunk
from .retrieval import tokenize

Vector = list[float]


class EmbeddingProvider(Protocol):
    dim: int

    def embed_batch(self, texts: list[str]) -> list[Vector]: ...


def embed(text: str, provider: EmbeddingProvider) -> Vector:
    return provider.embed_batch([text])[0]


def cosine(u: Vector, v: Vector) -> float:
    """Cosine similarity; 0.0 when both vectors are zero (documented
    convention), clamped to [-1, 1] against float drift."""
    if len(u) != len(v):
        raise ArgumentError(f"dimension mismatch: {len(u)} vs {len(v)}")
    dot = sum(a * b for a, b in zip(u, v))
    nu = sqrt(sum(a * a for a in u))
    nv = sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return max(-1.0, min(1.0, dot / (nu * nv)))


class HashedEmbeddingProvider:
    """Bag-of-words hash projection: each token lands in one of ``dim``
    buckets, counts accumulate, the vector is L2-normalized. Deterministic
    across processes (sha1, not the salted builtin hash); word order never
    matters. Empty text embeds to the zero vector."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def _bucket(self, token: str) -> int:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dim

    def embed_batch(self, texts: list[str]) -> list[Vector]:
        out = []
        for text in texts:
            vec = [0.0] * self.dim
            for tok in tokenize(text):
                vec[self._bucket(tok)] += 1.0
            norm = sqrt(sum(x * x for x in vec))
            if norm > 0.0:
                vec = [x / norm for x in vec]
            out.append(vec)
        return out


class HttpEmbeddingProvider:
    """POSTs ``{"input": [...], "model": ...}`` and reads
    ``{"data": [{"embedding": [...]}]}``."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        dim: int,
        api_key: str | None = None,
        timeout: float = 30.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(timeout=timeout, headers=headers)

    def embed_batch(self, texts: list[str]) -> list[Vector]:
        try:
            resp = self._client.post(self.endpoint, json={"input": texts, "model": self.model})
            resp.raise_for_status()
            data = resp.json()["data"]
        except httpx.HTTPStatusError as exc:
            raise TransportError(
                f"embedding service returned {exc.response.status_code}",
                detail=exc.response.text[:500],
            )
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise TransportError(f"embedding service failure: {exc}")
        vectors = [row["embedding"] for row in data]
        for vec in vectors:
            if len(vec) != self.dim:
                raise TransportError(
                    f"provider returned dim {len(vec)}, expected {self.dim}"
                )
        return vectors


class DenseIndex:
    """Exact-scan vector store keyed by chunk_id."""

    def __init__(self):
        self.vectors: dict[str, Vector] = {}

    @classmethod
    def build(
        cls,
        chunks: list[Chunk],
        provider: EmbeddingProvider,
        batch_size: int = 16,
        parallelism: int = 4,
    ) -> "DenseIndex":
        """Embed chunks in batches with bounded parallelism; the result is
        independent of completion order."""
        index = cls()
        batches = [chunks[i : i + batch_size] for i in range(0, len(chunks), batch_size)]

        def run(batch: list[Chunk]) -> list[tuple[str, Vector]]:
            vecs = provider.embed_batch([c.text for c in batch])
            return [(c.chunk_id, v) for c, v in zip(batch, vecs)]

        with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
            for pairs in pool.map(run, batches):
                for chunk_id, vec in pairs:
                    index.vectors[chunk_id] = vec
        return index

    def scores(self, query_vec: Vector) -> dict[str, float]:
        return {cid: cosine(query_vec, vec) for cid, vec in self.vectors.items()}

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for chunk_id in sorted(self.vectors):
                fh.write(json.dumps({"chunk_id": chunk_id, "vector": self.vectors[chunk_id]}) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "DenseIndex":
        index = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    index.vectors[row["chunk_id"]] = row["vector"]
        return index
