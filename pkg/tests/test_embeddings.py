import httpx
import pytest

from studyforge.embeddings import (
    DenseIndex,
    HashedEmbeddingProvider,
    HttpEmbeddingProvider,
    cosine,
    embed,
)
from studyforge.errors import ArgumentError, TransportError
from studyforge.ingest import Chunk


def test_provider_deterministic():
    p = HashedEmbeddingProvider(dim=32)
    assert embed("knowledge graph", p) == embed("knowledge graph", p)


def test_self_cosine_is_one():
    p = HashedEmbeddingProvider(dim=32)
    v = embed("community detection", p)
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)


def test_bag_of_words_ignores_order():
    p = HashedEmbeddingProvider(dim=32)
    assert embed("knowledge graph", p) == embed("graph knowledge", p)


def test_empty_text_embeds_to_zero():
    p = HashedEmbeddingProvider(dim=8)
    assert embed("", p) == [0.0] * 8


@pytest.mark.parametrize(
    "u,v,expected",
    [
        ([1.0, 0.0], [1.0, 0.0], 1.0),
        ([1.0, 0.0], [0.0, 1.0], 0.0),
        ([1.0, 1.0], [1.0, 0.0], 0.70710678),
    ],
)
def test_cosine_analytic(u, v, expected):
    assert cosine(u, v) == pytest.approx(expected, abs=1e-8)


def test_cosine_both_zero_convention():
    assert cosine([0.0, 0.0], [0.0, 0.0]) == 0.0


def test_cosine_dim_mismatch():
    with pytest.raises(ArgumentError):
        cosine([1.0], [1.0, 2.0])


def _chunks(texts):
    return [
        Chunk(doc_id="d", chunk_id=f"d:{i}", text=t, char_span=(0, len(t)), ordinal=i)
        for i, t in enumerate(texts)
    ]


def test_dense_index_parallelism_is_order_independent():
    chunks = _chunks([f"text number {i} about topic {i % 3}" for i in range(20)])
    p = HashedEmbeddingProvider(dim=16)
    serial = DenseIndex.build(chunks, p, batch_size=3, parallelism=1)
    parallel = DenseIndex.build(chunks, p, batch_size=3, parallelism=4)
    assert serial.vectors == parallel.vectors


def test_dense_index_save_load(tmp_path):
    chunks = _chunks(["alpha beta", "gamma delta"])
    index = DenseIndex.build(chunks, HashedEmbeddingProvider(dim=8))
    path = tmp_path / "dense.idx.jsonl"
    index.save(path)
    assert DenseIndex.load(path).vectors == index.vectors


def _http_provider(handler, dim=3):
    transport = httpx.MockTransport(handler)
    client = httpx.Client(transport=transport)
    return HttpEmbeddingProvider("http://embed.test/v1/embeddings", "mini", dim=dim, client=client)


def test_http_provider_wire_shape():
    seen = {}

    def handler(request):
        seen["json"] = request.read()
        import json

        body = json.loads(seen["json"])
        vectors = [[float(len(t)), 0.0, 1.0] for t in body["input"]]
        return httpx.Response(200, json={"data": [{"embedding": v} for v in vectors]})

    provider = _http_provider(handler)
    vecs = provider.embed_batch(["ab", "cdef"])
    assert vecs == [[2.0, 0.0, 1.0], [4.0, 0.0, 1.0]]
    import json

    body = json.loads(seen["json"])
    assert body == {"input": ["ab", "cdef"], "model": "mini"}


def test_http_provider_error_carries_diagnostics():
    def handler(request):
        return httpx.Response(503, text="overloaded")

    provider = _http_provider(handler)
    with pytest.raises(TransportError) as err:
        provider.embed_batch(["x"])
    assert "503" in str(err.value)
    assert err.value.detail == "overloaded"


def test_http_provider_dim_check():
    def handler(request):
        return httpx.Response(200, json={"data": [{"embedding": [1.0, 2.0]}]})

    provider = _http_provider(handler, dim=3)
    with pytest.raises(TransportError):
        provider.embed_batch(["x"])
