"""Workflow orchestration shared by the HTTP service and the CLI.

Every public method returns a JSON-safe dict, so both surfaces serialize
the exact same payloads. State lives on disk under the store's data
directory; in-memory caches are rebuilt lazily from disk.
"""

from __future__ import annotations

import hashlib
import json
import threading

from .chat import ChatClient, DeterministicChatClient, FixtureChatClient, HttpChatClient
from .config import AppConfig, ModelConfig
from .embeddings import DenseIndex, HashedEmbeddingProvider, HttpEmbeddingProvider
from .errors import ArgumentError, NotFoundError, StudyforgeError
from .evaluation import (
    DEFAULT_RUBRIC,
    BlindedPair,
    GradedRecord,
    PairMember,
    PairwiseRecord,
    aggregate,
    blind_pair,
    consistency_report,
    judge_grade,
    judge_pairwise,
)
from .genkit import GenerationArtifact, GenerationTask, GenOptions, generate
from .graphrag import (
    embed_entities,
    graph_retrieve,
    leiden,
    load_communities,
    load_graph,
    save_communities,
    summarize_communities,
)
from .hybrid import HybridConfig, HybridRetriever
from .ingest import Chunk, chunk_document, clean_text, load_corpus
from .retrieval import LexicalIndex
from .store import Store, atomic_write


def _chunk_from_row(row: dict) -> Chunk:
    return Chunk(
        doc_id=row["doc_id"],
        chunk_id=row["chunk_id"],
        text=row["text"],
        char_span=tuple(row["char_span"]),
        ordinal=row["ordinal"],
    )


class Engine:
    def __init__(self, config: AppConfig):
        self.config = config
        self.store = Store(config.data_dir)
        self._gen_slots = threading.Semaphore(config.max_inflight_generations)
        self._cache: dict[str, object] = {}

    # -- client/provider wiring -------------------------------------------
    def _client(self, spec: ModelConfig) -> ChatClient:
        if spec.kind == "mock":
            return DeterministicChatClient(model_id=spec.model_id)
        if spec.kind == "fixture":
            return FixtureChatClient(spec.fixture_path or "mock_llm.jsonl", model_id=spec.model_id)
        if spec.kind == "http":
            if not spec.endpoint:
                raise ArgumentError(f"model {spec.model_id} has no endpoint configured")
            return HttpChatClient(spec.endpoint, spec.model_id, api_key=spec.api_key)
        raise ArgumentError(f"unknown client kind {spec.kind}")

    def client_for(self, model_id: str | None) -> ChatClient:
        spec = self.config.model(model_id or self.config.default_model)
        return self._client(spec)

    @property
    def provider(self):
        if "provider" not in self._cache:
            emb = self.config.embedding
            if emb.kind == "hash":
                self._cache["provider"] = HashedEmbeddingProvider(dim=emb.dim)
            else:
                self._cache["provider"] = HttpEmbeddingProvider(
                    emb.endpoint, emb.model, emb.dim, api_key=emb.api_key
                )
        return self._cache["provider"]

    # -- corpus -------------------------------------------------------------
    def ingest(self, manifest_path: str | None = None) -> dict:
        manifest = manifest_path or self.config.corpus_manifest
        with self.store.write_lock("ingest"):
            docs = load_corpus(manifest)
            doc_meta = []
            chunk_rows = []
            totals = {"citations_removed": 0, "hyphen_joins": 0, "whitespace_collapses": 0}
            for doc in docs:
                cleaned, report = clean_text(doc.raw_text)
                totals["citations_removed"] += report.citations_removed
                totals["hyphen_joins"] += report.hyphen_joins
                totals["whitespace_collapses"] += report.whitespace_collapses
                self.store.write_json(f"corpus/{doc.doc_id}.cleaned.json", {"text": cleaned})
                chunks = chunk_document(
                    doc.doc_id, cleaned, self.config.max_chunk_chars, self.config.overlap_chars
                )
                chunk_rows.extend(
                    {
                        "doc_id": c.doc_id,
                        "chunk_id": c.chunk_id,
                        "text": c.text,
                        "char_span": list(c.char_span),
                        "ordinal": c.ordinal,
                    }
                    for c in chunks
                )
                doc_meta.append(
                    {
                        "doc_id": doc.doc_id,
                        "title": doc.title,
                        "year": doc.year,
                        "aliases": doc.aliases,
                        "n_chunks": sum(1 for r in chunk_rows if r["doc_id"] == doc.doc_id),
                    }
                )
            self.store.write_json("corpus/docs.json", doc_meta)
            atomic_write(
                self.store.path("corpus/chunks.jsonl"),
                "".join(json.dumps(r) + "\n" for r in chunk_rows),
            )
        self._cache.pop("chunks", None)
        stats = {
            "documents": len(doc_meta),
            "chunks": len(chunk_rows),
            "cleaning": totals,
        }
        self.store.record_job("ingest", "done", {"manifest": str(manifest)})
        return stats

    def _chunks(self) -> list[Chunk]:
        if "chunks" not in self._cache:
            rows = self.store.read_jsonl("corpus/chunks.jsonl")
            if not rows:
                raise NotFoundError("no corpus ingested yet", code="no_corpus")
            self._cache["chunks"] = [_chunk_from_row(r) for r in rows]
        return self._cache["chunks"]

    def _docs(self) -> list[dict]:
        path = self.store.path("corpus/docs.json")
        if not path.exists():
            raise NotFoundError("no corpus ingested yet", code="no_corpus")
        return self.store.read_json("corpus/docs.json")

    def _aliases(self) -> list[tuple[str, str]]:
        return [(alias, d["doc_id"]) for d in self._docs() for alias in d.get("aliases", [])]

    # -- indexes ------------------------------------------------------------
    def build_index(self, pipeline: str) -> dict:
        if pipeline == "advanced":
            with self.store.write_lock("index"):
                chunks = self._chunks()
                lexical = LexicalIndex.build(chunks)
                lexical.save(self.store.path("indexes/lexical.idx.json"))
                dense = DenseIndex.build(
                    chunks, self.provider, parallelism=self.config.embed_parallelism
                )
                dense.save(self.store.path("indexes/dense.idx.jsonl"))
            self._cache.pop("retriever", None)
            self.store.record_job("index", "done", {"pipeline": "advanced"})
            return {"pipeline": "advanced", "chunks": lexical.n_chunks, "avgdl": lexical.avgdl}
        if pipeline == "graph":
            with self.store.write_lock("index"):
                chunks = self._chunks()
                graph = load_graph(self.config.graph_path, known_chunk_ids={c.chunk_id for c in chunks})
                embed_entities(graph, self.provider)
                partition = leiden(graph, gamma=self.config.gamma, seed=self.config.seed)
                client = self.client_for(self.config.default_model)
                summaries = summarize_communities(graph, partition, client, self.provider)
                save_communities(self.store.path("graph/communities.json"), partition, summaries)
            self._cache.pop("graph", None)
            self.store.record_job("index", "done", {"pipeline": "graph"})
            return {
                "pipeline": "graph",
                "entities": len(graph.nodes),
                "communities": len(partition.community_ids),
                "quality": partition.quality_history[-1] if partition.quality_history else None,
            }
        raise ArgumentError(f"unknown pipeline: {pipeline}", code="bad_pipeline")

    def _retriever(self) -> HybridRetriever:
        if "retriever" not in self._cache:
            lex_path = self.store.path("indexes/lexical.idx.json")
            dense_path = self.store.path("indexes/dense.idx.jsonl")
            if not lex_path.exists() or not dense_path.exists():
                raise NotFoundError("advanced index not built", code="no_index")
            chunks = self._chunks()
            self._cache["retriever"] = HybridRetriever(
                lexical=LexicalIndex.load(lex_path),
                dense=DenseIndex.load(dense_path),
                provider=self.provider,
                chunk_docs={c.chunk_id: c.doc_id for c in chunks},
                aliases=self._aliases(),
                config=HybridConfig(
                    alpha=self.config.alpha,
                    boost_factor=self.config.boost_factor,
                    k1=self.config.k1,
                    b=self.config.b,
                    hard_filter=self.config.hard_filter,
                ),
            )
        return self._cache["retriever"]

    def _graph_state(self):
        if "graph" not in self._cache:
            communities_path = self.store.path("graph/communities.json")
            if not communities_path.exists():
                raise NotFoundError("graph index not built", code="no_index")
            chunks = self._chunks()
            graph = load_graph(self.config.graph_path, known_chunk_ids={c.chunk_id for c in chunks})
            embed_entities(graph, self.provider)
            partition, summaries = load_communities(communities_path)
            self._cache["graph"] = (graph, partition, summaries)
        return self._cache["graph"]

    # -- retrieval + generation ---------------------------------------------
    def _retrieve(self, query: str, pipeline: str, k: int) -> list:
        if pipeline == "advanced":
            return self._retriever().retrieve(query, k)
        if pipeline == "graph":
            graph, partition, summaries = self._graph_state()
            return graph_retrieve(
                query,
                k,
                graph,
                partition,
                summaries,
                self.provider,
                top_communities=self.config.top_communities,
                top_entities=self.config.top_entities,
            )
        raise ArgumentError(f"unknown pipeline: {pipeline}", code="bad_pipeline")

    def query(self, query: str, pipeline: str, k: int = 5, model_id: str | None = None) -> dict:
        results = self._retrieve(query, pipeline, k)
        chunk_map = {c.chunk_id: c for c in self._chunks()}
        context = [chunk_map[r.chunk_id] for r in results if r.chunk_id in chunk_map]
        task = GenerationTask(kind="qa", pipeline=pipeline, query=query, context=context)
        artifact = self._generate_artifact(task, model_id)
        return {
            "answer": artifact.parsed,
            "artifact_id": artifact.artifact_id,
            "grounding": artifact.grounding,
            "results": [
                {
                    "chunk_id": r.chunk_id,
                    "lexical_score": r.lexical_score,
                    "dense_score": r.dense_score,
                    "fused_score": r.fused_score,
                    "boosted": r.boosted,
                }
                for r in results
            ],
        }

    def _doc_context(self, doc_id: str) -> tuple[list[Chunk], str]:
        docs = {d["doc_id"]: d for d in self._docs()}
        if doc_id not in docs:
            raise NotFoundError(f"unknown doc_id: {doc_id}")
        chunks = [c for c in self._chunks() if c.doc_id == doc_id]
        return chunks[: self.config.context_chunks], docs[doc_id]["title"]

    def _generate_artifact(self, task: GenerationTask, model_id: str | None) -> GenerationArtifact:
        client = self.client_for(model_id)
        options = GenOptions(slides_two_pass=self.config.slides_two_pass)
        with self._gen_slots:
            try:
                artifact = generate(task, client, options)
            except StudyforgeError:
                self.store.record_job("generate", "failed", {"kind": task.kind})
                raise
        payload = artifact.to_dict()
        payload["system"] = f"{artifact.model_id}/{task.pipeline or task.kind}"
        self.store.save_artifact(payload)
        self.store.record_job("generate", "done", {"artifact_id": artifact.artifact_id})
        return artifact

    def generate_output(
        self,
        kind: str,
        doc_id: str | None = None,
        query: str | None = None,
        pipeline: str | None = None,
        model_id: str | None = None,
        k: int = 5,
    ) -> dict:
        if kind == "qa":
            if not query or not pipeline:
                raise ArgumentError("qa generation requires query and pipeline")
            results = self._retrieve(query, pipeline, k)
            chunk_map = {c.chunk_id: c for c in self._chunks()}
            context = [chunk_map[r.chunk_id] for r in results if r.chunk_id in chunk_map]
            task = GenerationTask(kind="qa", pipeline=pipeline, query=query, context=context)
        else:
            if not doc_id:
                raise ArgumentError(f"{kind} generation requires doc_id")
            context, title = self._doc_context(doc_id)
            task = GenerationTask(kind=kind, doc_id=doc_id, doc_title=title, context=context)
        artifact = self._generate_artifact(task, model_id)
        stored = self.store.load_artifact(artifact.artifact_id)
        return stored

    def get_artifact(self, artifact_id: str) -> dict:
        row = self.store.load_artifact(artifact_id)
        if row is None:
            raise NotFoundError(f"unknown artifact: {artifact_id}")
        return row

    def list_docs(self) -> list[dict]:
        return [
            {"doc_id": d["doc_id"], "title": d["title"], "year": d.get("year")}
            for d in self._docs()
        ]

    def get_chunk(self, chunk_id: str) -> dict:
        titles = {d["doc_id"]: d["title"] for d in self._docs()}
        for chunk in self._chunks():
            if chunk.chunk_id == chunk_id:
                return {
                    "chunk_id": chunk.chunk_id,
                    "doc_id": chunk.doc_id,
                    "doc_title": titles.get(chunk.doc_id, chunk.doc_id),
                    "text": chunk.text,
                }
        raise NotFoundError(f"unknown chunk: {chunk_id}")

    def list_artifacts(self, kind: str | None = None) -> list[dict]:
        return [
            {"artifact_id": r["artifact_id"], "kind": r["kind"], "model_id": r["model_id"], "system": r.get("system")}
            for r in self.store.list_artifacts(kind)
        ]

    # -- evaluation -----------------------------------------------------------
    def make_pair(self, artifact_ids: list[str], seed: int | None = None) -> dict:
        if len(artifact_ids) != 2:
            raise ArgumentError("exactly two artifact ids required")
        rows = [self.get_artifact(a) for a in artifact_ids]
        if seed is None:
            n_existing = len(self.store.read_jsonl("eval/pairs.jsonl"))
            basis = f"{artifact_ids[0]}|{artifact_ids[1]}|{n_existing}"
            seed = int.from_bytes(hashlib.sha1(basis.encode()).digest()[:4], "big")
        members = [
            PairMember(artifact_id=r["artifact_id"], content=_render_payload(r)) for r in rows
        ]
        pair = blind_pair(members[0], members[1], seed)
        self.store.append_jsonl(
            "eval/pairs.jsonl",
            {
                "pair_id": pair.pair_id,
                "seed": pair.seed,
                "left_artifact_id": pair.left.artifact_id,
                "right_artifact_id": pair.right.artifact_id,
            },
        )
        return {
            "pair_id": pair.pair_id,
            "outputs": [{"label": label, "content": content} for label, content in pair.presentation()],
        }

    def _load_pair(self, pair_id: str) -> BlindedPair:
        for row in self.store.read_jsonl("eval/pairs.jsonl"):
            if row["pair_id"] == pair_id:
                left = self.get_artifact(row["left_artifact_id"])
                right = self.get_artifact(row["right_artifact_id"])
                return BlindedPair(
                    pair_id=pair_id,
                    seed=row["seed"],
                    left=PairMember(row["left_artifact_id"], _render_payload(left)),
                    right=PairMember(row["right_artifact_id"], _render_payload(right)),
                )
        raise NotFoundError(f"unknown pair: {pair_id}")

    def submit_graded(self, artifact_id: str, rater_id: str, scores: dict) -> dict:
        self.get_artifact(artifact_id)
        if not rater_id:
            raise ArgumentError("rater_id required")
        DEFAULT_RUBRIC.validate_scores(scores)
        row = {
            "rater_id": rater_id,
            "rater_kind": "human",
            "artifact_id": artifact_id,
            "scores": scores,
        }
        self.store.append_jsonl("eval/graded.jsonl", row)
        return row

    def submit_pair_vote(self, pair_id: str, winner_label: str, rater_id: str) -> dict:
        if winner_label not in ("A", "B", "TIE"):
            raise ArgumentError(f"winner must be A, B or TIE, got {winner_label!r}")
        if not rater_id:
            raise ArgumentError("rater_id required")
        pair = self._load_pair(pair_id)
        row = {
            "rater_id": rater_id,
            "rater_kind": "human",
            "left_artifact_id": pair.left.artifact_id,
            "right_artifact_id": pair.right.artifact_id,
            "presentation_seed": pair.seed,
            "winner": pair.resolve(winner_label),
        }
        self.store.append_jsonl("eval/pairwise.jsonl", row)
        return row

    def judge(self, judge_model: str, artifact_id: str | None = None, pair_id: str | None = None) -> dict:
        client = self.client_for(judge_model)
        if artifact_id is not None:
            stored = self.get_artifact(artifact_id)
            chunk_map = {c.chunk_id: c for c in self._chunks()}
            artifact = _artifact_from_stored(stored, chunk_map)
            record = judge_grade(artifact, DEFAULT_RUBRIC, client)
            row = {
                "rater_id": record.rater_id,
                "rater_kind": record.rater_kind,
                "artifact_id": record.artifact_id,
                "scores": record.scores,
            }
            self.store.append_jsonl("eval/graded.jsonl", row)
            return row
        if pair_id is not None:
            pair = self._load_pair(pair_id)
            record = judge_pairwise(pair, client)
            row = {
                "rater_id": record.rater_id,
                "rater_kind": record.rater_kind,
                "left_artifact_id": record.left_artifact_id,
                "right_artifact_id": record.right_artifact_id,
                "presentation_seed": record.presentation_seed,
                "winner": record.winner,
            }
            self.store.append_jsonl("eval/pairwise.jsonl", row)
            return row
        raise ArgumentError("judge requires artifact_id or pair_id")

    def _systems(self) -> dict[str, str]:
        return {
            row["artifact_id"]: row.get("system", row["model_id"])
            for row in self.store.list_artifacts()
        }

    def report(self) -> dict:
        graded = [GradedRecord(**row) for row in self.store.read_jsonl("eval/graded.jsonl")]
        pairwise = [PairwiseRecord(**row) for row in self.store.read_jsonl("eval/pairwise.jsonl")]
        systems = self._systems()
        eval_report = aggregate(graded, pairwise, systems)
        consistency = consistency_report(graded, systems)
        payload = {
            "graded": eval_report.graded,
            "pairwise": eval_report.pairwise,
            "consistency": consistency,
        }
        self.store.write_json("reports/report.json", payload)
        self._write_report_csv(eval_report)
        return payload

    def _write_report_csv(self, eval_report) -> None:
        lines = ["system,category,rater_kind,mean,std_dev,n"]
        for row in eval_report.graded:
            std = "" if row["std_dev"] is None else f"{row['std_dev']:.6f}"
            lines.append(
                f"{row['system']},{row['category']},{row['rater_kind']},{row['mean']:.6f},{std},{row['n']}"
            )
        atomic_write(self.store.path("reports/report.csv"), "\n".join(lines) + "\n")


def _render_payload(stored: dict) -> str:
    parsed = stored["parsed"]
    if isinstance(parsed, str):
        return parsed
    if isinstance(parsed, dict) and "slides" in parsed:
        return "\n".join(
            f"{s['title']}\n" + "\n".join(f"  - {b}" for b in s["bullets"]) for s in parsed["slides"]
        )
    if isinstance(parsed, dict) and "turns" in parsed:
        return "\n".join(f"{t['speaker']}: {t['line']}" for t in parsed["turns"])
    return str(parsed)


def _artifact_from_stored(stored: dict, chunk_map: dict[str, Chunk]) -> GenerationArtifact:
    # Reconstruct enough of the artifact for judging: context text comes
    # from the persisted grounding chunks.
    task = GenerationTask(
        kind=stored["kind"],
        pipeline=stored.get("pipeline"),
        query=stored.get("query"),
        doc_id=stored.get("doc_id"),
        doc_title=stored.get("doc_title", ""),
        context=[chunk_map[cid] for cid in stored.get("context_chunk_ids", []) if cid in chunk_map],
    )
    artifact = GenerationArtifact(
        artifact_id=stored["artifact_id"],
        task=task,
        raw_completion=stored["raw_completion"],
        parsed=stored["parsed"] if isinstance(stored["parsed"], str) else _render_payload(stored),
        grounding=stored["grounding"],
        model_id=stored["model_id"],
    )
    return artifact
