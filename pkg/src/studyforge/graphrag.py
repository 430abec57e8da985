"""Graph retrieval: curated knowledge graph, Leiden communities, cascade search.

The quality function is weighted modularity with resolution ``gamma``:

    Q = sum over communities c of  e_c / m  -  gamma * (d_c / 2m)^2

with ``m`` the total edge weight, ``e_c`` the intra-community weight and
``d_c`` the summed weighted degree. Leiden runs the usual three phases
(local moving, refinement, aggregation) as repeated passes over the
pyramid, starting each pass from the current flat partition; it stops when
a full pass moves nothing, which leaves every original node locally
optimally assigned and every community connected.
"""

from __future__ import annotations

import json
import logging
import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .embeddings import EmbeddingProvider, Vector, cosine, embed
from .errors import GraphValidationError, StudyforgeError
from .hybrid import ScoredResult

logger = logging.getLogger(__name__)

_GAIN_EPS = 1e-12
_MAX_PASSES = 100


@dataclass
class Entity:
    entity_id: str
    name: str
    type: str
    description: str
    source_chunk_ids: list[str] = field(default_factory=list)
    embedding: Vector | None = None


@dataclass
class Edge:
    a: str
    b: str
    label: str
    weight: float


class KnowledgeGraph:
    """Undirected entity graph; parallel edges merged, self-loops rejected."""

    def __init__(self):
        self.nodes: dict[str, Entity] = {}
        self.edges: dict[tuple[str, str], Edge] = {}

    def add_entity(self, entity: Entity) -> None:
        if entity.entity_id in self.nodes:
            raise GraphValidationError(f"duplicate entity id: {entity.entity_id}")
        self.nodes[entity.entity_id] = entity

    def add_relation(self, a: str, b: str, label: str, weight: float) -> None:
        if a == b:
            raise GraphValidationError(f"self-loop rejected: {a} -[{label}]- {b}")
        for end in (a, b):
            if end not in self.nodes:
                raise GraphValidationError(
                    f"dangling edge endpoint: {end} in relation {a} -[{label}]- {b}"
                )
        if not weight > 0:
            raise GraphValidationError(
                f"nonpositive weight {weight} on relation {a} -[{label}]- {b}"
            )
        key = (a, b) if a < b else (b, a)
        existing = self.edges.get(key)
        if existing is None:
            self.edges[key] = Edge(key[0], key[1], label, float(weight))
        else:
            existing.weight += float(weight)
            if label and label not in existing.label.split("; "):
                existing.label = f"{existing.label}; {label}"

    def neighbors(self, entity_id: str) -> dict[str, float]:
        out: dict[str, float] = {}
        for (a, b), edge in self.edges.items():
            if a == entity_id:
                out[b] = edge.weight
            elif b == entity_id:
                out[a] = edge.weight
        return out

    def total_weight(self) -> float:
        return sum(e.weight for e in self.edges.values())


@dataclass
class Partition:
    assignment: dict[str, int]
    quality_history: list[float] = field(default_factory=list, compare=False)

    @property
    def community_ids(self) -> list[int]:
        return sorted(set(self.assignment.values()))

    def members(self, community_id: int) -> list[str]:
        return sorted(e for e, c in self.assignment.items() if c == community_id)


@dataclass
class CommunitySummary:
    community_id: int
    member_entities: list[str]
    summary_text: str
    embedding: Vector | None = None


def load_graph(path: str | Path, known_chunk_ids: set[str] | None = None) -> KnowledgeGraph:
    """Load and validate ``graph.json``; offending records are named in errors."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    graph = KnowledgeGraph()
    for row in data.get("entities", []):
        graph.add_entity(
            Entity(
                entity_id=row["id"],
                name=row.get("name", row["id"]),
                type=row.get("type", "concept"),
                description=row.get("description", ""),
                source_chunk_ids=list(row.get("source_chunk_ids", [])),
            )
        )
    for row in data.get("relations", []):
        graph.add_relation(row["a"], row["b"], row.get("label", ""), row.get("weight", 1.0))
    if known_chunk_ids is not None:
        for entity in graph.nodes.values():
            for cid in entity.source_chunk_ids:
                if cid not in known_chunk_ids:
                    raise GraphValidationError(
                        f"entity {entity.entity_id} references unknown chunk {cid}"
                    )
    return graph


# ---------------------------------------------------------------------------
# Modularity
# ---------------------------------------------------------------------------


def validate_partition(g: KnowledgeGraph, p: Partition) -> None:
    if set(p.assignment) != set(g.nodes):
        raise GraphValidationError("partition does not cover exactly the graph's nodes")


def modularity(g: KnowledgeGraph, p: Partition, gamma: float = 1.0) -> float:
    if not g.nodes:
        raise StudyforgeError("modularity undefined on an empty graph", code="undefined_modularity")
    m = g.total_weight()
    if m <= 0:
        raise StudyforgeError("modularity undefined without edges", code="undefined_modularity")
    validate_partition(g, p)
    intra: dict[int, float] = defaultdict(float)
    degree: dict[int, float] = defaultdict(float)
    for (a, b), edge in g.edges.items():
        degree[p.assignment[a]] += edge.weight
        degree[p.assignment[b]] += edge.weight
        if p.assignment[a] == p.assignment[b]:
            intra[p.assignment[a]] += edge.weight
    return sum(
        intra[c] / m - gamma * (degree[c] / (2.0 * m)) ** 2 for c in set(p.assignment.values())
    )


# ---------------------------------------------------------------------------
# Leiden
# ---------------------------------------------------------------------------


class _WorkGraph:
    """Aggregate-level graph: integer nodes, symmetric adjacency, self weights."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]
        self.self_w: list[float] = [0.0] * n

    @property
    def strength(self) -> list[float]:
        return [sum(nbrs.values()) + 2.0 * self.self_w[i] for i, nbrs in enumerate(self.adj)]

    @property
    def m(self) -> float:
        return sum(sum(nbrs.values()) for nbrs in self.adj) / 2.0 + sum(self.self_w)


def _move_nodes(g: _WorkGraph, comm: list[int], next_cid: int, rng: random.Random, gamma: float) -> tuple[int, int]:
    """Greedy local moving; returns (moves made, next free community id).

    Candidates are the neighbor communities plus a fresh empty one, so a
    node whose isolation strictly improves quality always leaves.
    """
    m = g.m
    strength = g.strength
    d_tot: dict[int, float] = defaultdict(float)
    for i in range(g.n):
        d_tot[comm[i]] += strength[i]
    order = list(range(g.n))
    rng.shuffle(order)

    total = 0
    while True:
        moves = 0
        for i in order:
            k_i = strength[i]
            if k_i == 0.0:
                continue
            a = comm[i]
            k_to: dict[int, float] = defaultdict(float)
            for j, w in g.adj[i].items():
                k_to[comm[j]] += w
            best_c = a
            best_s = k_to.get(a, 0.0) / m - gamma * k_i * (d_tot[a] - k_i) / (2.0 * m * m)
            for c in sorted(k_to):
                if c == a:
                    continue
                s = k_to[c] / m - gamma * k_i * d_tot[c] / (2.0 * m * m)
                if s > best_s + _GAIN_EPS:
                    best_c, best_s = c, s
            if 0.0 > best_s + _GAIN_EPS:  # isolate into a fresh community
                best_c, best_s = next_cid, 0.0
            if best_c != a:
                if best_c == next_cid:
                    next_cid += 1
                comm[i] = best_c
                d_tot[a] -= k_i
                d_tot[best_c] += k_i
                moves += 1
        total += moves
        if moves == 0:
            return total, next_cid


def _refine(g: _WorkGraph, comm: list[int], rng: random.Random, gamma: float) -> list[int]:
    """Sub-partition within each community: start from singletons, merge
    nodes that are still alone into a connected refined community of the
    same outer community, picking uniformly among strictly-positive-gain
    targets."""
    m = g.m
    strength = g.strength
    ref = list(range(g.n))
    d_ref = {i: strength[i] for i in range(g.n)}
    size = {i: 1 for i in range(g.n)}
    order = list(range(g.n))
    rng.shuffle(order)
    for i in order:
        if size[ref[i]] > 1:
            continue
        k_i = strength[i]
        if k_i == 0.0:
            continue
        k_to: dict[int, float] = defaultdict(float)
        for j, w in g.adj[i].items():
            if comm[j] == comm[i]:
                k_to[ref[j]] += w
        candidates = []
        for r in sorted(k_to):
            if r == ref[i]:
                continue
            gain = k_to[r] / m - gamma * k_i * d_ref[r] / (2.0 * m * m)
            if gain > _GAIN_EPS:
                candidates.append(r)
        if candidates:
            target = rng.choice(candidates)
            d_ref[target] += k_i
            size[target] += 1
            d_ref[ref[i]] -= k_i
            size[ref[i]] -= 1
            ref[i] = target
    return ref


def _aggregate(
    g: _WorkGraph, ref: list[int], comm: list[int], owner: list[int]
) -> tuple[_WorkGraph, list[int], list[int]]:
    ref_ids = sorted(set(ref))
    dense = {r: idx for idx, r in enumerate(ref_ids)}
    agg = _WorkGraph(len(ref_ids))
    new_comm = [0] * len(ref_ids)
    for i in range(g.n):
        ri = dense[ref[i]]
        new_comm[ri] = comm[i]  # refinement never crosses outer communities
        agg.self_w[ri] += g.self_w[i]
        for j, w in g.adj[i].items():
            if j < i:
                continue
            rj = dense[ref[j]]
            if ri == rj:
                agg.self_w[ri] += w
            else:
                agg.adj[ri][rj] = agg.adj[ri].get(rj, 0.0) + w
                agg.adj[rj][ri] = agg.adj[rj].get(ri, 0.0) + w
    new_owner = [dense[ref[o]] for o in owner]
    return agg, new_comm, new_owner


def _flat_quality(base: _WorkGraph, flat: list[int], gamma: float) -> float:
    m = base.m
    strength = base.strength
    intra: dict[int, float] = defaultdict(float)
    degree: dict[int, float] = defaultdict(float)
    for i in range(base.n):
        degree[flat[i]] += strength[i]
        for j, w in base.adj[i].items():
            if j > i and flat[i] == flat[j]:
                intra[flat[i]] += w
    return sum(intra[c] / m - gamma * (degree[c] / (2.0 * m)) ** 2 for c in set(flat))


def _canonical(ids: list[str], flat: list[int], history: list[float]) -> Partition:
    relabel: dict[int, int] = {}
    assignment = {}
    for idx, entity_id in enumerate(ids):
        c = flat[idx]
        if c not in relabel:
            relabel[c] = len(relabel)
        assignment[entity_id] = relabel[c]
    return Partition(assignment=assignment, quality_history=history)


def leiden(g: KnowledgeGraph, gamma: float = 1.0, seed: int = 0) -> Partition:
    """Deterministic Leiden for a fixed (graph, gamma, seed).

    Visit order derives from a seed-shuffled canonical (sorted-id) node
    order, so insertion order never matters. An edgeless graph yields the
    singleton partition.
    """
    if not g.nodes:
        raise StudyforgeError("leiden requires a non-empty graph", code="empty_graph")
    ids = sorted(g.nodes)
    index = {e: i for i, e in enumerate(ids)}
    n = len(ids)
    base = _WorkGraph(n)
    for (a, b), edge in g.edges.items():
        ia, ib = index[a], index[b]
        base.adj[ia][ib] = base.adj[ia].get(ib, 0.0) + edge.weight
        base.adj[ib][ia] = base.adj[ib].get(ia, 0.0) + edge.weight
    if base.m == 0:
        return _canonical(ids, list(range(n)), [])

    rng = random.Random(seed)
    flat = list(range(n))
    history: list[float] = []
    for _ in range(_MAX_PASSES):
        work = base
        owner = list(range(n))
        comm = flat[:]
        next_cid = max(comm) + 1
        pass_moves = 0
        while True:
            moves, next_cid = _move_nodes(work, comm, next_cid, rng, gamma)
            pass_moves += moves
            if len(set(comm)) == work.n:
                break
            ref = _refine(work, comm, rng, gamma)
            if len(set(ref)) == work.n:
                break
            work, comm, owner = _aggregate(work, ref, comm, owner)
            next_cid = max(comm) + 1
        new_flat = [comm[owner[v]] for v in range(n)]
        history.append(_flat_quality(base, new_flat, gamma))
        flat = new_flat
        if pass_moves == 0:
            break
    return _canonical(ids, flat, history)


# ---------------------------------------------------------------------------
# Community summaries and retrieval cascade
# ---------------------------------------------------------------------------

_SUMMARY_SYSTEM = (
    "You are an academic research assistant. Summarize the following cluster "
    "of related entities from a research knowledge graph in 2-4 sentences, "
    "covering what connects them."
)


def embed_entities(g: KnowledgeGraph, provider: EmbeddingProvider) -> None:
    """Fill entity embeddings from 'name: description' text."""
    ids = sorted(g.nodes)
    vecs = provider.embed_batch([f"{g.nodes[e].name}: {g.nodes[e].description}" for e in ids])
    for entity_id, vec in zip(ids, vecs):
        g.nodes[entity_id].embedding = vec


def summarize_communities(
    g: KnowledgeGraph,
    p: Partition,
    client,
    provider: EmbeddingProvider,
) -> list[CommunitySummary]:
    """One summary per community, embedded for retrieval."""
    validate_partition(g, p)
    summaries = []
    for cid in p.community_ids:
        members = p.members(cid)
        member_set = set(members)
        lines = [f"- {g.nodes[e].name} ({g.nodes[e].type}): {g.nodes[e].description}" for e in members]
        relations = [
            f"- {g.nodes[a].name} -[{edge.label}]- {g.nodes[b].name} (weight {edge.weight:g})"
            for (a, b), edge in sorted(g.edges.items())
            if a in member_set and b in member_set
        ]
        prompt = "Entities:\n" + "\n".join(lines)
        if relations:
            prompt += "\n\nRelations:\n" + "\n".join(relations)
        messages = [
            {"role": "system", "content": _SUMMARY_SYSTEM},
            {"role": "user", "content": prompt},
        ]
        text = client.complete(messages)
        if not text.strip():
            raise StudyforgeError(f"empty summary for community {cid}", code="empty_summary")
        summaries.append(
            CommunitySummary(
                community_id=cid,
                member_entities=members,
                summary_text=text,
                embedding=embed(text, provider),
            )
        )
    return summaries


def graph_retrieve(
    query: str,
    k: int,
    g: KnowledgeGraph,
    p: Partition,
    summaries: list[CommunitySummary],
    provider: EmbeddingProvider,
    top_communities: int = 2,
    top_entities: int = 5,
) -> list[ScoredResult]:
    """Community -> entity -> chunk cascade ranked by cosine similarity."""
    if not summaries:
        logger.warning("graph_retrieve called with no community summaries")
        return []
    query_vec = embed(query, provider)
    ranked_comms = sorted(
        summaries,
        key=lambda s: (-cosine(query_vec, s.embedding), s.community_id),
    )[:top_communities]

    selected: list[tuple[float, str]] = []
    for summary in ranked_comms:
        scored = sorted(
            (
                (-cosine(query_vec, g.nodes[e].embedding), e)
                for e in summary.member_entities
                if g.nodes[e].embedding is not None
            ),
        )[:top_entities]
        selected.extend(scored)
    selected.sort()

    results: list[ScoredResult] = []
    seen: set[str] = set()
    for neg_score, entity_id in selected:
        score = -neg_score
        for chunk_id in g.nodes[entity_id].source_chunk_ids:
            if chunk_id in seen:
                continue  # keep the best (earliest) score for a chunk
            seen.add(chunk_id)
            results.append(
                ScoredResult(
                    chunk_id=chunk_id,
                    lexical_score=0.0,
                    dense_score=score,
                    fused_score=score,
                )
            )
    results.sort(key=lambda r: (-r.fused_score, r.chunk_id))
    return results[:k]


def save_communities(path: str | Path, p: Partition, summaries: list[CommunitySummary]) -> None:
    payload = {
        "assignment": dict(sorted(p.assignment.items())),
        "quality_history": p.quality_history,
        "summaries": [
            {
                "community_id": s.community_id,
                "member_entities": s.member_entities,
                "summary_text": s.summary_text,
                "embedding": s.embedding,
            }
            for s in summaries
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_communities(path: str | Path) -> tuple[Partition, list[CommunitySummary]]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    partition = Partition(
        assignment=payload["assignment"], quality_history=payload.get("quality_history", [])
    )
    summaries = [CommunitySummary(**row) for row in payload["summaries"]]
    return partition, summaries
