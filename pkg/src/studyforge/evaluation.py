"""Dual-track evaluation: graded rubric scoring, blinded pairwise votes,
LLM judges, and aggregation statistics.

Pairwise presentations are order-randomized by a seed-keyed fair coin and
shown only as "Output A" / "Output B"; the seed is stored with each vote so
the blinded order is reconstructible. Ties award half a win to each side.
Standard deviations use the sample (n-1) form and are reported as absent,
never zero, when fewer than two scores exist.
"""

from __future__ import annotations

import hashlib
import random
import re
import statistics
from dataclasses import dataclass, field

from .chat import ChatClient, Message
from .errors import ArgumentError, MalformedOutputError, PolicyError, ValidationError
from .genkit import GenerationArtifact

DEFAULT_CATEGORIES = [
    "Coherence",
    "Fluency",
    "Relevance",
    "Correctness",
    "Completeness",
    "NoHallucinations",
    "Reasoning",
    "Usefulness",
    "Consistency",
    "Engagement",
    "OverallSatisfaction",
]

_DEFAULT_DESCRIPTORS = {
    "Coherence": "the output is logically organized and flows naturally",
    "Fluency": "the language is grammatical and well formed",
    "Relevance": "the output addresses the request and the source material",
    "Correctness": "statements are accurate with respect to the source documents",
    "Completeness": "the output covers the substantive points of the material",
    "NoHallucinations": "nothing is asserted that the source documents do not support",
    "Reasoning": "claims are connected by sound, explicit reasoning",
    "Usefulness": "a student or instructor could directly use this output",
    "Consistency": "the output does not contradict itself",
    "Engagement": "the output holds attention and invites further reading",
    "OverallSatisfaction": "overall quality, all things considered",
}


@dataclass
class Rubric:
    categories: list[str] = field(default_factory=lambda: list(DEFAULT_CATEGORIES))
    descriptors: dict[str, str] = field(default_factory=lambda: dict(_DEFAULT_DESCRIPTORS))
    scale_min: int = 1
    scale_max: int = 5

    def validate_scores(self, scores: dict[str, int]) -> None:
        missing = [c for c in self.categories if c not in scores]
        extra = [c for c in scores if c not in self.categories]
        if missing or extra:
            raise ValidationError(
                f"scores must cover each category exactly once (missing={missing}, extra={extra})",
                code="bad-rubric-scores",
            )
        for category, score in scores.items():
            if not isinstance(score, int) or not self.scale_min <= score <= self.scale_max:
                raise ValidationError(
                    f"{category} score {score!r} outside [{self.scale_min}, {self.scale_max}]",
                    code="score-out-of-range",
                )


DEFAULT_RUBRIC = Rubric()


@dataclass
class GradedRecord:
    rater_id: str
    rater_kind: str  # "human" | "llm_judge"
    artifact_id: str
    scores: dict[str, int]


@dataclass
class PairwiseRecord:
    rater_id: str
    rater_kind: str
    left_artifact_id: str
    right_artifact_id: str
    presentation_seed: int
    winner: str  # "left" | "right" | "tie"


@dataclass(frozen=True)
class PairMember:
    artifact_id: str
    content: str


@dataclass
class BlindedPair:
    pair_id: str
    seed: int
    left: PairMember
    right: PairMember

    @property
    def a_is_left(self) -> bool:
        return _coin(self.seed)

    def presentation(self) -> list[tuple[str, str]]:
        """Blinded view: labels and contents only, identity mapping stays
        server-side."""
        first, second = (self.left, self.right) if self.a_is_left else (self.right, self.left)
        return [("Output A", first.content), ("Output B", second.content)]

    def resolve(self, verdict: str) -> str:
        """Map a blinded verdict ('A' | 'B' | 'TIE') back to left/right/tie."""
        if verdict == "TIE":
            return "tie"
        if verdict not in ("A", "B"):
            raise ArgumentError(f"unknown verdict {verdict!r}")
        return ("left" if self.a_is_left else "right") if verdict == "A" else (
            "right" if self.a_is_left else "left"
        )


def _coin(seed: int) -> bool:
    return random.Random(seed).random() < 0.5


def blind_pair(a: PairMember, b: PairMember, seed: int) -> BlindedPair:
    if a.artifact_id == b.artifact_id:
        raise ArgumentError("cannot pair an artifact with itself")
    pair_id = hashlib.sha1(f"{a.artifact_id}|{b.artifact_id}|{seed}".encode()).hexdigest()[:16]
    return BlindedPair(pair_id=pair_id, seed=seed, left=a, right=b)


# ---------------------------------------------------------------------------
# LLM judges
# ---------------------------------------------------------------------------

_JUDGE_SYSTEM = (
    "You are a critical academic evaluator. Judge the quality of the "
    "presented output strictly against the provided source material."
)

_SCORE_LINE = re.compile(r"^\s*\*?\s*([A-Za-z]+)\s*:\s*(-?\d+)\s*$", re.M)
_WINNER_LINE = re.compile(r"^\s*WINNER:\s*(A|B|TIE)\s*$")


def _judge_retry(client: ChatClient, messages: list[Message], parse):
    raw = client.complete(messages, temperature=0.0)
    try:
        return parse(raw)
    except ValidationError as first_error:
        corrective = messages + [
            {"role": "assistant", "content": raw},
            {
                "role": "user",
                "content": (
                    f"Your previous reply was invalid ({first_error}). "
                    "Answer again in exactly the requested format."
                ),
            },
        ]
        raw2 = client.complete(corrective, temperature=0.0)
        try:
            return parse(raw2)
        except ValidationError as second_error:
            raise MalformedOutputError(
                f"judgment invalid after retry: {second_error}",
                raw=raw2,
                code="malformed-judgment",
            )


def _artifact_text(artifact: GenerationArtifact) -> str:
    payload = artifact.parsed_payload()
    if isinstance(payload, str):
        return payload
    if isinstance(payload, dict) and "slides" in payload:
        return "\n".join(
            f"{s['title']}\n" + "\n".join(f"  - {b}" for b in s["bullets"]) for s in payload["slides"]
        )
    if isinstance(payload, dict) and "turns" in payload:
        return "\n".join(f"{t['speaker']}: {t['line']}" for t in payload["turns"])
    return str(payload)


def judge_grade(
    artifact: GenerationArtifact, rubric: Rubric, judge_client: ChatClient
) -> GradedRecord:
    """Grade one artifact with an LLM judge; judging one's own generator
    model is a policy violation."""
    if judge_client.model_id == artifact.model_id:
        raise PolicyError(
            f"judge {judge_client.model_id} may not grade its own generations",
            code="self_judging",
        )
    rubric_lines = "\n".join(f"- {c}: {rubric.descriptors.get(c, '')}" for c in rubric.categories)
    context = "\n\n".join(c.text for c in artifact.task.context)
    user = (
        f"Rubric (score each {rubric.scale_min}-{rubric.scale_max}):\n{rubric_lines}\n\n"
        f"Source material:\n{context}\n\n"
        f"Output under evaluation:\n{_artifact_text(artifact)}\n\n"
        "Respond with one line per category, formatted exactly 'Category: score'."
    )
    messages = [{"role": "system", "content": _JUDGE_SYSTEM}, {"role": "user", "content": user}]

    def parse(raw: str) -> dict[str, int]:
        found = {m.group(1): int(m.group(2)) for m in _SCORE_LINE.finditer(raw)}
        scores = {c: found[c] for c in rubric.categories if c in found}
        rubric.validate_scores(scores)
        return scores

    scores = _judge_retry(judge_client, messages, parse)
    return GradedRecord(
        rater_id=judge_client.model_id,
        rater_kind="llm_judge",
        artifact_id=artifact.artifact_id,
        scores=scores,
    )


def judge_pairwise(pair: BlindedPair, judge_client: ChatClient) -> PairwiseRecord:
    """Blinded pairwise judgment; the verdict is parsed from a constrained
    final line and de-randomized with the presentation seed."""
    (label_a, content_a), (label_b, content_b) = pair.presentation()
    user = (
        "Two outputs answer the same request. Compare them for accuracy, "
        "clarity and usefulness, then give your verdict on the final line, "
        "formatted exactly 'WINNER: A' or 'WINNER: B' or 'WINNER: TIE'.\n\n"
        f"{label_a}:\n{content_a}\n\n{label_b}:\n{content_b}"
    )
    messages = [{"role": "system", "content": _JUDGE_SYSTEM}, {"role": "user", "content": user}]

    def parse(raw: str) -> str:
        lines = [ln for ln in raw.splitlines() if ln.strip()]
        if not lines:
            raise ValidationError("empty judgment", code="missing-verdict")
        m = _WINNER_LINE.match(lines[-1])
        if not m:
            raise ValidationError(f"final line is not a verdict: {lines[-1]!r}", code="missing-verdict")
        return m.group(1)

    verdict = _judge_retry(judge_client, messages, parse)
    return PairwiseRecord(
        rater_id=judge_client.model_id,
        rater_kind="llm_judge",
        left_artifact_id=pair.left.artifact_id,
        right_artifact_id=pair.right.artifact_id,
        presentation_seed=pair.seed,
        winner=pair.resolve(verdict),
    )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    graded: list[dict]
    pairwise: list[dict]

    def to_dict(self) -> dict:
        return {"graded": self.graded, "pairwise": self.pairwise}


def _system_of(systems: dict[str, str], artifact_id: str) -> str:
    if artifact_id not in systems:
        raise ArgumentError(f"no system mapping for artifact {artifact_id}")
    return systems[artifact_id]


def aggregate(
    graded: list[GradedRecord],
    pairwise: list[PairwiseRecord],
    systems: dict[str, str],
) -> EvalReport:
    """Means and sample std devs per (system, category, rater kind), plus
    win accounting per (system, rater kind) with ties as half wins."""
    if not graded and not pairwise:
        raise ArgumentError("no evaluation records", code="no_records")

    score_pools: dict[tuple[str, str, str], list[int]] = {}
    for record in graded:
        system = _system_of(systems, record.artifact_id)
        for category, score in record.scores.items():
            score_pools.setdefault((system, category, record.rater_kind), []).append(score)

    graded_rows = []
    for (system, category, kind), pool in sorted(score_pools.items()):
        graded_rows.append(
            {
                "system": system,
                "category": category,
                "rater_kind": kind,
                "mean": statistics.fmean(pool),
                "std_dev": statistics.stdev(pool) if len(pool) >= 2 else None,
                "n": len(pool),
            }
        )

    wins: dict[tuple[str, str], float] = {}
    contests: dict[tuple[str, str], int] = {}
    raters: dict[tuple[str, str], set[str]] = {}
    for record in pairwise:
        left = _system_of(systems, record.left_artifact_id)
        right = _system_of(systems, record.right_artifact_id)
        for system in (left, right):
            key = (system, record.rater_kind)
            contests[key] = contests.get(key, 0) + 1
            raters.setdefault(key, set()).add(record.rater_id)
            wins.setdefault(key, 0.0)
        if record.winner == "tie":
            wins[(left, record.rater_kind)] += 0.5
            wins[(right, record.rater_kind)] += 0.5
        elif record.winner == "left":
            wins[(left, record.rater_kind)] += 1.0
        else:
            wins[(right, record.rater_kind)] += 1.0

    pairwise_rows = []
    for key in sorted(contests):
        system, kind = key
        n_raters = len(raters[key])
        pairwise_rows.append(
            {
                "system": system,
                "rater_kind": kind,
                "wins": wins[key],
                "contests": contests[key],
                "win_pct": wins[key] / contests[key],
                "mean_wins_per_rater": wins[key] / n_raters,
                "n_raters": n_raters,
            }
        )
    return EvalReport(graded=graded_rows, pairwise=pairwise_rows)


def consistency_report(
    graded: list[GradedRecord],
    systems: dict[str, str],
    rubric: Rubric | None = None,
) -> list[dict]:
    """Per system and rater kind: the average over categories of the
    per-category sample std dev across raters."""
    rubric = rubric or DEFAULT_RUBRIC
    groups: dict[tuple[str, str], list[GradedRecord]] = {}
    for record in graded:
        system = _system_of(systems, record.artifact_id)
        groups.setdefault((system, record.rater_kind), []).append(record)

    rows = []
    for (system, kind), records in sorted(groups.items()):
        if len({r.rater_id for r in records}) < 2:
            rows.append(
                {
                    "system": system,
                    "rater_kind": kind,
                    "mean_category_std": None,
                    "reason": "insufficient raters",
                }
            )
            continue
        stds = []
        for category in rubric.categories:
            pool = [r.scores[category] for r in records if category in r.scores]
            if len(pool) >= 2:
                stds.append(statistics.stdev(pool))
        rows.append(
            {
                "system": system,
                "rater_kind": kind,
                "mean_category_std": statistics.fmean(stds) if stds else None,
                "reason": None,
            }
        )
    return rows
