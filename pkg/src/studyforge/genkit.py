"""Prompt rendering, output generation, and strict format parsers.

Four output kinds ship: grounded Q&A answers, sectioned summaries, slide
decks, and two-voice podcast scripts. Prompts come from plain-text
templates with ``{{placeholder}}`` substitution; context chunks are always
fenced and id-prefixed in the user message, never interpolated into the
system message. Slide decks default to the iterative two-pass scheme
(outline call, then one bullets call per title); a single-pass mode exists
for cost.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .chat import ChatClient, Message
from .errors import ArgumentError, MalformedOutputError, ValidationError
from .ingest import Chunk

KINDS = ("qa", "summary", "slides", "podcast")
PIPELINES = ("advanced", "graph")
END_DELIMITER = "<END>"
DEFAULT_ROLE = "academic research assistant"

SLIDE_SCHEMA = '{"slides": [{"title": "string", "bullets": ["string", "..."]}]}'


@dataclass
class GenerationTask:
    kind: str
    pipeline: str | None = None
    query: str | None = None
    doc_id: str | None = None
    doc_title: str = ""
    context: list[Chunk] = field(default_factory=list)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown task kind: {self.kind}")
        if self.kind == "qa":
            if not self.query or self.pipeline not in PIPELINES:
                raise ArgumentError("qa tasks require a query and a valid pipeline")
            if not self.context:
                raise ArgumentError("qa tasks require non-empty context")
        elif not self.doc_id:
            raise ArgumentError(f"{self.kind} tasks require a doc_id")


@dataclass
class Slide:
    title: str
    bullets: list[str]


@dataclass
class SlideDeck:
    slides: list[Slide]

    def to_dict(self) -> dict:
        return {"slides": [{"title": s.title, "bullets": list(s.bullets)} for s in self.slides]}


@dataclass
class PodcastTurn:
    speaker: str
    line: str


@dataclass
class PodcastScript:
    turns: list[PodcastTurn]

    def to_text(self) -> str:
        return "\n".join(f"{t.speaker}: {t.line}" for t in self.turns)

    def to_dict(self) -> dict:
        return {"turns": [{"speaker": t.speaker, "line": t.line} for t in self.turns]}


@dataclass
class GenerationArtifact:
    artifact_id: str
    task: GenerationTask
    raw_completion: str
    parsed: str | SlideDeck | PodcastScript
    grounding: list[str]
    model_id: str
    retries: int = 0
    warnings: list[str] = field(default_factory=list)

    def parsed_payload(self):
        if isinstance(self.parsed, (SlideDeck, PodcastScript)):
            return self.parsed.to_dict()
        return self.parsed

    def to_dict(self) -> dict:
        return {
            "artifact_id": self.artifact_id,
            "kind": self.task.kind,
            "pipeline": self.task.pipeline,
            "query": self.task.query,
            "doc_id": self.task.doc_id,
            "doc_title": self.task.doc_title,
            "context_chunk_ids": [c.chunk_id for c in self.task.context],
            "raw_completion": self.raw_completion,
            "parsed": self.parsed_payload(),
            "grounding": self.grounding,
            "model_id": self.model_id,
            "retries": self.retries,
            "warnings": self.warnings,
        }


@dataclass
class GenOptions:
    role: str = DEFAULT_ROLE
    slides_two_pass: bool = True
    min_slides: int = 3
    speakers: tuple[str, str] = ("HOST", "EXPERT")
    temperature: float = 0.0
    template_dir: str | Path | None = None


def _load_template(name: str, template_dir: str | Path | None) -> str:
    if template_dir is not None:
        return (Path(template_dir) / f"{name}.txt").read_text(encoding="utf-8")
    return resources.files("studyforge").joinpath(f"templates/{name}.txt").read_text(encoding="utf-8")


def _fill(template: str, values: dict[str, str]) -> str:
    for key, value in values.items():
        template = template.replace("{{" + key + "}}", value)
    return template


def _context_block(chunks: list[Chunk]) -> str:
    parts = []
    for chunk in chunks:
        body = chunk.text.replace("```", "'''")  # keep the fence intact
        parts.append(f"[chunk {chunk.chunk_id}]\n```\n{body}\n```")
    return "\n".join(parts)


def _messages(system: str, user: str) -> list[Message]:
    return [{"role": "system", "content": system}, {"role": "user", "content": user}]


def render_prompt(task: GenerationTask, options: GenOptions | None = None) -> list[Message]:
    """Render the canonical prompt for a task (for slides: the schema-bearing
    single-pass form; the two-pass prompts are rendered inside ``generate``)."""
    options = options or GenOptions()
    task.validate()
    system = _fill(_load_template("system", options.template_dir), {"role": options.role})
    values = {
        "context": _context_block(task.context),
        "query": task.query or "",
        "doc_title": task.doc_title or task.doc_id or "",
        "schema": SLIDE_SCHEMA,
        "n_slides": str(options.min_slides),
        "host": options.speakers[0],
        "expert": options.speakers[1],
        "first_chunk_id": task.context[0].chunk_id if task.context else "",
    }
    template_name = {"qa": "qa", "summary": "summary", "slides": "slides_single", "podcast": "podcast"}[task.kind]
    user = _fill(_load_template(template_name, options.template_dir), values)
    return _messages(system, user)


# ---------------------------------------------------------------------------
# Parsers
# ---------------------------------------------------------------------------

_FENCE = re.compile(r"^\s*```[a-zA-Z]*\s*\n(.*)\n\s*```\s*$", re.S)


def _strip_fences(raw: str) -> str:
    m = _FENCE.match(raw.strip())
    return m.group(1) if m else raw


def parse_slides(raw: str) -> SlideDeck:
    """Strict slide deck validation; every violated invariant is named."""
    try:
        data = json.loads(_strip_fences(raw))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"slide deck is not valid JSON: {exc}", code="invalid-json")
    if isinstance(data, dict) and isinstance(data.get("slides"), list):
        rows = data["slides"]
    elif isinstance(data, list):
        rows = data
    else:
        raise ValidationError("expected an object with a 'slides' list", code="not-a-deck")

    slides: list[Slide] = []
    titles: set[str] = set()
    for row in rows:
        if not isinstance(row, dict) or not isinstance(row.get("title"), str) or not isinstance(row.get("bullets"), list):
            raise ValidationError(f"slide has wrong shape: {row!r}", code="bad-slide-shape")
        title = row["title"].strip()
        if not title:
            raise ValidationError("slide title is empty", code="empty-title")
        if title in titles:
            raise ValidationError(f"duplicate slide title: {title}", code="duplicate-title")
        titles.add(title)
        bullets = row["bullets"]
        if len(bullets) == 0:
            raise ValidationError(f"slide '{title}' has no bullets", code="no-bullets")
        if len(bullets) > 6:
            raise ValidationError(f"slide '{title}' has {len(bullets)} bullets", code="too-many-bullets")
        clean = []
        for bullet in bullets:
            if not isinstance(bullet, str):
                raise ValidationError(f"non-string bullet on '{title}'", code="bad-slide-shape")
            if not bullet.strip():
                raise ValidationError(f"empty bullet on '{title}'", code="empty-bullet")
            clean.append(bullet.strip())
        slides.append(Slide(title=title, bullets=clean))
    if len(slides) < 3:
        raise ValidationError(f"deck has {len(slides)} slides, need >= 3", code="too-few-slides")
    return SlideDeck(slides=slides)


def parse_podcast(raw: str, speakers: tuple[str, str] = ("HOST", "EXPERT")) -> PodcastScript:
    """Parse 'SPEAKER: line' turns, ignoring blank lines."""
    host, expert = speakers
    turns: list[PodcastTurn] = []
    for line in raw.splitlines():
        if not line.strip():
            continue
        m = re.match(r"^\s*([A-Za-z ]+?)\s*:\s*(.*)$", line)
        if not m:
            raise ValidationError(f"line has no speaker tag: {line!r}", code="bad-line-format")
        speaker, content = m.group(1), m.group(2).strip()
        if speaker not in (host, expert):
            raise ValidationError(f"unknown speaker: {speaker!r}", code="unknown-speaker")
        if not content:
            raise ValidationError(f"empty line for {speaker}", code="empty-line")
        turns.append(PodcastTurn(speaker=speaker, line=content))
    if not turns or turns[0].speaker != host:
        raise ValidationError(f"script must open with {host}", code="first-speaker-not-host")
    for prev, cur in zip(turns, turns[1:]):
        if prev.speaker == cur.speaker:
            raise ValidationError(
                f"consecutive turns by {cur.speaker}", code="non-alternating-speakers"
            )
    if len(turns) < 6:
        raise ValidationError(f"script has {len(turns)} turns, need >= 6", code="too-few-turns")
    return PodcastScript(turns=turns)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _call_with_retry(client: ChatClient, messages: list[Message], parse, temperature: float):
    """Call, parse, and on a validation failure retry once with a corrective
    message appended. Returns (parsed, raw_texts, retries)."""
    raw = client.complete(messages, temperature=temperature)
    try:
        return parse(raw), [raw], 0
    except ValidationError as first_error:
        corrective = messages + [
            {"role": "assistant", "content": raw},
            {
                "role": "user",
                "content": (
                    f"Your previous reply was invalid ({first_error.code}: {first_error}). "
                    "Reply again following the requested format exactly, with no other text."
                ),
            },
        ]
        raw2 = client.complete(corrective, temperature=temperature)
        try:
            return parse(raw2), [raw, raw2], 1
        except ValidationError as second_error:
            raise MalformedOutputError(
                f"output invalid after retry ({second_error.code}: {second_error})",
                raw=raw2,
                code=second_error.code,
            )


def _parse_string_array(raw: str, minimum: int, maximum: int, what: str) -> list[str]:
    try:
        data = json.loads(_strip_fences(raw))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what} is not valid JSON: {exc}", code="invalid-json")
    if not isinstance(data, list) or not all(isinstance(x, str) and x.strip() for x in data):
        raise ValidationError(f"{what} must be a JSON array of non-empty strings", code=f"bad-{what}")
    if not minimum <= len(data) <= maximum:
        raise ValidationError(
            f"{what} must have between {minimum} and {maximum} items, got {len(data)}",
            code=f"bad-{what}",
        )
    return [x.strip() for x in data]


def _artifact_id(task: GenerationTask, model_id: str, raw: str) -> str:
    basis = "|".join(
        [task.kind, task.pipeline or "", task.query or "", task.doc_id or "", model_id, raw]
    )
    return hashlib.sha1(basis.encode("utf-8")).hexdigest()[:16]


def generate(task: GenerationTask, client: ChatClient, options: GenOptions | None = None) -> GenerationArtifact:
    options = options or GenOptions()
    task.validate()
    temperature = options.temperature
    warnings: list[str] = []
    retries = 0

    if task.kind == "qa":
        messages = render_prompt(task, options)
        raw = client.complete(messages, temperature=temperature)
        if END_DELIMITER in raw:
            answer = raw.split(END_DELIMITER, 1)[0].strip()
        else:
            answer = raw.strip()
            warnings.append("missing_end_delimiter")
        parsed: str | SlideDeck | PodcastScript = answer
        raw_all = raw

    elif task.kind == "summary":
        messages = render_prompt(task, options)

        def check_summary(text: str) -> str:
            if not text.strip():
                raise ValidationError("summary is empty", code="empty-summary")
            return text.strip()

        parsed, raws, retries = _call_with_retry(client, messages, check_summary, temperature)
        raw_all = "\n".join(raws)

    elif task.kind == "podcast":
        messages = render_prompt(task, options)
        parsed, raws, retries = _call_with_retry(
            client, messages, lambda r: parse_podcast(r, options.speakers), temperature
        )
        raw_all = "\n".join(raws)

    elif task.kind == "slides" and not options.slides_two_pass:
        messages = render_prompt(task, options)
        parsed, raws, retries = _call_with_retry(client, messages, parse_slides, temperature)
        raw_all = "\n".join(raws)

    else:  # slides, iterative two-pass
        system = _fill(_load_template("system", options.template_dir), {"role": options.role})
        context = _context_block(task.context)
        doc_title = task.doc_title or task.doc_id or ""
        outline_user = _fill(
            _load_template("slides_outline", options.template_dir),
            {"context": context, "doc_title": doc_title, "n_slides": str(options.min_slides)},
        )
        titles, raws, outline_retries = _call_with_retry(
            client,
            _messages(system, outline_user),
            lambda r: _parse_string_array(r, options.min_slides, 20, "outline"),
            temperature,
        )
        retries += outline_retries
        seen: list[str] = []
        for t in titles:
            if t not in seen:
                seen.append(t)
        titles = seen
        slides = []
        for title in titles:
            bullets_user = _fill(
                _load_template("slides_bullets", options.template_dir),
                {"context": context, "title": title},
            )
            bullets, raw_b, bullet_retries = _call_with_retry(
                client,
                _messages(system, bullets_user),
                lambda r: _parse_string_array(r, 1, 6, "bullets"),
                temperature,
            )
            retries += bullet_retries
            raws.extend(raw_b)
            slides.append({"title": title, "bullets": bullets})
        parsed = parse_slides(json.dumps({"slides": slides}))
        raw_all = "\n".join(raws)

    return GenerationArtifact(
        artifact_id=_artifact_id(task, client.model_id, raw_all),
        task=task,
        raw_completion=raw_all,
        parsed=parsed,
        grounding=[c.chunk_id for c in task.context],
        model_id=client.model_id,
        retries=retries,
        warnings=warnings,
    )
