"""Chat-model clients: one HTTP implementation and two deterministic mocks.

All clients satisfy the same contract: ``model_id`` plus
``complete(messages, temperature=0.0, max_tokens=None) -> str``. The HTTP
client speaks the common chat-completions JSON shape. The fixture mock
replays canned completions keyed by a hash of the rendered messages; the
scripted mock synthesizes format-valid completions from the prompt itself,
which keeps full end-to-end runs deterministic without fixture upkeep.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Protocol

import httpx

from .errors import TransportError

Message = dict[str, str]


class ChatClient(Protocol):
    model_id: str

    def complete(
        self, messages: list[Message], temperature: float = 0.0, max_tokens: int | None = None
    ) -> str: ...


def messages_key(messages: list[Message], temperature: float = 0.0) -> str:
    """Stable hash used to key fixture completions."""
    canon = json.dumps(
        {"messages": messages, "temperature": temperature},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class HttpChatClient:
    def __init__(
        self,
        endpoint: str,
        model_id: str,
        api_key: str | None = None,
        temperature: float = 0.0,
        max_tokens: int = 2048,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.temperature = temperature
        self.max_tokens = max_tokens
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(timeout=timeout, headers=headers)

    def complete(self, messages, temperature=None, max_tokens=None):
        payload = {
            "model": self.model_id,
            "messages": messages,
            "temperature": self.temperature if temperature is None else temperature,
            "max_tokens": max_tokens or self.max_tokens,
        }
        try:
            resp = self._client.post(self.endpoint, json=payload)
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except httpx.HTTPStatusError as exc:
            raise TransportError(
                f"chat service returned {exc.response.status_code}",
                detail=exc.response.text[:500],
            )
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"chat service failure: {exc}")


class FixtureChatClient:
    """Replays completions from a ``mock_llm.jsonl`` fixture.

    Each line maps ``messages_key(...)`` to a canned completion, so an
    identical prompt at temperature 0 always yields the identical reply.
    """

    def __init__(self, fixture_path: str | Path, model_id: str = "fixture-mock"):
        self.model_id = model_id
        self._completions: dict[str, str] = {}
        path = Path(fixture_path)
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        row = json.loads(line)
                        self._completions[row["key"]] = row["completion"]

    def complete(self, messages, temperature=0.0, max_tokens=None):
        key = messages_key(messages, temperature)
        if key not in self._completions:
            raise TransportError(f"no fixture completion for prompt key {key[:12]}…")
        return self._completions[key]


class ScriptedChatClient:
    """Returns queued completions in order; handy for retry-path tests."""

    def __init__(self, completions: list[str], model_id: str = "scripted-mock"):
        self.model_id = model_id
        self._queue = list(completions)
        self.calls: list[list[Message]] = []

    def complete(self, messages, temperature=0.0, max_tokens=None):
        self.calls.append(messages)
        if not self._queue:
            raise TransportError("scripted mock exhausted")
        return self._queue.pop(0)


def _digit(seed: str, lo: int, hi: int) -> int:
    """Deterministic integer in [lo, hi] derived from text."""
    h = int.from_bytes(hashlib.sha256(seed.encode("utf-8")).digest()[:4], "big")
    return lo + h % (hi - lo + 1)


class DeterministicChatClient:
    """Synthesizes a valid completion for every prompt family the package
    renders, derived only from the prompt text. Lets the whole pipeline run
    offline and byte-for-byte reproducibly."""

    def __init__(self, model_id: str = "mock-gen"):
        self.model_id = model_id

    def complete(self, messages, temperature=0.0, max_tokens=None):
        system = next((m["content"] for m in messages if m["role"] == "system"), "")
        user = "\n".join(m["content"] for m in messages if m["role"] == "user")
        text = system + "\n" + user
        salt = self.model_id + "\n" + user  # different mock models disagree

        if "WINNER:" in text:
            verdict = ["A", "B", "TIE"][_digit(salt, 0, 2)]
            return f"Considered both outputs carefully.\nWINNER: {verdict}"
        if "Category: score" in text or "one line per category" in text:
            cats = re.findall(r"^- ([A-Za-z]+):", user, flags=re.M)
            lines = [f"{c}: {_digit(salt + c, 2, 5)}" for c in cats]
            return "\n".join(lines)
        if "JSON array of slide titles" in text:
            topic = _topic(user)
            titles = [f"Overview of {topic}", f"Methods behind {topic}", f"Findings on {topic}", f"Why {topic} matters"]
            return json.dumps(titles)
        if "JSON array of bullet strings" in text:
            m = re.search(r'slide titled "([^"]+)"', user)
            title = m.group(1) if m else "the slide"
            return json.dumps([f"{title}: key point {i + 1}" for i in range(3)])
        if '"slides"' in text:
            topic = _topic(user)
            deck = {
                "slides": [
                    {"title": f"Overview of {topic}", "bullets": ["scope", "context"]},
                    {"title": f"Methods behind {topic}", "bullets": ["approach", "data"]},
                    {"title": f"Findings on {topic}", "bullets": ["result one", "result two"]},
                ]
            }
            return json.dumps(deck)
        if "HOST" in text and "EXPERT" in text:
            topic = _topic(user)
            turns = []
            for i in range(4):
                turns.append(f"HOST: Question {i + 1} about {topic}?")
                turns.append(f"EXPERT: Answer {i + 1} grounded in the paper on {topic}.")
            return "\n".join(turns)
        if "<END>" in text:
            cited = list(dict.fromkeys(re.findall(r"\[chunk ([^\]]+)\]", user)))
            cites = ", ".join(f"[chunk {c}]" for c in cited[:2]) or "the provided context"
            return f"Based on {cites}, the answer is grounded in the retrieved passages. <END>"
        if "Background" in text and "Implications" in text:
            topic = _topic(user)
            return (
                f"## Background\nThe document covers {topic}.\n\n"
                f"## Methods\nThe authors describe their approach to {topic}.\n\n"
                f"## Findings\nKey results are reported on {topic}.\n\n"
                f"## Implications\nThe work informs practice around {topic}.\n"
            )
        # Community summaries and anything else: echo the salient content.
        names = re.findall(r"^- ([^(]+)\(", user, flags=re.M)
        if names:
            return "This cluster connects " + ", ".join(n.strip() for n in names) + "."
        return f"Deterministic completion {_digit(text, 1000, 9999)}."


def _topic(user: str) -> str:
    m = re.search(r"[a-z]{4,}", user.lower())
    return m.group(0) if m else "the topic"
