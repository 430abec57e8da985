"""On-disk persistence under a single data directory.

Layout: corpus/, indexes/, graph/, artifacts/, eval/, reports/. Every
write goes through write-temp-then-rename so a crash between any two
writes leaves each file individually parseable. Appends to the JSONL
stores rewrite the file atomically and are serialized by an in-process
lock; ingest and index builds additionally take an exclusive lockfile on
the data directory.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from contextlib import contextmanager
from pathlib import Path

from .errors import StudyforgeError

SUBDIRS = ("corpus", "indexes", "graph", "artifacts", "eval", "reports")


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class Store:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        for sub in SUBDIRS:
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._append_lock = threading.Lock()

    # -- paths ------------------------------------------------------------
    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    @contextmanager
    def write_lock(self, why: str = "write"):
        """Exclusive per-data-dir lockfile for ingest and index builds."""
        lock_path = self.root / ".write.lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StudyforgeError(
                f"data directory is locked by another {why} operation",
                code="locked",
            )
        try:
            os.write(fd, f"{os.getpid()} {why}\n".encode())
            os.close(fd)
            yield
        finally:
            lock_path.unlink(missing_ok=True)

    # -- generic JSON/JSONL -----------------------------------------------
    def write_json(self, rel: str, payload) -> None:
        atomic_write(self.path(rel), json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def read_json(self, rel: str):
        return json.loads(self.path(rel).read_text(encoding="utf-8"))

    def append_jsonl(self, rel: str, row: dict) -> None:
        with self._append_lock:
            rows = self.read_jsonl(rel)
            rows.append(row)
            atomic_write(self.path(rel), "".join(json.dumps(r) + "\n" for r in rows))

    def read_jsonl(self, rel: str) -> list[dict]:
        path = self.path(rel)
        if not path.exists():
            return []
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    # -- artifacts ----------------------------------------------------------
    def save_artifact(self, artifact_dict: dict) -> None:
        self.write_json(f"artifacts/{artifact_dict['artifact_id']}.json", artifact_dict)

    def load_artifact(self, artifact_id: str) -> dict | None:
        path = self.path(f"artifacts/{artifact_id}.json")
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def list_artifacts(self, kind: str | None = None) -> list[dict]:
        rows = []
        for path in sorted(self.path("artifacts").glob("*.json")):
            row = json.loads(path.read_text(encoding="utf-8"))
            if kind is None or row.get("kind") == kind:
                rows.append(row)
        return rows

    # -- jobs ---------------------------------------------------------------
    def record_job(self, kind: str, status: str, refs: dict | None = None) -> dict:
        job = {
            "job_id": uuid.uuid4().hex[:12],
            "kind": kind,
            "status": status,
            "refs": refs or {},
            "timestamp": time.time(),
        }
        self.append_jsonl("jobs.jsonl", job)
        return job
