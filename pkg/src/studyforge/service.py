"""HTTP JSON API over the engine, plus static serving of the web UI."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .config import AppConfig
from .engine import Engine
from .errors import (
    ArgumentError,
    ConfigError,
    CorpusLoadError,
    GraphValidationError,
    MalformedOutputError,
    NotFoundError,
    PolicyError,
    StudyforgeError,
    TransportError,
    ValidationError,
)

_STATUS = [
    (NotFoundError, 404),
    (PolicyError, 409),
    (TransportError, 502),
    (MalformedOutputError, 502),
    (ArgumentError, 400),
    (ValidationError, 400),
    (CorpusLoadError, 400),
    (GraphValidationError, 400),
    (ConfigError, 400),
    (StudyforgeError, 400),
]


def _status_for(exc: StudyforgeError) -> int:
    for cls, status in _STATUS:
        if isinstance(exc, cls):
            return status
    return 400


def create_app(config: AppConfig, engine: Engine | None = None) -> FastAPI:
    app = FastAPI(title="studyforge", version="0.1.0")
    engine = engine or Engine(config)
    app.state.engine = engine

    @app.exception_handler(StudyforgeError)
    async def handle_domain_error(request: Request, exc: StudyforgeError):
        body = {"code": exc.code, "message": str(exc), "detail": exc.detail}
        return JSONResponse(status_code=_status_for(exc), content=body)

    @app.post("/ingest")
    def ingest(body: dict):
        return engine.ingest(body.get("manifest_path"))

    @app.post("/index")
    def index(body: dict):
        return engine.build_index(body.get("pipeline", ""))

    @app.post("/query")
    def query(body: dict):
        _require(body, "query", "pipeline")
        return engine.query(
            body["query"], body["pipeline"], k=int(body.get("k", 5)), model_id=body.get("model_id")
        )

    @app.post("/generate")
    def generate(body: dict):
        _require(body, "kind")
        return engine.generate_output(
            kind=body["kind"],
            doc_id=body.get("doc_id"),
            query=body.get("query"),
            pipeline=body.get("pipeline"),
            model_id=body.get("model_id"),
            k=int(body.get("k", 5)),
        )

    @app.get("/artifacts/{artifact_id}")
    def get_artifact(artifact_id: str):
        return engine.get_artifact(artifact_id)

    @app.get("/artifacts")
    def list_artifacts(kind: str | None = None):
        return engine.list_artifacts(kind)

    @app.get("/documents")
    def documents():
        return engine.list_docs()

    @app.get("/chunks/{chunk_id}")
    def chunk(chunk_id: str):
        return engine.get_chunk(chunk_id)

    @app.get("/models")
    def models():
        return {
            "generators": [m.model_id for m in config.generator_models],
            "judges": [m.model_id for m in config.judge_models],
            "rubric_categories": _rubric_categories(),
        }

    @app.post("/eval/pairs")
    def make_pair(body: dict):
        _require(body, "artifact_ids")
        return engine.make_pair(body["artifact_ids"], seed=body.get("seed"))

    @app.post("/eval/graded")
    def graded(body: dict):
        _require(body, "artifact_id", "rater_id", "scores")
        return engine.submit_graded(body["artifact_id"], body["rater_id"], body["scores"])

    @app.post("/eval/pair")
    def pair_vote(body: dict):
        _require(body, "pair_id", "winner", "rater_id")
        return engine.submit_pair_vote(body["pair_id"], body["winner"], body["rater_id"])

    @app.post("/eval/judge")
    def judge(body: dict):
        _require(body, "judge_model")
        return engine.judge(
            body["judge_model"], artifact_id=body.get("artifact_id"), pair_id=body.get("pair_id")
        )

    @app.get("/reports")
    def reports():
        return engine.report()

    ui_dir = config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _require(body: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in body or body[k] in (None, "")]
    if missing:
        raise ArgumentError(f"missing required fields: {', '.join(missing)}", code="missing_field")


def _rubric_categories() -> list[dict]:
    from .evaluation import DEFAULT_RUBRIC

    return [
        {"name": c, "descriptor": DEFAULT_RUBRIC.descriptors.get(c, "")}
        for c in DEFAULT_RUBRIC.categories
    ]


def main(config_path: str | None = None):  # pragma: no cover - thin wrapper
    import uvicorn

    from .config import load_config

    config = load_config(config_path)
    host, _, port = config.bind_addr.partition(":")
    uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port or 8750))
