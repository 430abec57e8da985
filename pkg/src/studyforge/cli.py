"""Command-line surface mirroring the HTTP API.

Each subcommand prints the same JSON payload its API counterpart returns
(byte-identical: same serializer settings as the service), exits 0 on
success, and on failure writes ``{"code", "message"}`` to stderr and exits
nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config
from .engine import Engine
from .errors import StudyforgeError


def canonical_json(payload) -> str:
    """Match FastAPI's JSONResponse byte-for-byte."""
    return json.dumps(payload, ensure_ascii=False, allow_nan=False, separators=(",", ":"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="studyforge")
    parser.add_argument("--config", help="path to config JSON", default=None)
    parser.add_argument("--data-dir", help="override data directory", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, clean and chunk the corpus")
    p.add_argument("--manifest", default=None)

    p = sub.add_parser("index", help="build retrieval indexes")
    p.add_argument("--pipeline", required=True, choices=["advanced", "graph"])

    p = sub.add_parser("query", help="retrieve and answer")
    p.add_argument("--pipeline", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--model", default=None)

    p = sub.add_parser("generate", help="produce an output artifact")
    p.add_argument("--kind", required=True, choices=["qa", "summary", "slides", "podcast"])
    p.add_argument("--doc-id", default=None)
    p.add_argument("--q", default=None)
    p.add_argument("--pipeline", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("evaluate", help="record or run evaluations")
    ev = p.add_subparsers(dest="eval_command", required=True)
    q = ev.add_parser("pair", help="create a blinded pair")
    q.add_argument("--artifacts", required=True, help="two artifact ids, comma separated")
    q.add_argument("--seed", type=int, default=None)
    q = ev.add_parser("vote", help="record a blinded pairwise vote")
    q.add_argument("--pair-id", required=True)
    q.add_argument("--winner", required=True, choices=["A", "B", "TIE"])
    q.add_argument("--rater-id", required=True)
    q = ev.add_parser("graded", help="record a graded rubric evaluation")
    q.add_argument("--artifact-id", required=True)
    q.add_argument("--rater-id", required=True)
    q.add_argument("--scores", required=True, help="JSON object of category scores")
    q = ev.add_parser("judge", help="run an LLM judge")
    q.add_argument("--judge-model", required=True)
    q.add_argument("--artifact-id", default=None)
    q.add_argument("--pair-id", default=None)

    sub.add_parser("report", help="aggregate evaluation records")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", default=None)

    return parser


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.data_dir:
            config.data_dir = args.data_dir
        if args.command == "serve":
            from .service import create_app
            import uvicorn

            if args.bind:
                config.bind_addr = args.bind
            host, _, port = config.bind_addr.partition(":")
            uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port or 8750))
            return 0

        engine = Engine(config)
        payload = _dispatch(engine, args)
        stdout.write(canonical_json(payload) + "\n")
        return 0
    except StudyforgeError as exc:
        sys.stderr.write(canonical_json({"code": exc.code, "message": str(exc)}) + "\n")
        return 1


def _dispatch(engine: Engine, args):
    if args.command == "ingest":
        return engine.ingest(args.manifest)
    if args.command == "index":
        return engine.build_index(args.pipeline)
    if args.command == "query":
        return engine.query(args.q, args.pipeline, k=args.k, model_id=args.model)
    if args.command == "generate":
        return engine.generate_output(
            kind=args.kind,
            doc_id=args.doc_id,
            query=args.q,
            pipeline=args.pipeline,
            model_id=args.model,
            k=args.k,
        )
    if args.command == "evaluate":
        if args.eval_command == "pair":
            ids = [x.strip() for x in args.artifacts.split(",") if x.strip()]
            return engine.make_pair(ids, seed=args.seed)
        if args.eval_command == "vote":
            return engine.submit_pair_vote(args.pair_id, args.winner, args.rater_id)
        if args.eval_command == "graded":
            return engine.submit_graded(args.artifact_id, args.rater_id, json.loads(args.scores))
        if args.eval_command == "judge":
            return engine.judge(args.judge_model, artifact_id=args.artifact_id, pair_id=args.pair_id)
    if args.command == "report":
        return engine.report()
    raise AssertionError(f"unhandled command {args.command}")


def main() -> None:  # console entry point
    sys.exit(run())
