"""Application configuration: one JSON file plus environment overrides.

Environment variables: SF_DATA_DIR, SF_BIND_ADDR, SF_LLM_ENDPOINT,
SF_LLM_API_KEY, SF_EMBED_ENDPOINT, SF_EMBED_API_KEY.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError


@dataclass
class ModelConfig:
    model_id: str
    kind: str = "mock"  # mock | fixture | http
    endpoint: str | None = None
    api_key: str | None = None
    fixture_path: str | None = None


@dataclass
class EmbeddingConfig:
    kind: str = "hash"  # hash | http
    dim: int = 256
    endpoint: str | None = None
    model: str = "minilm"
    api_key: str | None = None


@dataclass
class AppConfig:
    data_dir: str = "data"
    corpus_manifest: str = "corpus.json"
    graph_path: str = "graph.json"
    max_chunk_chars: int = 1000
    overlap_chars: int = 150
    k1: float = 1.5
    b: float = 0.75
    alpha: float = 0.5
    boost_factor: float = 1.5
    hard_filter: bool = False
    gamma: float = 1.0
    seed: int = 0
    top_communities: int = 2
    top_entities: int = 5
    context_chunks: int = 6
    slides_two_pass: bool = True
    bind_addr: str = "127.0.0.1:8750"
    max_inflight_generations: int = 4
    embed_parallelism: int = 4
    default_model: str = "mock-gpt"
    generator_models: list[ModelConfig] = field(
        default_factory=lambda: [
            ModelConfig("mock-gpt"),
            ModelConfig("mock-llama"),
        ]
    )
    judge_models: list[ModelConfig] = field(
        default_factory=lambda: [
            ModelConfig("mock-claude-judge"),
            ModelConfig("mock-deepseek-judge"),
        ]
    )
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    ui_dir: str | None = None

    def validate(self) -> None:
        checks = [
            (0 < self.overlap_chars < self.max_chunk_chars, "0 < overlap_chars < max_chunk_chars"),
            (self.k1 > 0, "k1 > 0"),
            (0 <= self.b <= 1, "0 <= b <= 1"),
            (0 <= self.alpha <= 1, "0 <= alpha <= 1"),
            (self.boost_factor > 0, "boost_factor > 0"),
            (self.gamma > 0, "gamma > 0"),
            (self.top_communities >= 1, "top_communities >= 1"),
            (self.top_entities >= 1, "top_entities >= 1"),
            (self.context_chunks >= 1, "context_chunks >= 1"),
            (self.max_inflight_generations >= 1, "max_inflight_generations >= 1"),
            (self.embedding.dim >= 1, "embedding dim >= 1"),
        ]
        for ok, what in checks:
            if not ok:
                raise ConfigError(f"config violates {what}")
        ids = [m.model_id for m in self.generator_models + self.judge_models]
        if len(ids) != len(set(ids)):
            raise ConfigError("duplicate model ids in config")

    def model(self, model_id: str) -> ModelConfig:
        for m in self.generator_models + self.judge_models:
            if m.model_id == model_id:
                return m
        raise ConfigError(f"unknown model id: {model_id}", code="unknown_model")


def _apply_env(config: AppConfig) -> None:
    if addr := os.environ.get("SF_BIND_ADDR"):
        config.bind_addr = addr
    if data_dir := os.environ.get("SF_DATA_DIR"):
        config.data_dir = data_dir
    if endpoint := os.environ.get("SF_LLM_ENDPOINT"):
        for m in config.generator_models + config.judge_models:
            if m.kind == "http":
                m.endpoint = endpoint
    if key := os.environ.get("SF_LLM_API_KEY"):
        for m in config.generator_models + config.judge_models:
            if m.kind == "http":
                m.api_key = key
    if endpoint := os.environ.get("SF_EMBED_ENDPOINT"):
        config.embedding.endpoint = endpoint
    if key := os.environ.get("SF_EMBED_API_KEY"):
        config.embedding.api_key = key


def load_config(path: str | Path | None = None) -> AppConfig:
    config = AppConfig()
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        for key, value in raw.items():
            if key == "generator_models":
                config.generator_models = [ModelConfig(**m) for m in value]
            elif key == "judge_models":
                config.judge_models = [ModelConfig(**m) for m in value]
            elif key == "embedding":
                config.embedding = EmbeddingConfig(**value)
            elif hasattr(config, key):
                setattr(config, key, value)
            else:
                raise ConfigError(f"unknown config key: {key}")
    _apply_env(config)
    config.validate()
    return config
