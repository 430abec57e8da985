import shutil
from pathlib import Path

import pytest

from studyforge.config import AppConfig
from studyforge.engine import Engine

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def corpus_dir(tmp_path):
    dest = tmp_path / "corpus_src"
    shutil.copytree(FIXTURES / "corpus", dest)
    return dest


@pytest.fixture
def app_config(tmp_path, corpus_dir):
    return AppConfig(
        data_dir=str(tmp_path / "data"),
        corpus_manifest=str(corpus_dir / "corpus.json"),
        graph_path=str(corpus_dir / "graph.json"),
        max_chunk_chars=400,
        overlap_chars=80,
        seed=7,
    )


@pytest.fixture
def engine(app_config):
    return Engine(app_config)


@pytest.fixture
def ready_engine(engine):
    engine.ingest()
    engine.build_index("advanced")
    engine.build_index("graph")
    return engine
