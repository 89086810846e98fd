import json
from pathlib import Path

import pytest

from ccsum.cli import bundled_corpus_dir
from ccsum.embedding import ProviderConfig, embedding_fn
from ccsum.pipeline import Corpus

TESTS = Path(__file__).parent
GOLDEN = TESTS / "golden"
DATA = TESTS / "data"


@pytest.fixture(scope="session")
def corpus() -> Corpus:
    return Corpus.from_dir(bundled_corpus_dir())


@pytest.fixture(scope="session")
def embed():
    return embedding_fn(ProviderConfig())


@pytest.fixture(scope="session")
def expected_citances() -> dict:
    return json.loads((DATA / "expected_citances.json").read_text("utf-8"))


def golden_text(name: str) -> str:
    return (GOLDEN / name).read_text("utf-8")
