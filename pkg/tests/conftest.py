"""Shared fixtures."""

from pathlib import Path

import pytest

from dsge_automl.core.grammar import Grammar, load_grammar, parse_grammar
from dsge_automl.io.component_loader import load_registry
from dsge_automl.ml.dataset import Dataset, make_blobs, save_csv

REPO_ROOT = Path(__file__).resolve().parent.parent

TOY_GRAMMAR = """
<s> ::= <a> <b> | <b>
<a> ::= x | y
<b> ::= 0 | 1
"""


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def shipped_grammar() -> Grammar:
    return load_grammar(REPO_ROOT / "grammars" / "pipeline.bnf")


@pytest.fixture(scope="session")
def registry():
    return load_registry(str(REPO_ROOT / "component_library"))


@pytest.fixture
def toy_grammar() -> Grammar:
    return parse_grammar(TOY_GRAMMAR)


@pytest.fixture(scope="session")
def blobs() -> Dataset:
    return make_blobs(n_instances=200, seed=0)


@pytest.fixture
def blobs_csv(tmp_path: Path, blobs: Dataset) -> Path:
    path = tmp_path / "blobs.csv"
    save_csv(blobs, path, label_column="class")
    return path
