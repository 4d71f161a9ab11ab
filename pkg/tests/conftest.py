import numpy as np
import pytest

from lorafp import harness, ingest, synthetic

_ACCEPTANCE = []


def record_criterion(name, outcome, detail=""):
    _ACCEPTANCE.append((name, outcome, detail))


@pytest.fixture(scope="session")
def small_dataset():
    return synthetic.make_dataset(1500, seed=11)


@pytest.fixture(scope="session")
def small_splits(small_dataset):
    m = ingest.split_dataset(small_dataset, seed=5)
    return harness.Splits.from_manifest(small_dataset, m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        line = f"{outcome:4s} {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
