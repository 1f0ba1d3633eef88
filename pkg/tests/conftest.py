import os

import pytest

from citecast import ingest_edge_list

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo acceptance verdict lines after the run, outside capture."""
    from helpers import ACCEPTANCE_VERDICTS

    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def paper_csv():
    return os.path.join(DATA_DIR, "fixture_papers.csv")


@pytest.fixture(scope="session")
def edge_csv():
    return os.path.join(DATA_DIR, "fixture_edges.csv")


@pytest.fixture(scope="session")
def fixture_corpus(paper_csv, edge_csv):
    return ingest_edge_list(paper_csv, edge_csv, span=(2000, 2014))
