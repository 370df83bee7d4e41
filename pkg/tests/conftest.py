import sys
from pathlib import Path

import pytest
from hypothesis import settings

from cpcf.surface import SourceText, parse_term

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
PROGRAMS = sorted(p.stem for p in CORPUS.glob("*.cpcf"))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


def load(name: str):
    return parse_term(SourceText.from_file(CORPUS / f"{name}.cpcf"))


def expectations(name: str) -> dict:
    out = {}
    for line in (CORPUS / f"{name}.expect").read_text().splitlines():
        if line.strip():
            k, v = line.split("=", 1)
            out[k] = v
    return out


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


# One line per acceptance criterion, repeated in the terminal summary so the
# verdicts are visible without -s.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
