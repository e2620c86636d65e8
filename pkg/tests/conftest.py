import contextlib
import time

import pytest

from nervepool.complex import SimplicialComplex
from nervepool.pooling import VertexAssignment

HOUSE_MAXIMAL = [["v1", "v2", "v3"], ["v0", "v1"], ["v2", "v3"], ["v3", "v4"], ["v1", "v3"], ["v0", "v4"]]

# conventional edge names for the example complex
HOUSE_EDGES = {
    "e0": ("v0", "v1"),
    "e1": ("v1", "v2"),
    "e2": ("v2", "v3"),
    "e3": ("v3", "v4"),
    "e4": ("v1", "v3"),
    "e5": ("v0", "v4"),
}
HOUSE_FACE = ("v1", "v2", "v3")

_ACCEPTANCE: list[str] = []


@pytest.fixture
def house() -> SimplicialComplex:
    return SimplicialComplex.from_maximal_simplices(HOUSE_MAXIMAL)


@pytest.fixture
def house_partition() -> VertexAssignment:
    return VertexAssignment.from_labels({"v0": "U1", "v4": "U1", "v1": "U2", "v2": "U2", "v3": "U2"})


@pytest.fixture
def criterion():
    """Context manager that logs one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        start = time.perf_counter()
        details: list[str] = []
        try:
            yield details
        except BaseException:
            _ACCEPTANCE.append(_line("FAIL", number, title, start, details))
            raise
        _ACCEPTANCE.append(_line("PASS", number, title, start, details))

    return record


def _line(status, number, title, start, details):
    extra = f" ({'; '.join(details)})" if details else ""
    return f"[{status}] criterion {number:>2}: {title} [{time.perf_counter() - start:.2f}s]{extra}"


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
