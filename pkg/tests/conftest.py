import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from resforge.core import Structure

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")


def random_structure(rng, cells=None, lo=1.0, hi=2.0, L=1.0, symmetric=False):
    k = int(rng.integers(1, 9)) if cells is None else cells
    w = rng.uniform(0.3, 1.0, k)
    if symmetric:
        w = w + w[::-1]
    edges = np.concatenate([[0.0], np.cumsum(w) / np.sum(w) * L])
    edges[-1] = L
    n = rng.uniform(lo, hi, k)
    if symmetric:
        n = 0.5 * (n + n[::-1])
        edges = 0.5 * (edges + (L - edges[::-1]))
        edges[0], edges[-1] = 0.0, L
    return Structure(edges, n)


@st.composite
def structures(draw, max_cells=8, lo=1.0, hi=2.0, L=1.0, symmetric=False):
    seed = draw(st.integers(0, 2**32 - 1))
    cells = draw(st.integers(1, max_cells))
    return random_structure(np.random.default_rng(seed), cells, lo, hi, L, symmetric)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def slab():
    return Structure.slab(2.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    # one PASS/FAIL line per acceptance criterion, aggregating its parts
    parts: dict[str, list[tuple[str, bool]]] = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when not in ("call", "setup"):
                continue
            if rep.when == "setup" and outcome == "passed":
                continue
            name = nodeid.split("::test_criterion_")[1]
            key = "".join(ch for ch in name.split("_")[0] if ch.isdigit())
            parts.setdefault(key, []).append((name, outcome == "passed"))
    if not parts:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(parts, key=int):
        failed = [n for n, ok in parts[key] if not ok]
        line = f"criterion {key}: {'FAIL' if failed else 'PASS'}"
        if failed:
            line += "  (failing: " + ", ".join(sorted(failed)) + ")"
        terminalreporter.write_line(line)
