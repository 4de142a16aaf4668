import numpy as np
import pytest

from loadshape import synth


@pytest.fixture(scope="session")
def benchmark():
    """3 archetypes x 20 households x 22 days, seed 0."""
    return synth.benchmark_population(seed=0)


@pytest.fixture(scope="session")
def benchmark_values(benchmark):
    return np.vstack([c.values for c in benchmark.curves])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        ok, title, detail = module.RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}" + (f" ({detail})" if detail else ""))
