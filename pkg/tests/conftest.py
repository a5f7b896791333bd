import numpy as np
import pytest

from crstokes.mesh import build_uniform
from crstokes.problems import stream_solution


@pytest.fixture(scope="session")
def meshes():
    cache = {}

    def get(level):
        if level not in cache:
            cache[level] = build_uniform(level)
        return cache[level]

    return get


@pytest.fixture(scope="session")
def sol():
    return stream_solution()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")
    config.acceptance_lines = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(lines):
            for line in lines[n]:
                terminalreporter.write_line(line)
