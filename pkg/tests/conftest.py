import functools
import sys

import pytest

from shadowhull.formspace import Building
from shadowhull.grouprep import standard_rep
from shadowhull.shadowfar import shadow_geometry


@functools.lru_cache(maxsize=None)
def building(name):
    return Building.from_name(name)


@functools.lru_cache(maxsize=None)
def rep(name, j):
    return standard_rep(name, j)


@functools.lru_cache(maxsize=None)
def shadows(name, j):
    return shadow_geometry(building(name), j)


@pytest.fixture
def c3():
    return building("C3(2)")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
