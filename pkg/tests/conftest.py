import numpy as np
import pytest

from nbcovers.graph import bouquet, build_graph, complete_graph


def cycle(n):
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n):
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


@pytest.fixture
def w2():
    return bouquet(2)


@pytest.fixture
def h3():
    return bouquet(0, half=3)


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def irregular():
    # triangle plus a doubled edge and a loop: degrees 5, 3, 2
    return build_graph(3, [(0, 1), (1, 2), (2, 0), (0, 1), (0, 0)])
