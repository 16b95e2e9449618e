from fractions import Fraction

import numpy as np
import pytest

from conftest import cycle
from nbcovers.bgraphs import (BGraph, LiftPlan, automorphism_count, bgraph_of_cover,
                              count_injections, count_injections_into_cover, identity_bgraph,
                              isomorphic, monte_carlo_occurrence, occurrence_expectation)
from nbcovers.covers import random_cover
from nbcovers.graph import Graph, bouquet, build_graph, complete_graph, disjoint_union


def loop_cycle(n, base):
    """n-cycle with every edge over directed base edge 0."""
    g = cycle(n)
    emap = np.array([0, int(base.inv[0])] * n)
    return BGraph(g, base, np.zeros(n, int), emap)


def test_aut_identity_is_one(k4):
    assert automorphism_count(identity_bgraph(k4)) == 1


def test_aut_symmetric_double_edge(w2):
    g = build_graph(2, [(0, 1), (1, 0)])
    psi = BGraph(g, w2, [0, 0], [0, 1, 0, 1])
    assert automorphism_count(psi) == 2


@pytest.mark.parametrize("n", [2, 3, 5])
def test_aut_cycles(n):
    assert automorphism_count(loop_cycle(n, bouquet(0, half=1))) == 2 * n
    assert automorphism_count(loop_cycle(n, bouquet(1))) == n


def test_injections_into_two_copies(w2):
    tri = loop_cycle(3, w2)
    two = BGraph(disjoint_union([tri.graph, tri.graph]), w2, np.zeros(6, int),
                 np.concatenate([tri.edge_map, tri.edge_map]))
    assert count_injections(tri, two) == 2 * automorphism_count(tri)
    assert not isomorphic(tri, two)
    assert isomorphic(tri, tri)


def test_lift_plan_matches_backtracking(w2):
    fig8 = identity_bgraph(w2)
    tri = loop_cycle(3, w2)
    for s in range(4):
        c = random_cover(w2, 6, seed=s)
        target = bgraph_of_cover(c)
        for psi in (fig8, tri):
            assert count_injections_into_cover(psi, c) == count_injections(psi, target)
            assert LiftPlan(psi).count(c.assignment.sigma)[0] == count_injections(psi, target)


def test_occurrence_closed_forms(w2):
    empty = BGraph(Graph(0, [], [], []), w2, [], [])
    assert occurrence_expectation(empty, 7) == 1
    assert occurrence_expectation(identity_bgraph(w2), 10) == Fraction(1, 10)
    # one edge between distinct vertices over a loop: n (n - 1) / n
    edge = BGraph(build_graph(2, [(0, 1)]), w2, [0, 0], [0, 1])
    assert occurrence_expectation(edge, 9) == 8
    # one edge over an edge with distinct endpoints: n * n / n
    k2 = build_graph(2, [(0, 1)])
    assert occurrence_expectation(BGraph(k2, k2, [0, 1], [0, 1]), 9) == 9


def test_occurrence_non_etale_zero(w2):
    p = build_graph(2, [(0, 1), (0, 1)])
    psi = BGraph(p, w2, [0, 0], [0, 1, 0, 1])
    assert occurrence_expectation(psi, 5) == 0
    assert monte_carlo_occurrence(psi, 5, 10, seed=0) == (0.0, 0.0)


def test_occurrence_monte_carlo(w2):
    tri = loop_cycle(3, w2)
    n = 12
    mean, se = monte_carlo_occurrence(tri, n, 4000, seed=1)
    assert abs(mean - float(occurrence_expectation(tri, n))) < 4 * se


def test_half_loop_occurrence_monte_carlo():
    base = bouquet(1, half=1)
    path = build_graph(2, [(0, 1)], half_loops=[0])
    psi = BGraph(path, base, [0, 0], [0, 1, 2])
    assert occurrence_expectation(psi, 6) == 0          # even n: no fixed points
    assert occurrence_expectation(psi, 7) == Fraction(6, 7)
    for n in (6, 7):
        mean, se = monte_carlo_occurrence(psi, n, 4000, seed=2)
        assert abs(mean - float(occurrence_expectation(psi, n))) < 4 * se + 1e-12


def test_monte_carlo_rejects_zero_trials(w2):
    with pytest.raises(ValueError):
        monte_carlo_occurrence(identity_bgraph(w2), 5, 0, seed=0)
