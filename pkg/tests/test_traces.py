from fractions import Fraction
from math import prod

import numpy as np
import pytest

from conftest import cycle
from nbcovers.covers import Cover, PermutationAssignment, random_cover, sample_sigma
from nbcovers.graph import bouquet, build_graph, complete_graph, enumerate_snbc_walks
from nbcovers.traces import (TracePlan, WalkClassStats, certified_trace, expansion_series,
                             expected_hashimoto_trace_exact, hashimoto_trace, normalized_exact,
                             pattern_frequency_mc, patterns_for_walk, rotation_classes,
                             snbc_walks, walk_class_probability_exact, walk_class_stats)


def test_trace_oracles(w2):
    assert hashimoto_trace(w2, 1) == 4
    assert hashimoto_trace(w2, 6) == 732
    assert hashimoto_trace(cycle(5), 5) == 10
    with pytest.raises(ValueError):
        hashimoto_trace(w2, 0)


def test_trace_plan_matches_dense(w2, k4, h3):
    for base in (w2, k4, h3):
        sig = np.stack([sample_sigma(base, 9, seed=1, trial=t) for t in range(6)])
        for k in (1, 3, 5):
            got = TracePlan(base, k).traces(sig)
            want = [hashimoto_trace(Cover(PermutationAssignment(base, 9, s)).graph, k) for s in sig]
            assert list(got) == want


def test_rotation_classes(w2):
    classes = rotation_classes(snbc_walks(w2, 4))
    assert sum(m for _, m in classes) == hashimoto_trace(w2, 4)


def test_certified_trace_tangle_free_equals_trace(w2):
    n = 60
    cyc = np.roll(np.arange(n), 1)
    cyc2 = np.roll(np.arange(n), 11)
    g = Cover(PermutationAssignment(w2, n, np.array([cyc, np.argsort(cyc), cyc2, np.argsort(cyc2)]))).graph
    for k in (4, 6):
        assert certified_trace(g, k, 2, w2) == hashimoto_trace(g, k)


def test_certified_trace_drops_tangles(w2):
    g = Cover(PermutationAssignment.identity(w2, 2)).graph
    assert certified_trace(g, 2, 2, w2) < hashimoto_trace(g, 2)
    # r = 1 keeps only walks around cycles: the 2 * 4 single loops at k = 1
    assert certified_trace(g, 1, 1, w2) == 8


def test_empty_stats():
    st = WalkClassStats({}, {})
    assert walk_class_probability_exact(st, 10) == 1
    assert expansion_series(st, 3).coeffs == (1, 0, 0)


def test_single_edge_stats():
    k2 = build_graph(2, [(0, 1)])
    st = walk_class_stats(k2, [0, 1], [0, 0])
    assert st.b == {0: 1, 1: 1} and st.a == {0: 1}
    assert walk_class_probability_exact(st, 13) == 13


def test_loop_probability_bounds(w2):
    # a loop of length k visiting k distinct cover vertices, all over edge 0
    for k in (3, 5):
        st = walk_class_stats(w2, [0] * k, list(range(k)))
        n = 30
        val = normalized_exact(st, n)
        lo = prod(Fraction(n - i, n) for i in range(k))
        assert min(lo, 1 / lo) <= val <= max(lo, 1 / lo)


def test_inconsistent_pattern_is_none(w2):
    # same vertex twice but the edge 0 would need two images
    assert walk_class_stats(w2, [0, 0, 0], [0, 1, 0]) is None


def test_patterns_exhaust_trace(w2):
    n = 7
    # summing all patterns gives the exact expected trace; ~ 4 at k = 1
    assert expected_hashimoto_trace_exact(w2, 1, n) == 4 + Fraction(0)
    total = Fraction(0)
    for rep, mult in rotation_classes(snbc_walks(w2, 3)):
        for p in patterns_for_walk(w2, rep):
            st = walk_class_stats(w2, rep, p)
            if st is not None:
                total += mult * walk_class_probability_exact(st, n)
    assert total == expected_hashimoto_trace_exact(w2, 3, n)


def test_exact_trace_against_monte_carlo(w2):
    n, k = 12, 4
    ex = float(expected_hashimoto_trace_exact(w2, k, n))
    sig = np.stack([sample_sigma(w2, n, seed=5, trial=t) for t in range(4000)])
    tr = TracePlan(w2, k).traces(sig).astype(float)
    assert abs(tr.mean() - ex) < 4 * tr.std(ddof=1) / np.sqrt(len(tr))


def test_first_series_coefficient():
    st = WalkClassStats({0: 4}, {})
    assert expansion_series(st, 2).coeffs[1] == -6       # -binom(4, 2)


def test_series_error_decay():
    st = WalkClassStats({0: 2}, {0: 3})      # normalised value n / (n - 2), not a polynomial in 1/n
    errs = []
    for n in (100, 200, 400):
        err = abs(float(expansion_series(st, 2).evaluate(n) - normalized_exact(st, n)))
        errs.append(err * n ** 2)
    assert max(errs) / min(errs) < 1.2


def test_half_loop_series_parity():
    st = WalkClassStats({0: 3}, {}, {0: (1, 1)})
    for n in (101, 201):
        s = expansion_series(st, 3, parity=1)
        assert abs(s.evaluate(n) - normalized_exact(st, n)) < 50 / n ** 3.5
    assert expansion_series(st, 3, parity=0).coeffs == (0, 0, 0)


def test_pattern_frequency_monte_carlo(w2):
    edges, pattern = [0, 2], [0, 0]
    st = walk_class_stats(w2, edges, pattern)
    mean, se = pattern_frequency_mc(w2, edges, pattern, 10, 20000, seed=3)
    assert abs(mean - float(walk_class_probability_exact(st, 10))) < 4 * se
