import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbcovers.errors import CertificationError
from nbcovers.posets import (UpperSet, cone_sum, inversion_check, local_minimal,
                             minimal_elements, mobius_coefficients)


def sum_above(t, dim=2):
    """{k : k_1 + ... + k_dim > t} with its limit oracle."""
    contains = lambda p: np.asarray(p).sum(axis=-1) > t
    limit = lambda q, dirs: True       # pushing any coordinate to infinity enters
    return UpperSet(dim, contains, limit, vectorized=True)


def test_sum_above_thousand():
    mins = minimal_elements(sum_above(1000), max_cap=2048)
    assert len(mins) == 1000
    assert mins[0] == (1, 1000) and mins[-1] == (1000, 1)


def test_single_coordinate_set():
    # {k : k_1 >= 3}: increasing k_2 never helps
    u = UpperSet(2, lambda p: p[0] >= 3, lambda q, dirs: 0 in dirs)
    assert minimal_elements(u) == [(3, 1)]
    assert local_minimal(u, (3, 1)) and not local_minimal(u, (3, 2))


def test_caps_path():
    u = UpperSet(2, lambda p: p[0] + 2 * p[1] >= 7, caps=(5, 3))
    assert minimal_elements(u) == [(1, 3), (3, 2), (5, 1)]


def test_non_monotone_oracle_detected():
    u = UpperSet(2, lambda p: p[0] == 2, lambda q, dirs: False)
    with pytest.raises(CertificationError):
        minimal_elements(u)


def test_uncertifiable_raises():
    u = UpperSet(1, lambda p: p[0] > 10 ** 6, lambda q, dirs: True)
    with pytest.raises(CertificationError):
        minimal_elements(u, max_cap=64)


def test_mobius_small_cases():
    assert mobius_coefficients([(2, 3)]) == {(2, 3): 1}
    assert mobius_coefficients([(1, 3), (2, 1)]) == {(1, 3): 1, (2, 1): 1, (2, 3): -1}
    assert mobius_coefficients([(1, 1), (2, 2)]) == {(1, 1): 1}
    assert mobius_coefficients([]) == {}


def test_inversion_finite_support():
    f = {(3, 4): 2.5, (1, 1): -1.0, (5, 2): 4.0}
    mins = [(2, 3), (4, 1)]
    total = sum(v for q, v in f.items() if any(all(a >= b for a, b in zip(q, p)) for p in mins))
    assert inversion_check(f, mins, cone=lambda p: cone_sum(f, p), total=total) < 1e-12


def test_inversion_geometric():
    # f(k) = 2^-(k1 + k2): the cone sum at p is prod 2^(1 - p_i)
    cone = lambda p: np.prod([2.0 ** (1 - x) for x in p])
    mins = [(1, 4), (2, 2), (5, 1)]
    # total over the union from a large truncation
    big = inversion_check(lambda a, b: 0.5 ** (a + b), mins, extent=60)
    assert big < 1e-12
    mu = mobius_coefficients(mins)
    via_closed = sum(c * cone(p) for p, c in mu.items())
    xs = np.arange(1, 61)
    a, b = np.meshgrid(xs, xs, indexing="ij")
    inside = np.zeros(a.shape, bool)
    for p in mins:
        inside |= (a >= p[0]) & (b >= p[1])
    assert abs(via_closed - (0.5 ** (a + b))[inside].sum()) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6)),
                min_size=1, max_size=5))
def test_mobius_reproduces_indicator(mins):
    mu = mobius_coefficients(mins)
    for x in np.ndindex(7, 7, 7):
        x = tuple(i + 1 for i in x)
        ind = any(all(a >= b for a, b in zip(x, p)) for p in mins)
        s = sum(c for p, c in mu.items() if all(a >= b for a, b in zip(x, p)))
        assert s == int(ind)
