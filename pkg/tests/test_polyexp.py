import random
from fractions import Fraction

import numpy as np
import pytest

from nbcovers.polyexp import (Polyexponential, annihilation_check, convolve, direct_convolution,
                              fit_polyexponential, ramanujan_decompose, shift_apply,
                              shift_power, weighted_convolve, weighted_example_value,
                              weighted_table)


def test_evaluation_and_arith():
    f = Polyexponential({3: (1,), 2: (0, 1)})      # 3^k + k 2^k
    assert f(0) == 1 and f(3) == 27 + 24
    g = f + Polyexponential.exponential(3, -1)
    assert g.bases == [2] and g(2) == 8
    assert f.scale(2)(1) == 2 * f(1)
    with pytest.raises(ValueError):
        Polyexponential({0: (1,)})


def test_fit_recovers():
    f = Polyexponential({2: (1, 3), Fraction(1, 2): (5,)})
    assert fit_polyexponential(f, [2, Fraction(1, 2)], 1) == f
    with pytest.raises(ValueError):
        fit_polyexponential(lambda k: Fraction(k) ** 5, [1], 1)


@pytest.mark.parametrize("a, b", [({3: (1,)}, {2: (1,)}), ({3: (1,)}, {3: (1,)}),
                                  ({2: (0, 1)}, {-1: (2,), 5: (1,)})])
def test_convolution_closed_form(a, b):
    g1, g2 = Polyexponential(a), Polyexponential(b)
    h = convolve(g1, g2)
    for k in range(25):
        assert h(k) == direct_convolution(g1, g2, k)


def test_weighted_example():
    for d in (3, 4, 6):
        x = d - 1
        g = Polyexponential.exponential(x)
        table = weighted_table([g, g], [1, 2], 60)
        for k in range(61):
            assert table[k] == weighted_example_value(d, k)
    assert weighted_example_value(4, 4) == 117


def test_weighted_convolve_mod_s():
    g = Polyexponential.exponential(3)
    res = weighted_convolve([g, g], [1, 2])
    assert res.closed.S == 2
    for k in range(res.closed.K, 61):
        assert res.closed(k) == res.table[k] == weighted_example_value(4, k)


def test_weighted_convolve_offsets_and_constant():
    g1 = Polyexponential({2: (1, 1)})
    g2 = Polyexponential.exponential(1)
    res = weighted_convolve([g1, g2], [2, 3], k0=[1, 0])
    for k in range(res.closed.K, 61):
        assert res.closed(k) == res.table[k]
    with pytest.raises(ValueError):
        weighted_convolve([g1], [0])


def test_shift_examples():
    f = lambda k: Fraction(3) ** k
    assert all(shift_apply([-3, 1], f)(k) == 0 for k in range(10))
    assert annihilation_check(2, 2, [0, 1])
    assert not annihilation_check(2, 1, [0, 1])
    assert shift_apply([0, 1], f)(4) == f(5)
    assert shift_power(1, 2) == [1, -2, 1]


def test_annihilation_random():
    rng = random.Random(7)
    for _ in range(20):
        D = rng.randint(1, 5)
        mu = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 2, 3]))
        p = [Fraction(rng.randint(-5, 5)) for _ in range(D)]
        assert annihilation_check(mu, D, p, kmax=40)


def test_ramanujan_principal():
    ks = np.arange(0, 40)
    noise = np.random.default_rng(0).standard_normal(len(ks))
    f = 3.0 ** ks + noise * 1.5 ** ks
    fit = ramanujan_decompose(f, [3.0, 1.5, 1.0], threshold=np.sqrt(3))
    assert fit.principal.bases == [3.0]
    assert abs(float(dict(fit.principal.terms)[3.0][0]) - 1) < 1e-6
    assert abs(fit.residual_growth - 1.5) < 0.3


def test_ramanujan_pure_error():
    ks = np.arange(0, 30)
    f = 1.2 ** ks
    assert ramanujan_decompose(f, [3.0, 1.2], threshold=2.0).principal.terms == ()


def test_ramanujan_on_weighted_example():
    d = 4
    f = [float(weighted_example_value(d, k)) for k in range(30)]
    r3 = np.sqrt(3.0)
    fit = ramanujan_decompose(f, [3.0, r3, -r3], threshold=r3)
    # principal part (d - 1)^(k + 1) / (d - 2)
    assert abs(float(dict(fit.principal.terms)[3.0][0]) - 1.5) < 1e-6
