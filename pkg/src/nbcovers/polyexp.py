"""Polyexponentials, (weighted) convolutions and the shift operator.

A polyexponential is f(k) = sum_l l^k p_l(k) over finitely many nonzero
bases l.  Everything here is exact (Fractions) except
``ramanujan_decompose``, which is a least-squares diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import comb, gcd
from typing import Callable, Mapping, Sequence

import numpy as np


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


@dataclass(frozen=True)
class Polyexponential:
    """terms: {base: (c_0, c_1, ...)} meaning sum base^k * sum_j c_j k^j."""
    terms: tuple

    def __init__(self, terms: Mapping | Sequence = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean = {}
        for base, coeffs in items:
            if base == 0:
                raise ValueError("zero base is not allowed")
            cs = [Fraction(c) if not isinstance(c, float) else c for c in coeffs]
            prev = clean.get(base, [])
            merged = [(prev[i] if i < len(prev) else 0) + (cs[i] if i < len(cs) else 0)
                      for i in range(max(len(prev), len(cs)))]
            clean[base] = merged
        pruned = []
        for base in sorted(clean, key=lambda b: (abs(b), b)):
            cs = list(clean[base])
            while cs and cs[-1] == 0:
                cs.pop()
            if cs:
                pruned.append((base, tuple(cs)))
        object.__setattr__(self, "terms", tuple(pruned))

    @classmethod
    def exponential(cls, base, coeff=1) -> "Polyexponential":
        return cls({base: (coeff,)})

    @property
    def bases(self):
        return [b for b, _ in self.terms]

    def degree(self, base=None) -> int:
        if base is None:
            return max((len(c) - 1 for _, c in self.terms), default=-1)
        return dict(self.terms).get(base, ()).__len__() - 1

    def __call__(self, k: int):
        total = 0
        for base, cs in self.terms:
            poly = sum(c * k ** j for j, c in enumerate(cs))
            total += (Fraction(base) ** k if not isinstance(base, float) else base ** k) * poly
        return total

    def __add__(self, other: "Polyexponential") -> "Polyexponential":
        return Polyexponential(list(self.terms) + list(other.terms))

    def scale(self, c) -> "Polyexponential":
        return Polyexponential([(b, [c * x for x in cs]) for b, cs in self.terms])

    def to_json(self) -> list:
        return [{"base": str(b), "coeffs": [str(c) for c in cs]} for b, cs in self.terms]


def _solve_exact(rows, rhs):
    """Solve a square rational system exactly."""
    import flint
    a = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator) for x in r] for r in rows])
    b = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator)] for x in rhs])
    x = a.solve(b)
    return [Fraction(int(x[i, 0].p), int(x[i, 0].q)) for i in range(x.nrows())]


def fit_polyexponential(values: Callable[[int], Fraction], bases, degree: int,
                        start: int = 0, check: int = 8) -> Polyexponential:
    """Exact polyexponential with the given bases and degree bound that
    interpolates ``values`` on start.. and is verified on ``check`` more points."""
    bases = [Fraction(b) for b in bases]
    cols = [(b, j) for b in bases for j in range(degree + 1)]
    ks = list(range(start, start + len(cols)))
    rows = [[b ** k * Fraction(k) ** j for b, j in cols] for k in ks]
    sol = _solve_exact(rows, [Fraction(values(k)) for k in ks])
    terms = {}
    for (b, j), c in zip(cols, sol):
        terms.setdefault(b, [Fraction(0)] * (degree + 1))[j] = c
    p = Polyexponential(terms)
    for k in range(start + len(cols), start + len(cols) + check):
        if p(k) != values(k):
            raise ValueError("values are not a polyexponential with these bases and degree")
    return p


def direct_convolution(f, g, k: int):
    return sum(f(i) * g(k - i) for i in range(k + 1))


def convolve(g1: Polyexponential, g2: Polyexponential) -> Polyexponential:
    """(g1 * g2)(k) = sum_{i=0..k} g1(i) g2(k-i), in closed form."""
    bases = sorted(set(g1.bases) | set(g2.bases))
    if not bases:
        return Polyexponential()
    degree = max(g1.degree(), 0) + max(g2.degree(), 0) + 1
    memo = {}

    def vals(k):
        if k not in memo:
            memo[k] = direct_convolution(g1, g2, k)
        return memo[k]

    return fit_polyexponential(vals, bases, degree)


@dataclass
class ModSPolyexponential:
    """g(k) = polys[i]((k - i)/S) for k >= K, k = i (mod S)."""
    S: int
    polys: list
    K: int

    def __call__(self, k: int):
        if k < self.K:
            raise ValueError(f"closed form valid only for k >= {self.K}")
        i = k % self.S
        return self.polys[i]((k - i) // self.S)

    def to_json(self) -> dict:
        return {"S": self.S, "K": self.K, "residues": [p.to_json() for p in self.polys]}


def weighted_table(gs: Sequence[Callable], m: Sequence[int], kmax: int,
                   k0: Sequence[int] | None = None) -> list:
    """h(k) = sum over m.kvec = k, kvec >= k0 of prod g_i(k_i), for k <= kmax."""
    k0 = [0] * len(gs) if k0 is None else list(k0)
    h = [Fraction(0)] * (kmax + 1)
    h[0] = Fraction(1)
    for g, mi, ki in zip(gs, m, k0):
        new = [Fraction(0)] * (kmax + 1)
        for kk in range(ki, kmax // mi + 1):
            w = g(kk)
            if w == 0:
                continue
            step = mi * kk
            for j in range(0, kmax + 1 - step):
                if h[j]:
                    new[j + step] += h[j] * w
        h = new
    return h


@dataclass
class WeightedConvolution:
    table: list
    closed: ModSPolyexponential | None


def weighted_convolve(gs: Sequence[Polyexponential], m: Sequence[int],
                      k0: Sequence[int] | None = None, table_max: int = 60) -> WeightedConvolution:
    """Weighted convolution with weights m, as a direct table and a mod-S
    closed form, S = lcm(m), bases l^(S/m_i)."""
    if len(gs) != len(m) or not gs:
        raise ValueError("need one weight per function")
    if any(mi < 1 for mi in m):
        raise ValueError("weights must be positive")
    S = reduce(_lcm, m)
    bases = sorted({Fraction(b) ** (S // mi) for g, mi in zip(gs, m) for b in g.bases})
    degree = sum(max(g.degree(), 0) for g in gs) + len(gs)
    n_unknown = len(bases) * (degree + 1)
    q0 = 2 * len(gs) + max(k0 or [0])
    kmax = S * (q0 + n_unknown + 10) + S
    table = weighted_table(gs, m, max(kmax, table_max), k0)
    closed = None
    if bases:
        polys = []
        for i in range(S):
            vals = lambda q, i=i: table[S * q + i]
            polys.append(fit_polyexponential(vals, bases, degree, start=q0,
                                             check=(len(table) - 1 - i) // S - q0 - n_unknown + 1))
        K = S * q0
        while K > 0:
            i = (K - 1) % S
            if polys[i]((K - 1 - i) // S) != table[K - 1]:
                break
            K -= 1
        closed = ModSPolyexponential(S, polys, K)
    return WeightedConvolution(table[:table_max + 1], closed)


def weighted_example_value(d: int, k: int) -> Fraction:
    """Closed form of sum_{k1 + 2 k2 = k} (d-1)^(k1 + k2)."""
    x = d - 1
    if k % 2 == 0:
        return Fraction(x ** (k + 1) - x ** (k // 2), x - 1)
    return Fraction(x ** (k + 1) - x ** ((k + 1) // 2), x - 1)


# shift operator ----------------------------------------------------------------

def shift_apply(q: Sequence, f: Callable[[int], object]) -> Callable[[int], object]:
    """(Q(S) f)(k) = sum_i q_i f(k + i)."""
    q = list(q)
    return lambda k: sum(c * f(k + i) for i, c in enumerate(q) if c)


def shift_power(mu, D: int) -> list:
    """Coefficients of (S - mu)^D."""
    mu = Fraction(mu)
    return [comb(D, i) * (-mu) ** (D - i) for i in range(D + 1)]


def annihilation_check(mu, D: int, p: Sequence, kmax: int = 100) -> bool:
    """(S - mu)^D kills mu^k p(k) when deg p < D (checked exactly)."""
    mu = Fraction(mu)
    f = lambda k: mu ** k * sum(Fraction(c) * k ** j for j, c in enumerate(p))
    g = shift_apply(shift_power(mu, D), f)
    return all(g(k) == 0 for k in range(kmax + 1))


# diagnostics -----------------------------------------------------------------------

@dataclass
class RamanujanFit:
    principal: Polyexponential
    residual_growth: float      # estimated base of the residual's growth
    residual: np.ndarray


def ramanujan_decompose(samples: Sequence[float], bases: Sequence[float], threshold: float,
                        degree: int = 0, ridge: float = 1e-12, start: int = 0) -> RamanujanFit:
    """Least-squares principal part over bases with |l| > threshold.

    ``samples[i]`` is f(start + i).  Terms too small to be told apart from the
    residual at the largest k are dropped.  Diagnostic only.
    """
    f = np.asarray(samples, dtype=float)
    ks = np.arange(start, start + len(f), dtype=float)
    use = [b for b in bases if abs(b) > threshold]
    cols = [(b, j) for b in use for j in range(degree + 1)]
    if cols:
        X = np.stack([np.power(float(b), ks) * ks ** j for b, j in cols], axis=1)
        norms = np.linalg.norm(X, axis=0)
        Xn = X / norms
        coef = np.linalg.solve(Xn.T @ Xn + ridge * np.eye(len(cols)), Xn.T @ f) / norms
        resid = f - X @ coef
        big = np.abs(resid).max(initial=0.0)
        keep = {}
        for (b, j), c in zip(cols, coef):
            size = abs(c) * abs(b) ** ks[-1] * max(ks[-1], 1.0) ** j
            if size > 1e3 * big:
                keep.setdefault(float(b), [0.0] * (degree + 1))[j] = float(c)
        principal = Polyexponential({b: cs for b, cs in keep.items()})
    else:
        principal = Polyexponential()
    fitted = np.array([float(principal(int(k))) for k in ks]) if principal.terms else 0.0
    resid = f - fitted
    tail = np.abs(resid[len(resid) // 2:])
    kt = ks[len(resid) // 2:]
    ok = tail > 0
    if ok.sum() >= 2:
        slope = np.polyfit(kt[ok], np.log(tail[ok]), 1)[0]
        growth = float(np.exp(slope))
    else:
        growth = 0.0
    return RamanujanFit(principal, growth, resid)
