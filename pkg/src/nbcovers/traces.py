"""Hashimoto traces, certified traces, and exact walk-class probabilities.

A potential walk is a closed walk in B together with a pattern saying
which of its visited vertices coincide in the cover.  The pattern
determines a B-graph; the expected number of lifts with that exact
pattern in a random degree-n cover is

    E_symm = prod_v n!/(n - b_v)! * prod_e (n - a_e)!/n!

with double factorials for half-loop base edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Sequence

import numpy as np

from .bgraphs import _falling, _half_loop_probability
from .covers import sample_sigma
from .errors import GraphError, ResourceLimitError
from .graph import DEFAULT_MAX_WALK_LENGTH, Graph, enumerate_snbc_walks, subgraph, walk_order
from .spectra import BAND, hashimoto_radius, matrix_power_traces


def hashimoto_trace(g: Graph, k: int) -> int:
    if k < 1:
        raise ValueError("k must be positive")
    return matrix_power_traces(g.hashimoto_matrix(), k)[-1]


# certified trace ------------------------------------------------------------

def certified_trace(g: Graph, k: int, r, base: Graph,
                    max_length: int = DEFAULT_MAX_WALK_LENGTH) -> int:
    """Count SNBC walks of length k whose graph has order < r and is not a
    B-tangle (rho(H) below sqrt(rho(H_B)) by more than the band)."""
    thr = np.sqrt(hashimoto_radius(base))
    r = Fraction(r)
    cache = {}
    inv = g.inv
    count = [0]

    def visit(w):
        key = frozenset(min(e, int(inv[e])) for e in w.edges)
        if key not in cache:
            if walk_order(g, w.edges) >= r:
                cache[key] = False
            else:
                sub = subgraph(g, sorted(key))
                cache[key] = hashimoto_radius(sub) < thr - BAND
        if cache[key]:
            count[0] += 1

    enumerate_snbc_walks(g, k, visit, max_length=max_length)
    return count[0]


# base walks and batched cover traces ------------------------------------------

def snbc_walks(g: Graph, k: int) -> list[tuple[int, ...]]:
    out = []
    enumerate_snbc_walks(g, k, lambda w: out.append(w.edges))
    return out


def rotation_classes(walks: Sequence[tuple[int, ...]]) -> list[tuple[tuple[int, ...], int]]:
    """Group closed walks by cyclic rotation: (least rotation, class size)."""
    seen = {}
    for w in walks:
        rep = min(w[i:] + w[:i] for i in range(len(w)))
        seen[rep] = seen.get(rep, 0) + 1
    return sorted(seen.items())


class TracePlan:
    """Trace of H_G^k for covers G of a fixed base, batched over covers.

    Tr(H_G^k) = sum over SNBC base walks w of the number of fixed points of
    sigma_w; conjugate (rotated) walks share the count, so one
    representative per rotation class is enough.
    """

    def __init__(self, base: Graph, k: int):
        self.base, self.k = base, k
        self.classes = rotation_classes(snbc_walks(base, k))

    def lifts(self, sigma: np.ndarray):
        """Yield (rep, mult, positions) per rotation class; positions[j] has
        shape (T, n) and holds the fibre index after j steps from each start."""
        s = sigma if sigma.ndim == 3 else sigma[None]
        T, _, n = s.shape
        rows = np.arange(T)[:, None]
        # reuse prefixes between consecutive (sorted) representatives
        stack = [np.broadcast_to(np.arange(n), (T, n))]
        prev = ()
        for rep, mult in self.classes:
            common = 0
            while common < min(len(prev), len(rep)) and prev[common] == rep[common]:
                common += 1
            del stack[common + 1:]
            for e in rep[common:]:
                stack.append(s[rows, e, stack[-1]])
            prev = rep
            yield rep, mult, stack

    def traces(self, sigma: np.ndarray) -> np.ndarray:
        s = sigma if sigma.ndim == 3 else sigma[None]
        total = np.zeros(s.shape[0], dtype=np.int64)
        for _, mult, stack in self.lifts(s):
            total += mult * (stack[-1] == stack[0]).sum(axis=1)
        return total


# walk-class statistics ------------------------------------------------------------

@dataclass
class WalkClassStats:
    """Fibre counts of the graph of a potential walk.

    b: cover vertices per base vertex; a: cover edges per base edge
    representative (non-half-loop); half: (pairs, fixed) per half-loop.
    """
    b: dict
    a: dict
    half: dict = field(default_factory=dict)

    @property
    def num_vertices(self) -> int:
        return sum(self.b.values())

    @property
    def num_edges(self) -> Fraction:
        return Fraction(sum(self.a.values()) + sum(p for p, _ in self.half.values())) + \
            Fraction(sum(f for _, f in self.half.values()), 2)

    @property
    def euler_characteristic(self) -> Fraction:
        return self.num_vertices - self.num_edges

    @property
    def order(self) -> Fraction:
        return -self.euler_characteristic


def walk_class_stats(base: Graph, edges: Sequence[int], pattern: Sequence) -> WalkClassStats | None:
    """Stats of the potential walk (edges; pattern).

    ``pattern[j]`` labels the cover vertex at position j (the tail of edge j);
    positions with equal labels over the same base vertex coincide.  Returns
    None when the pattern cannot be realised (a permutation would have two
    images, or an involution would be inconsistent).
    """
    k = len(edges)
    if len(pattern) != k:
        raise ValueError("need one pattern label per walk position")
    tails = [int(base.tails[e]) for e in edges]
    for j in range(k):
        if int(base.heads[edges[j]]) != tails[(j + 1) % k]:
            raise GraphError("edges do not form a closed walk")
    nodes = [(tails[j], pattern[j]) for j in range(k)]
    b = {}
    for v, lab in set(nodes):
        b[v] = b.get(v, 0) + 1
    fwd, bwd = {}, {}
    half_pairs = {}
    for j, e in enumerate(edges):
        x, y = nodes[j][1], nodes[(j + 1) % k][1]
        f = int(base.inv[e])
        if f == e:
            m = half_pairs.setdefault(e, {})
            if m.get(x, y) != y or m.get(y, x) != x:
                return None
            m[x], m[y] = y, x
            continue
        rep = min(e, f)
        if e != rep:
            x, y = y, x
        if fwd.setdefault((rep, x), y) != y or bwd.setdefault((rep, y), x) != x:
            return None
    a = {}
    for (rep, _x) in fwd:
        a[rep] = a.get(rep, 0) + 1
    half = {}
    for e, m in half_pairs.items():
        fixed = sum(1 for x, y in m.items() if x == y)
        half[e] = ((len(m) - fixed) // 2, fixed)
    return WalkClassStats(b, a, half)


def walk_class_probability_exact(stats: WalkClassStats, n: int, base: Graph | None = None) -> Fraction:
    """Exact E_symm for the stats in a random degree-n cover."""
    val = Fraction(prod(_falling(n, c) for c in stats.b.values()))
    for c in stats.a.values():
        if c > n:
            return Fraction(0)
        val /= _falling(n, c)
    for pairs, fixed in stats.half.values():
        val *= _half_loop_probability(pairs, fixed, n)
    return val


@dataclass(frozen=True)
class InverseNSeries:
    """n^lead * sum_i c_i n^-i, truncated after len(coeffs) terms."""
    coeffs: tuple
    lead: Fraction = Fraction(0)

    @property
    def r(self) -> int:
        return len(self.coeffs)

    def evaluate(self, n) -> Fraction | float:
        n = Fraction(n)
        s = sum(Fraction(c) / n ** i for i, c in enumerate(self.coeffs))
        if self.lead == 0:
            return s
        return float(s) * float(n) ** float(self.lead)


def _series_mul(p, q, r):
    out = [Fraction(0)] * r
    for i, x in enumerate(p[:r]):
        if x:
            for j, y in enumerate(q[:r - i]):
                out[i + j] += x * y
    return out


def _one_minus(c, r):
    """Series of (1 - c x)."""
    return ([Fraction(1), Fraction(-c)] + [Fraction(0)] * r)[:r]


def _inv_one_minus(c, r):
    """Series of 1/(1 - c x)."""
    return [Fraction(c) ** i for i in range(r)]


def expansion_series(stats: WalkClassStats, r: int, parity: int = 0) -> InverseNSeries:
    """Truncated 1/n expansion of n^(-chi) * E_symm (r terms).

    With half-loop base edges the exact value depends on the parity of n, so
    ``parity`` (0 even, 1 odd) selects the branch; a half-loop fixed point on
    odd n contributes an extra n^(-1/2) recorded in ``lead``.
    """
    if r < 1:
        raise ValueError("need at least one term")
    ser = [Fraction(1)] + [Fraction(0)] * (r - 1)
    lead = Fraction(0)
    for c in stats.b.values():
        for j in range(c):
            ser = _series_mul(ser, _one_minus(j, r), r)
    for c in stats.a.values():
        for j in range(c):
            ser = _series_mul(ser, _inv_one_minus(j, r), r)
    for pairs, fixed in stats.half.values():
        if parity == 0:
            if fixed:
                return InverseNSeries(tuple([Fraction(0)] * r))
            for j in range(pairs):
                ser = _series_mul(ser, _inv_one_minus(2 * j + 1, r), r)
        else:
            if fixed > 1:
                return InverseNSeries(tuple([Fraction(0)] * r))
            shift = 2 if fixed else 0
            for j in range(pairs):
                ser = _series_mul(ser, _inv_one_minus(2 * j + shift, r), r)
            if fixed:
                lead -= Fraction(1, 2)
    return InverseNSeries(tuple(ser), lead)


def normalized_exact(stats: WalkClassStats, n: int) -> Fraction | float:
    """n^(-chi) * E_symm, the quantity expanded by ``expansion_series``."""
    chi = stats.euler_characteristic
    val = walk_class_probability_exact(stats, n)
    if chi.denominator == 1:
        return val / Fraction(n) ** int(chi)
    return float(val) / float(n) ** float(chi)


# Monte Carlo for walk classes ----------------------------------------------------

def pattern_counts(base: Graph, edges: Sequence[int], pattern: Sequence,
                   sigma: np.ndarray) -> np.ndarray:
    """Per cover in a (T, m, n) batch: the number of starting lifts whose
    coincidence pattern equals ``pattern`` exactly."""
    k = len(edges)
    tails = [int(base.tails[e]) for e in edges]
    pairs = [(p, q, pattern[p] == pattern[q]) for p in range(k) for q in range(p + 1, k)
             if tails[p] == tails[q]]
    s = sigma if sigma.ndim == 3 else sigma[None]
    T, _, n = s.shape
    rows = np.arange(T)[:, None]
    pos = [np.broadcast_to(np.arange(n), (T, n))]
    for e in edges[:-1]:
        pos.append(s[rows, e, pos[-1]])
    closing = s[rows, edges[-1], pos[-1]]
    ok = closing == pos[0]      # the lift must close up
    for p, q, same in pairs:
        ok &= (pos[p] == pos[q]) == same
    return ok.sum(axis=1)


def pattern_frequency_mc(base: Graph, edges: Sequence[int], pattern: Sequence, n: int,
                         trials: int, seed: int, batch: int = 2000) -> tuple[float, float]:
    """Mean and standard error of ``pattern_counts`` over sampled covers."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    samples = []
    for start in range(0, trials, batch):
        stop = min(trials, start + batch)
        s = np.stack([sample_sigma(base, n, seed, t) for t in range(start, stop)])
        samples.append(pattern_counts(base, edges, pattern, s))
    c = np.concatenate(samples).astype(float)
    return float(c.mean()), float(c.std(ddof=1) / np.sqrt(len(c)))


# exact expected traces -----------------------------------------------------------

def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def patterns_for_walk(base: Graph, edges: Sequence[int]):
    """All coincidence patterns of a closed walk, as label lists."""
    k = len(edges)
    tails = [int(base.tails[e]) for e in edges]
    by_vertex = {}
    for j, v in enumerate(tails):
        by_vertex.setdefault(v, []).append(j)
    groups = list(by_vertex.values())

    def rec(i, labels):
        if i == len(groups):
            yield list(labels)
            return
        for part in _set_partitions(groups[i]):
            for c, block in enumerate(part):
                for j in block:
                    labels[j] = (i, c)
            yield from rec(i + 1, labels)

    yield from rec(0, [None] * k)


def expected_hashimoto_trace_exact(base: Graph, k: int, n: int, max_walks: int = 100_000) -> Fraction:
    """E[Tr H_G^k] over random degree-n covers, summed over potential walks."""
    classes = rotation_classes(snbc_walks(base, k))
    if sum(m for _, m in classes) > max_walks:
        raise ResourceLimitError("too many base walks for the exact expectation")
    total = Fraction(0)
    for rep, mult in classes:
        sub = Fraction(0)
        for pat in patterns_for_walk(base, rep):
            st = walk_class_stats(base, rep, pat)
            if st is not None:
                sub += walk_class_probability_exact(st, n)
        total += mult * sub
    return total
