"""Covering graphs from permutation assignments, and graph morphisms.

Vertex (v, i) of the cover has id ``v * n + i`` and directed edge (e, i)
has id ``e * n + i``; the edge (e, i) runs from (tail e, i) to
(head e, sigma_e(i)) and its partner is (inv e, sigma_e(i)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GraphError
from .graph import Graph


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for (seed, key...), stable across processes."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def random_involution(n: int, rng: np.random.Generator, fixed_points: int | None = None) -> np.ndarray:
    """Uniform involution of [n] with the given number of fixed points.

    Default: none if n is even, exactly one if n is odd.
    """
    if fixed_points is None:
        fixed_points = n % 2
    if fixed_points < 0 or fixed_points > n or (n - fixed_points) % 2:
        raise ValueError(f"no involution of {n} points with {fixed_points} fixed points")
    p = rng.permutation(n)
    s = np.arange(n)
    m = n - fixed_points
    a, b = p[0:m:2], p[1:m:2]
    s[a] = b
    s[b] = a
    return s


@dataclass
class PermutationAssignment:
    """sigma[e] is a permutation of range(n) for each directed base edge e."""
    base: Graph
    n: int
    sigma: np.ndarray

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=np.int64)
        m = self.base.num_directed_edges
        if self.n < 1:
            raise ValueError("cover degree must be at least 1")
        if self.sigma.shape != (m, self.n):
            raise GraphError(f"expected sigma of shape {(m, self.n)}, got {self.sigma.shape}")
        ar = np.arange(self.n)
        for e in range(m):
            s = self.sigma[e]
            if not np.array_equal(np.sort(s), ar):
                raise GraphError(f"sigma for edge {e} is not a permutation")
            f = self.base.inv[e]
            if not np.array_equal(self.sigma[f][s], ar):
                raise GraphError(f"sigma for edge {f} is not the inverse of sigma for edge {e}")

    @classmethod
    def identity(cls, base: Graph, n: int) -> "PermutationAssignment":
        return cls(base, n, np.tile(np.arange(n), (base.num_directed_edges, 1)))

    def is_standard_model(self) -> bool:
        """Half-loop involutions have 0 (n even) or 1 (n odd) fixed points."""
        ar = np.arange(self.n)
        for e in self.base.half_loops:
            if int(np.sum(self.sigma[e] == ar)) != self.n % 2:
                return False
        return True

    def format(self) -> str:
        lines = []
        for e in range(self.base.num_directed_edges):
            lines.append("perm " + str(e) + " " + " ".join(map(str, self.sigma[e].tolist())))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, base: Graph, text: str) -> "PermutationAssignment":
        rows = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] != "perm" or len(parts) < 3:
                raise GraphError(f"line {lineno}: expected 'perm <edge_id> <images...>'")
            try:
                e, images = int(parts[1]), [int(x) for x in parts[2:]]
            except ValueError:
                raise GraphError(f"line {lineno}: non-integer field") from None
            if e < 0 or e >= base.num_directed_edges or e in rows:
                raise GraphError(f"line {lineno}: bad or repeated edge id {e}")
            rows[e] = images
        if len(rows) != base.num_directed_edges:
            raise GraphError("assignment must list every directed base edge")
        n = len(rows[0])
        if any(len(r) != n for r in rows.values()):
            raise GraphError("permutations have different lengths")
        return cls(base, n, np.array([rows[e] for e in range(base.num_directed_edges)]))


def sample_assignment(base: Graph, n: int, seed: int, trial: int = 0,
                      stream: tuple = ()) -> PermutationAssignment:
    """Random assignment: uniform permutations on edge pairs, uniform
    involutions (0 or 1 fixed point by parity of n) on half-loops.

    Each undirected edge draws from its own stream keyed by
    (seed, *stream, trial, edge).
    """
    return PermutationAssignment(base, n, sample_sigma(base, n, seed, trial, stream))


def sample_sigma(base: Graph, n: int, seed: int, trial: int = 0, stream: tuple = ()) -> np.ndarray:
    if n < 1:
        raise ValueError("cover degree must be at least 1")
    m = base.num_directed_edges
    sigma = np.empty((m, n), dtype=np.int64)
    for e in base.edge_representatives.tolist():
        rng = trial_rng(seed, *stream, trial, e)
        f = int(base.inv[e])
        if f == e:
            sigma[e] = random_involution(n, rng)
        else:
            s = rng.permutation(n)
            sigma[e] = s
            inv = np.empty(n, dtype=np.int64)
            inv[s] = np.arange(n)
            sigma[f] = inv
    return sigma


@dataclass
class Cover:
    """Cover graph G of ``base`` built from an assignment, with its projection."""
    assignment: PermutationAssignment
    graph: Graph = field(init=False)

    def __post_init__(self):
        a = self.assignment
        b, n, s = a.base, a.n, a.sigma
        m = b.num_directed_edges
        e = np.repeat(np.arange(m), n)
        i = np.tile(np.arange(n), m)
        j = s[e, i]
        tails = b.tails[e] * n + i
        heads = b.heads[e] * n + j
        inv = b.inv[e] * n + j
        self.graph = Graph(b.vertex_count * n, tails, heads, inv, validate=False)

    @property
    def base(self) -> Graph:
        return self.assignment.base

    @property
    def n(self) -> int:
        return self.assignment.n

    @property
    def vertex_map(self) -> np.ndarray:
        return np.arange(self.graph.vertex_count) // self.n

    @property
    def edge_map(self) -> np.ndarray:
        return np.arange(self.graph.num_directed_edges) // self.n

    def vertex_fibres(self) -> list[np.ndarray]:
        n = self.n
        return [np.arange(v * n, (v + 1) * n) for v in range(self.base.vertex_count)]

    def edge_fibres(self) -> list[np.ndarray]:
        n = self.n
        return [np.arange(e * n, (e + 1) * n) for e in range(self.base.num_directed_edges)]

    def projection(self) -> "Morphism":
        return Morphism(self.graph, self.base, self.vertex_map, self.edge_map)


def random_cover(base: Graph, n: int, seed: int, trial: int = 0, stream: tuple = ()) -> Cover:
    return Cover(sample_assignment(base, n, seed, trial, stream))


# morphisms -----------------------------------------------------------------

@dataclass
class Morphism:
    source: Graph
    target: Graph
    vertex_map: np.ndarray
    edge_map: np.ndarray

    def __post_init__(self):
        self.vertex_map = np.asarray(self.vertex_map, dtype=np.int64)
        self.edge_map = np.asarray(self.edge_map, dtype=np.int64)

    def is_morphism(self) -> bool:
        s, t = self.source, self.target
        vm, em = self.vertex_map, self.edge_map
        if vm.shape != (s.vertex_count,) or em.shape != (s.num_directed_edges,):
            return False
        if s.num_directed_edges == 0:
            return True
        if em.min() < 0 or em.max() >= t.num_directed_edges:
            return False
        if s.vertex_count and (vm.min() < 0 or vm.max() >= t.vertex_count):
            return False
        return bool(np.all(t.tails[em] == vm[s.tails]) and np.all(t.heads[em] == vm[s.heads])
                    and np.all(t.inv[em] == em[s.inv]))

    def _star_images(self):
        out = self.source.out_edges()
        return [self.edge_map[o] for o in out]

    def is_etale(self) -> bool:
        """Injective on the out-star of every vertex."""
        if not self.is_morphism():
            return False
        return all(len(np.unique(im)) == len(im) for im in self._star_images())

    def is_covering(self) -> bool:
        """Bijective from each out-star onto the out-star of the image vertex."""
        if not self.is_morphism():
            return False
        tout = self.target.out_edges()
        for v, im in enumerate(self._star_images()):
            want = sorted(tout[self.vertex_map[v]])
            if sorted(im.tolist()) != want:
                return False
        return True

    def is_injective(self) -> bool:
        return (len(np.unique(self.vertex_map)) == len(self.vertex_map)
                and len(np.unique(self.edge_map)) == len(self.edge_map))


def _complete_partial_permutation(partial: dict[int, int], n: int, rng) -> np.ndarray:
    s = -np.ones(n, dtype=np.int64)
    for i, j in partial.items():
        s[i] = j
    free_dom = np.flatnonzero(s < 0)
    used = np.zeros(n, bool)
    used[list(partial.values())] = True
    free_rng = np.flatnonzero(~used)
    s[free_dom] = rng.permutation(free_rng)
    return s


def _complete_partial_involution(partial: dict[int, int], n: int, rng) -> np.ndarray:
    s = np.arange(n)
    done = np.zeros(n, bool)
    for i, j in partial.items():
        s[i], s[j] = j, i
        done[i] = done[j] = True
    free = np.flatnonzero(~done)
    fixed_now = sum(1 for i, j in partial.items() if i == j)
    want_fixed = max(n % 2 - fixed_now, 0)
    want_fixed = min(want_fixed, len(free))
    want_fixed += (len(free) - want_fixed) % 2
    if len(free):
        s[free] = free[random_involution(len(free), rng, fixed_points=want_fixed)]
    return s


def etale_factorization(f: Morphism, n: int, seed: int = 0) -> tuple[Cover, Morphism]:
    """Embed an etale B-graph into a degree-n cover of B.

    Returns the cover and an injective morphism psi -> G commuting with the
    projections.  Requires n >= the largest vertex fibre of f.
    """
    if not f.is_etale():
        raise GraphError("morphism is not etale")
    psi, base = f.source, f.target
    fib = np.bincount(f.vertex_map, minlength=base.vertex_count) if psi.vertex_count else \
        np.zeros(base.vertex_count, int)
    if n < int(fib.max(initial=0)):
        raise ValueError(f"n={n} is smaller than the largest fibre {int(fib.max())}")
    idx = np.zeros(psi.vertex_count, dtype=np.int64)
    seen = np.zeros(base.vertex_count, dtype=np.int64)
    for u in range(psi.vertex_count):
        b = f.vertex_map[u]
        idx[u] = seen[b]
        seen[b] += 1
    partial = {e: {} for e in range(base.num_directed_edges)}
    for e in range(psi.num_directed_edges):
        x = int(f.edge_map[e])
        partial[x][int(idx[psi.tails[e]])] = int(idx[psi.heads[e]])
    rng = np.random.default_rng(seed)
    sigma = np.empty((base.num_directed_edges, n), dtype=np.int64)
    for x in base.edge_representatives.tolist():
        y = int(base.inv[x])
        if y == x:
            sigma[x] = _complete_partial_involution(partial[x], n, rng)
        else:
            merged = dict(partial[x])
            for j, i in partial[y].items():
                merged[i] = j
            s = _complete_partial_permutation(merged, n, rng)
            sigma[x] = s
            inv = np.empty(n, dtype=np.int64)
            inv[s] = np.arange(n)
            sigma[y] = inv
    cover = Cover(PermutationAssignment(base, n, sigma))
    vmap = f.vertex_map * n + idx
    emap = f.edge_map * n + idx[psi.tails]
    emb = Morphism(psi, cover.graph, vmap, emap)
    if not (emb.is_morphism() and emb.is_injective()):
        raise GraphError("internal error: embedding is not an injective morphism")
    return cover, emb
