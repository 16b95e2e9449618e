"""B-graphs (graphs with a morphism to a base B), injections, occurrences."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from .covers import Cover, Morphism, PermutationAssignment, sample_sigma
from .errors import GraphError, ResourceLimitError
from .graph import Graph, Walk, graph_of_walk


@dataclass
class BGraph:
    graph: Graph
    base: Graph
    vertex_map: np.ndarray
    edge_map: np.ndarray

    def __post_init__(self):
        self.vertex_map = np.asarray(self.vertex_map, dtype=np.int64)
        self.edge_map = np.asarray(self.edge_map, dtype=np.int64)
        if not self.morphism().is_morphism():
            raise GraphError("labels do not define a morphism to the base")

    def morphism(self) -> Morphism:
        return Morphism(self.graph, self.base, self.vertex_map, self.edge_map)

    @property
    def etale(self) -> bool:
        return self.morphism().is_etale()

    @property
    def order(self):
        return self.graph.order

    def fibre_sizes(self) -> np.ndarray:
        return np.bincount(self.vertex_map, minlength=self.base.vertex_count)


def bgraph_of_cover(cover: Cover) -> BGraph:
    return BGraph(cover.graph, cover.base, cover.vertex_map, cover.edge_map)


def bgraph_of_subgraph(parent: BGraph, sub: Graph) -> BGraph:
    """Restrict the labels of ``parent`` to a subgraph carrying origin maps."""
    return BGraph(sub, parent.base, parent.vertex_map[sub.vertex_origin],
                  parent.edge_map[sub.edge_origin])


def bgraph_of_walk(cover: Cover, w: Walk) -> BGraph:
    return bgraph_of_subgraph(bgraph_of_cover(cover), graph_of_walk(cover.graph, w))


def identity_bgraph(base: Graph) -> BGraph:
    return BGraph(base, base, np.arange(base.vertex_count), np.arange(base.num_directed_edges))


# injections ---------------------------------------------------------------

def _spanning_order(g: Graph, root: int = 0):
    """BFS edges: tree edges discover new vertices, the rest are checks."""
    out = g.out_edges()
    seen = np.zeros(g.vertex_count, bool)
    seen[root] = True
    tree, checks = [], []
    used = set()
    q = deque([root])
    while q:
        v = q.popleft()
        for e in out[v]:
            rep = min(e, int(g.inv[e]))
            if rep in used:
                continue
            used.add(rep)
            w = int(g.heads[e])
            if not seen[w]:
                seen[w] = True
                tree.append(e)
                q.append(w)
            else:
                checks.append(e)
    return tree, checks


def _count_etale_connected(psi: BGraph, target: BGraph) -> int:
    g, h = psi.graph, target.graph
    tree, checks = _spanning_order(g)
    # label -> edge lookup at each target vertex
    lookup = {}
    for e in range(h.num_directed_edges):
        lookup[(int(h.tails[e]), int(target.edge_map[e]))] = e
    root_label = psi.vertex_map[0]
    count = 0
    for w in np.flatnonzero(target.vertex_map == root_label).tolist():
        img = {0: w}
        ok = True
        for e in tree + checks:
            t = img[int(g.tails[e])]
            f = lookup.get((t, int(psi.edge_map[e])))
            if f is None:
                ok = False
                break
            hd = int(h.heads[f])
            u = int(g.heads[e])
            if u in img:
                if img[u] != hd:
                    ok = False
                    break
            else:
                img[u] = hd
        if ok and len(set(img.values())) == len(img):
            count += 1
    return count


def _count_general(psi: BGraph, target: BGraph, node_cap: int) -> int:
    g, h = psi.graph, target.graph
    nodes = [0]

    def tick():
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise ResourceLimitError(f"injection search exceeded {node_cap} nodes")

    # candidate target edges per psi undirected edge, given endpoint images
    reps = g.edge_representatives.tolist()
    by_label = {}
    for f in range(h.num_directed_edges):
        by_label.setdefault(int(target.edge_map[f]), []).append(f)

    def edge_count(vimg):
        cand = []
        for e in reps:
            half = g.inv[e] == e
            t, hd = vimg[g.tails[e]], vimg[g.heads[e]]
            opts = [f for f in by_label.get(int(psi.edge_map[e]), [])
                    if h.tails[f] == t and h.heads[f] == hd and ((h.inv[f] == f) == half)]
            if not opts:
                return 0
            cand.append(opts)
        order = sorted(range(len(cand)), key=lambda i: len(cand[i]))
        used = set()

        def rec(i):
            tick()
            if i == len(order):
                return 1
            total = 0
            for f in cand[order[i]]:
                if f in used:
                    continue
                pair = {f, int(h.inv[f])}
                if pair & used:
                    continue
                used.update(pair)
                total += rec(i + 1)
                used.difference_update(pair)
            return total

        return rec(0)

    fib = {}
    for w in range(h.vertex_count):
        fib.setdefault(int(target.vertex_map[w]), []).append(w)
    vimg = [-1] * g.vertex_count
    taken = set()

    def vrec(u):
        tick()
        if u == g.vertex_count:
            return edge_count(vimg)
        total = 0
        for w in fib.get(int(psi.vertex_map[u]), []):
            if w in taken:
                continue
            vimg[u] = w
            taken.add(w)
            total += vrec(u + 1)
            taken.discard(w)
        vimg[u] = -1
        return total

    return vrec(0)


def count_injections(psi: BGraph, target: BGraph, node_cap: int = 2_000_000) -> int:
    """Number of injective B-graph morphisms psi -> target."""
    if psi.base != target.base:
        raise GraphError("B-graphs over different bases")
    if psi.graph.vertex_count == 0:
        return 1
    if target.etale:
        if not psi.etale:
            return 0
        if psi.graph.is_connected():
            return _count_etale_connected(psi, target)
    return _count_general(psi, target, node_cap)


def automorphism_count(psi: BGraph) -> int:
    return count_injections(psi, psi)


def isomorphic(a: BGraph, b: BGraph) -> bool:
    if (a.graph.vertex_count != b.graph.vertex_count
            or a.graph.num_directed_edges != b.graph.num_directed_edges
            or not np.array_equal(a.fibre_sizes(), b.fibre_sizes())):
        return False
    return count_injections(a, b) > 0


class LiftPlan:
    """Precomputed traversal for counting injections of a connected etale
    B-graph into covers given by permutation arrays (vectorised)."""

    def __init__(self, psi: BGraph):
        if not psi.etale or not psi.graph.is_connected():
            raise GraphError("lift plan needs a connected etale B-graph")
        self.psi = psi
        g = psi.graph
        self.tree, self.checks = _spanning_order(g)
        self.tails = g.tails
        self.heads = g.heads
        self.labels = psi.edge_map
        self.root_base = int(psi.vertex_map[0])
        groups = {}
        for u in range(g.vertex_count):
            groups.setdefault(int(psi.vertex_map[u]), []).append(u)
        self.groups = [np.array(v) for v in groups.values() if len(v) > 1]
        self.nv = g.vertex_count

    def count(self, sigma: np.ndarray) -> np.ndarray:
        """sigma has shape (m, n) or (T, m, n); returns counts per cover."""
        s = sigma if sigma.ndim == 3 else sigma[None]
        T, _, n = s.shape
        trials = np.arange(T)[:, None]
        idx = np.empty((self.nv, T, n), dtype=np.int64)
        idx[0] = np.arange(n)[None, :]
        ok = np.ones((T, n), bool)
        for e in self.tree:
            idx[self.heads[e]] = s[trials, self.labels[e], idx[self.tails[e]]]
        for e in self.checks:
            ok &= s[trials, self.labels[e], idx[self.tails[e]]] == idx[self.heads[e]]
        for grp in self.groups:
            vals = np.sort(idx[grp], axis=0)
            ok &= np.all(vals[1:] != vals[:-1], axis=0)
        return ok.sum(axis=1)


def count_injections_into_cover(psi: BGraph, cover: Cover) -> int:
    if not psi.etale:
        return 0
    if psi.graph.is_connected():
        return int(LiftPlan(psi).count(cover.assignment.sigma)[0])
    return count_injections(psi, bgraph_of_cover(cover))


# occurrence expectation ------------------------------------------------------

def _falling(n: int, k: int) -> int:
    return prod(range(n - k + 1, n + 1)) if k <= n else 0


def _double_factorial(n: int) -> int:
    return prod(range(n, 0, -2)) if n > 0 else 1


def _half_loop_probability(pairs: int, fixed: int, n: int) -> Fraction:
    """P(a random model involution contains given pairs and fixed points)."""
    if 2 * pairs + fixed > n:
        return Fraction(0)
    if n % 2 == 0:
        if fixed:
            return Fraction(0)
        return Fraction(_double_factorial(n - 2 * pairs - 1), _double_factorial(n - 1))
    if fixed > 1:
        return Fraction(0)
    total = n * _double_factorial(n - 2)
    if fixed == 1:
        return Fraction(_double_factorial(n - 2 * pairs - 2), total)
    rest = n - 2 * pairs
    return Fraction(rest * _double_factorial(rest - 2), total)


def edge_statistics(psi: BGraph):
    """(b_v per base vertex, a_e per base edge representative, half-loop (pairs, fixed))."""
    base = psi.base
    b = psi.fibre_sizes()
    a = {}
    for x in base.edge_representatives.tolist():
        if base.inv[x] == x:
            on = psi.edge_map == x
            fixed = int(np.sum(on & (psi.graph.inv == np.arange(len(on)))))
            pairs = (int(on.sum()) - fixed) // 2
            a[x] = (pairs, fixed)
        else:
            a[x] = int(np.sum(psi.edge_map == x))
    return b, a


def occurrence_expectation(psi: BGraph, n: int) -> Fraction:
    """Expected number of injections of psi into a random degree-n cover."""
    if not psi.etale:
        return Fraction(0)
    b, a = edge_statistics(psi)
    val = Fraction(prod(_falling(n, int(x)) for x in b))
    for x, stat in a.items():
        if isinstance(stat, tuple):
            val *= _half_loop_probability(stat[0], stat[1], n)
        else:
            val *= Fraction(1, _falling(n, stat)) if stat <= n else 0
    return val


def monte_carlo_occurrence(psi: BGraph, n: int, trials: int, seed: int,
                           batch: int = 256) -> tuple[float, float]:
    """Sample mean and standard error of the injection count."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not psi.etale:
        return 0.0, 0.0
    plan = LiftPlan(psi) if psi.graph.is_connected() else None
    counts = []
    for start in range(0, trials, batch):
        stop = min(trials, start + batch)
        sig = np.stack([sample_sigma(psi.base, n, seed, t) for t in range(start, stop)])
        if plan is not None:
            counts.append(plan.count(sig))
        else:
            counts.append(np.array([count_injections_into_cover(
                psi, Cover(PermutationAssignment(psi.base, n, s))) for s in sig]))
    c = np.concatenate(counts).astype(float)
    se = float(c.std(ddof=1) / np.sqrt(len(c))) if len(c) > 1 else 0.0
    return float(c.mean()), se
