"""Graphs with half-loops and whole-loops, walks, and the text format.

A graph is stored by its directed edges.  Each directed edge ``e`` has a
tail, a head and a partner ``inv[e]``; ``inv`` is an involution with
``tail[inv[e]] == head[e]``.  A fixed point of ``inv`` is a half-loop
(it adds 1 to the degree of its vertex); a pair ``e != inv[e]`` with
``tail == head`` is a whole-loop (adds 2).

``build_graph`` numbers edges in input order: an ordinary edge or whole
loop ``(u, v)`` becomes the pair ``(2j, 2j+1)`` style consecutive ids
``u->v`` then ``v->u``; a half-loop takes one id.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GraphError, ResourceLimitError

DEFAULT_MAX_WALK_LENGTH = 12
SPREADER_MAX_VERTICES = 20


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.int64).reshape(-1)
    arr.setflags(write=False)
    return arr


class Graph:
    """Finite graph given by (tail, head, involution) on directed edges.

    ``vertex_origin`` / ``edge_origin`` are optional maps back to the ids
    of a parent graph; subgraph constructors fill them in.
    """

    __slots__ = ("vertex_count", "tails", "heads", "inv",
                 "vertex_origin", "edge_origin", "_cache")

    def __init__(self, vertex_count: int, tails, heads, inv,
                 vertex_origin=None, edge_origin=None, validate: bool = True):
        self.vertex_count = int(vertex_count)
        self.tails = _frozen(tails)
        self.heads = _frozen(heads)
        self.inv = _frozen(inv)
        self.vertex_origin = None if vertex_origin is None else _frozen(vertex_origin)
        self.edge_origin = None if edge_origin is None else _frozen(edge_origin)
        self._cache = {}
        if validate:
            self._validate()

    def _validate(self):
        n, m = self.vertex_count, len(self.tails)
        if n < 0:
            raise GraphError("negative vertex count")
        if len(self.heads) != m or len(self.inv) != m:
            raise GraphError("tail/head/involution arrays differ in length")
        if m == 0:
            return
        for name, arr, bound in (("tail", self.tails, n), ("head", self.heads, n),
                                 ("involution", self.inv, m)):
            if arr.min() < 0 or arr.max() >= bound:
                bad = int(np.flatnonzero((arr < 0) | (arr >= bound))[0])
                raise GraphError(f"{name} of directed edge {bad} out of range")
        inv = self.inv
        if np.any(inv[inv] != np.arange(m)):
            bad = int(np.flatnonzero(inv[inv] != np.arange(m))[0])
            raise GraphError(f"involution is not an involution at edge {bad}")
        if np.any(self.tails[inv] != self.heads):
            bad = int(np.flatnonzero(self.tails[inv] != self.heads)[0])
            raise GraphError(f"tail of inverse differs from head at edge {bad}")

    # basic counts -------------------------------------------------------
    @property
    def num_vertices(self) -> int:
        return self.vertex_count

    @property
    def num_directed_edges(self) -> int:
        return len(self.tails)

    @property
    def half_loops(self) -> np.ndarray:
        return np.flatnonzero(self.inv == np.arange(len(self.inv)))

    @property
    def edge_representatives(self) -> np.ndarray:
        """Smallest directed id of each undirected edge, increasing."""
        return np.flatnonzero(np.arange(len(self.inv)) <= self.inv)

    @property
    def num_edges(self) -> int:
        return len(self.edge_representatives)

    @property
    def euler_characteristic(self) -> Fraction:
        return Fraction(self.vertex_count) - Fraction(self.num_directed_edges, 2)

    @property
    def order(self) -> Fraction:
        return -self.euler_characteristic

    def degrees(self) -> np.ndarray:
        return np.bincount(self.tails, minlength=self.vertex_count)

    def is_regular(self) -> bool:
        d = self.degrees()
        return len(d) > 0 and bool(np.all(d == d[0]))

    # matrices -----------------------------------------------------------
    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count), dtype=np.int64)
        np.add.at(a, (self.tails, self.heads), 1)
        return a

    def hashimoto_matrix(self) -> np.ndarray:
        """H[e, f] = 1 iff head(e) == tail(f) and f != inv(e)."""
        h = (self.heads[:, None] == self.tails[None, :]).astype(np.int64)
        h[np.arange(len(self.inv)), self.inv] = 0
        return h

    def hashimoto_sparse(self) -> csr_matrix:
        if "hsparse" not in self._cache:
            order = np.argsort(self.tails, kind="stable")
            starts = np.searchsorted(self.tails[order], np.arange(self.vertex_count + 1))
            rows, cols = [], []
            for e in range(len(self.tails)):
                v = self.heads[e]
                out = order[starts[v]:starts[v + 1]]
                out = out[out != self.inv[e]]
                rows.append(np.full(len(out), e))
                cols.append(out)
            m = len(self.tails)
            r = np.concatenate(rows) if rows else np.zeros(0, int)
            c = np.concatenate(cols) if cols else np.zeros(0, int)
            self._cache["hsparse"] = csr_matrix((np.ones(len(r)), (r, c)), shape=(m, m))
        return self._cache["hsparse"]

    def out_edges(self) -> list[list[int]]:
        if "out" not in self._cache:
            out = [[] for _ in range(self.vertex_count)]
            for e, t in enumerate(self.tails.tolist()):
                out[t].append(e)
            self._cache["out"] = out
        return self._cache["out"]

    def successors(self) -> list[list[int]]:
        """Non-backtracking successors of every directed edge."""
        if "succ" not in self._cache:
            out = self.out_edges()
            inv = self.inv.tolist()
            self._cache["succ"] = [[f for f in out[h] if f != inv[e]]
                                   for e, h in enumerate(self.heads.tolist())]
        return self._cache["succ"]

    # connectivity -------------------------------------------------------
    def component_labels(self) -> tuple[int, np.ndarray]:
        n = self.vertex_count
        if n == 0:
            return 0, np.zeros(0, dtype=np.int64)
        adj = csr_matrix((np.ones(len(self.tails)), (self.tails, self.heads)), shape=(n, n))
        k, labels = connected_components(adj, directed=False)
        return int(k), labels

    def is_connected(self) -> bool:
        return self.component_labels()[0] == 1

    def components(self) -> list["Graph"]:
        k, labels = self.component_labels()
        return [induced_subgraph(self, np.flatnonzero(labels == c)) for c in range(k)]

    def is_pruned(self) -> bool:
        return self.vertex_count > 0 and int(self.degrees().min()) >= 2

    def prune(self) -> "Graph":
        """Repeatedly strip vertices of degree <= 1 (the result may be empty)."""
        alive_v = np.ones(self.vertex_count, bool)
        alive_e = np.ones(self.num_directed_edges, bool)
        deg = self.degrees().copy()
        queue = deque(np.flatnonzero(deg <= 1).tolist())
        out = self.out_edges()
        while queue:
            v = queue.popleft()
            if not alive_v[v]:
                continue
            alive_v[v] = False
            for e in out[v]:
                if not alive_e[e]:
                    continue
                f = self.inv[e]
                alive_e[e] = alive_e[f] = False
                w = self.heads[e]
                if w != v:
                    deg[w] -= 1
                    if alive_v[w] and deg[w] <= 1:
                        queue.append(w)
        return subgraph(self, np.flatnonzero(alive_e), np.flatnonzero(alive_v))

    def is_bipartite(self) -> bool:
        k, labels = self.component_labels()
        if np.any(self.tails == self.heads):
            return False
        color = -np.ones(self.vertex_count, dtype=np.int64)
        out = self.out_edges()
        for s in range(self.vertex_count):
            if color[s] >= 0:
                continue
            color[s] = 0
            stack = [s]
            while stack:
                v = stack.pop()
                for e in out[v]:
                    w = self.heads[e]
                    if color[w] < 0:
                        color[w] = 1 - color[v]
                        stack.append(w)
                    elif color[w] == color[v]:
                        return False
        return True

    # dunder -------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.vertex_count == other.vertex_count
                and np.array_equal(self.tails, other.tails)
                and np.array_equal(self.heads, other.heads)
                and np.array_equal(self.inv, other.inv))

    def __hash__(self):
        return hash((self.vertex_count, self.tails.tobytes(), self.heads.tobytes(),
                     self.inv.tobytes()))

    def __repr__(self):
        return (f"Graph(V={self.vertex_count}, E_dir={self.num_directed_edges}, "
                f"half_loops={len(self.half_loops)})")


def build_graph(vertex_count: int, edges: Iterable[Sequence[int]] = (),
                half_loops: Iterable[int] = ()) -> Graph:
    """Graph with the given undirected edges (u, v) and half-loops at vertices.

    Edges come first in the numbering, then half-loops.
    """
    tails, heads, inv = [], [], []
    for u, v in edges:
        j = len(tails)
        tails += [u, v]
        heads += [v, u]
        inv += [j + 1, j]
    for v in half_loops:
        j = len(tails)
        tails.append(v)
        heads.append(v)
        inv.append(j)
    return Graph(vertex_count, tails, heads, inv)


def bouquet(m: int, half: int = 0) -> Graph:
    """One vertex with ``m`` whole-loops and ``half`` half-loops."""
    return build_graph(1, [(0, 0)] * m, [0] * half)


def complete_graph(n: int) -> Graph:
    return build_graph(n, combinations(range(n), 2))


def subgraph(g: Graph, edge_ids, vertex_ids=None) -> Graph:
    """Subgraph on the given directed edges (closed under inv) and vertices.

    Endpoints of the edges are always included.  Ids are renumbered in
    increasing order of the parent ids; origin maps record the parent ids.
    """
    edge_ids = np.asarray(edge_ids, dtype=np.int64).reshape(-1)
    e = np.unique(np.concatenate([edge_ids, g.inv[edge_ids]])) if len(edge_ids) else edge_ids
    verts = np.concatenate([g.tails[e], g.heads[e]])
    if vertex_ids is not None:
        verts = np.concatenate([verts, np.asarray(vertex_ids, dtype=np.int64).reshape(-1)])
    v = np.unique(verts)
    vpos = -np.ones(g.vertex_count, dtype=np.int64)
    vpos[v] = np.arange(len(v))
    epos = -np.ones(g.num_directed_edges, dtype=np.int64)
    epos[e] = np.arange(len(e))
    return Graph(len(v), vpos[g.tails[e]], vpos[g.heads[e]], epos[g.inv[e]],
                 vertex_origin=v, edge_origin=e)


def induced_subgraph(g: Graph, vertex_ids) -> Graph:
    mask = np.zeros(g.vertex_count, bool)
    mask[np.asarray(vertex_ids, dtype=np.int64)] = True
    e = np.flatnonzero(mask[g.tails] & mask[g.heads])
    return subgraph(g, e, vertex_ids)


def delete_edges(g: Graph, edge_ids) -> Graph:
    """Remove the given edges (and partners), keeping every vertex."""
    kill = np.zeros(g.num_directed_edges, bool)
    ids = np.asarray(edge_ids, dtype=np.int64).reshape(-1)
    kill[ids] = True
    kill[g.inv[ids]] = True
    return subgraph(g, np.flatnonzero(~kill), np.arange(g.vertex_count))


def disjoint_union(graphs: Sequence[Graph]) -> Graph:
    tails, heads, inv = [], [], []
    nv = ne = 0
    for g in graphs:
        tails.append(g.tails + nv)
        heads.append(g.heads + nv)
        inv.append(g.inv + ne)
        nv += g.vertex_count
        ne += g.num_directed_edges
    cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0, np.int64)
    return Graph(nv, cat(tails), cat(heads), cat(inv))


# walks ------------------------------------------------------------------

@dataclass(frozen=True)
class Walk:
    """A walk given by its start vertex and directed edge sequence."""
    start: int
    edges: tuple[int, ...]

    def __len__(self):
        return len(self.edges)

    def vertices(self, g: Graph) -> list[int]:
        return [self.start] + [int(g.heads[e]) for e in self.edges]

    def is_valid(self, g: Graph) -> bool:
        v = self.start
        for e in self.edges:
            if g.tails[e] != v:
                return False
            v = g.heads[e]
        return True

    def is_closed(self, g: Graph) -> bool:
        return self.is_valid(g) and self.vertices(g)[-1] == self.start

    def is_non_backtracking(self, g: Graph) -> bool:
        es = self.edges
        return all(es[i + 1] != g.inv[es[i]] for i in range(len(es) - 1))

    def is_snbc(self, g: Graph) -> bool:
        """Strictly non-backtracking closed: also no backtrack across the seam."""
        if not self.is_closed(g) or not self.is_non_backtracking(g):
            return False
        return len(self.edges) == 0 or self.edges[0] != g.inv[self.edges[-1]]


def walk_from_edges(g: Graph, edges: Sequence[int]) -> Walk:
    edges = tuple(int(e) for e in edges)
    if not edges:
        raise GraphError("cannot infer the start of an empty walk")
    w = Walk(int(g.tails[edges[0]]), edges)
    if not w.is_valid(g):
        raise GraphError("edge sequence is not a walk")
    return w


def enumerate_snbc_walks(g: Graph, k: int, visitor: Callable[[Walk], None] | None = None,
                         max_length: int = DEFAULT_MAX_WALK_LENGTH) -> int:
    """Count strictly non-backtracking closed walks of length ``k``.

    Walks are counted with their starting edge, so the count equals the
    trace of the k-th power of the Hashimoto matrix.  ``visitor``, if
    given, is called with each walk in lexicographic order of edges.
    """
    if k < 1:
        raise ValueError("walk length must be at least 1")
    if k > max_length:
        raise ResourceLimitError(f"walk length {k} exceeds cap {max_length}")
    succ = g.successors()
    tails, heads = g.tails.tolist(), g.heads.tolist()
    inv = g.inv.tolist()
    total = 0
    path = [0] * k

    def closes(first, last):
        return heads[last] == tails[first] and inv[last] != first

    if visitor is None and k >= 2:
        return _count_snbc(g, k, succ, closes)
    for e0 in range(g.num_directed_edges):
        path[0] = e0
        if k == 1:
            if closes(e0, e0):
                total += 1
                if visitor is not None:
                    visitor(Walk(tails[e0], (e0,)))
            continue
        stack = [(1, iter(succ[e0]))]
        while stack:
            depth, it = stack[-1]
            f = next(it, None)
            if f is None:
                stack.pop()
                continue
            path[depth] = f
            if depth == k - 1:
                if closes(e0, f):
                    total += 1
                    if visitor is not None:
                        visitor(Walk(tails[e0], tuple(path)))
            else:
                stack.append((depth + 1, iter(succ[f])))
    return total


def _count_snbc(g: Graph, k: int, succ, closes) -> int:
    """Counting-only DFS: stop one edge short and add the number of
    last edges that close the walk."""
    m = g.num_directed_edges
    close = [[sum(1 for f in succ[a] if closes(e0, f)) for e0 in range(m)] for a in range(m)]
    total = 0
    for e0 in range(m):
        if k == 2:
            total += close[e0][e0]
            continue
        stack = [(1, iter(succ[e0]))]
        while stack:
            depth, it = stack[-1]
            f = next(it, None)
            if f is None:
                stack.pop()
            elif depth == k - 2:
                total += close[f][e0]
            else:
                stack.append((depth + 1, iter(succ[f])))
    return total


def graph_of_walk(g: Graph, w: Walk) -> Graph:
    """Smallest subgraph containing the walk; ids map back to ``g``."""
    if not w.is_valid(g):
        raise GraphError("not a walk in this graph")
    return subgraph(g, list(w.edges), [w.start])


def walk_order(g: Graph, edges: Sequence[int]) -> Fraction:
    """Order of the graph traced out by an edge sequence, without building it."""
    es = set()
    vs = set()
    for e in edges:
        es.add(min(e, int(g.inv[e])))
        vs.add(int(g.tails[e]))
        vs.add(int(g.heads[e]))
    half = sum(1 for e in es if g.inv[e] == e)
    return Fraction(2 * (len(es) - half) + half, 2) - len(vs)


# expansion ----------------------------------------------------------------

def neighborhood(g: Graph, vertex_set) -> set[int]:
    """Heads of edges whose tail lies in the set (the set itself may be missed)."""
    vs = set(int(v) for v in vertex_set)
    return {int(h) for t, h in zip(g.tails.tolist(), g.heads.tolist()) if t in vs}


def _neighbor_masks(g: Graph) -> np.ndarray:
    masks = np.zeros(g.vertex_count, dtype=np.int64)
    for t, h in zip(g.tails.tolist(), g.heads.tolist()):
        masks[t] |= 1 << h
    return masks


def is_gamma_spreader(g: Graph, gamma: float, max_vertices: int = SPREADER_MAX_VERTICES) -> bool:
    """Exhaustively test |Gamma(A)| >= (1 + gamma)|A| for 0 < |A| <= n/2."""
    n = g.vertex_count
    if n > max_vertices:
        raise ResourceLimitError(f"spreader check limited to {max_vertices} vertices, got {n}")
    if not g.is_regular():
        raise GraphError("spreader definition needs a regular graph")
    masks = np.arange(1, 1 << n, dtype=np.int64)
    size = np.bitwise_count(masks)
    masks = masks[size <= n // 2]
    size = size[size <= n // 2]
    gam = np.zeros_like(masks)
    for v, nb in enumerate(_neighbor_masks(g)):
        gam |= np.where((masks >> v) & 1, nb, 0)
    return bool(np.all(np.bitwise_count(gam) >= (1 + gamma) * size - 1e-12))


def walk_power_graph(g: Graph, k: int, max_walks: int = 200_000) -> Graph:
    """G[k]: one edge per walk of length k; its adjacency matrix is A^k.

    A walk is paired with its reverse; palindromic walks become half-loops.
    """
    if k < 1:
        raise ValueError("k must be positive")
    out = g.out_edges()
    walks = [(e,) for e in range(g.num_directed_edges)]
    for _ in range(k - 1):
        walks = [w + (f,) for w in walks for f in out[g.heads[w[-1]]]]
        if len(walks) > max_walks:
            raise ResourceLimitError("too many walks for the walk power graph")
    index = {w: i for i, w in enumerate(walks)}
    inv = [index[tuple(int(g.inv[e]) for e in reversed(w))] for w in walks]
    tails = [g.tails[w[0]] for w in walks]
    heads = [g.heads[w[-1]] for w in walks]
    return Graph(g.vertex_count, tails, heads, inv)


# text format ----------------------------------------------------------------

def format_graph(g: Graph) -> str:
    """Text form: ``v <count>``, then ``e <tail> <head>`` / ``h <vertex>`` records.

    Records follow the smallest directed id of each undirected edge, and
    ``e`` records use that edge's orientation, so parsing a graph that was
    built by ``build_graph`` reproduces its ids.
    """
    lines = [f"v {g.vertex_count}"]
    for e in g.edge_representatives.tolist():
        if g.inv[e] == e:
            lines.append(f"h {g.tails[e]}")
        else:
            lines.append(f"e {g.tails[e]} {g.heads[e]}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    vertex_count = None
    tails, heads, inv = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag, args = parts[0], parts[1:]
        try:
            nums = [int(x) for x in args]
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer field in {raw!r}") from None
        if tag == "v":
            if vertex_count is not None:
                raise GraphError(f"line {lineno}: duplicate vertex record")
            if len(nums) != 1 or nums[0] < 0:
                raise GraphError(f"line {lineno}: expected 'v <count>'")
            vertex_count = nums[0]
            continue
        if vertex_count is None:
            raise GraphError(f"line {lineno}: edge record before 'v <count>'")
        if any(x < 0 or x >= vertex_count for x in nums):
            raise GraphError(f"line {lineno}: vertex out of range in {raw!r}")
        j = len(tails)
        if tag == "e":
            if len(nums) != 2:
                raise GraphError(f"line {lineno}: expected 'e <tail> <head>'")
            u, v = nums
            tails += [u, v]
            heads += [v, u]
            inv += [j + 1, j]
        elif tag == "h":
            if len(nums) != 1:
                raise GraphError(f"line {lineno}: expected 'h <vertex>'")
            tails.append(nums[0])
            heads.append(nums[0])
            inv.append(j)
        else:
            raise GraphError(f"line {lineno}: unknown record {tag!r}")
    if vertex_count is None:
        raise GraphError("missing 'v <count>' record")
    return Graph(vertex_count, tails, heads, inv)


def read_graph(path) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())


def write_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g))
