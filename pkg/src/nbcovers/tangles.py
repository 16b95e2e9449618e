"""Variable-length graphs, tangles, minimal tangles and the fundamental order.

A variable-length graph (VLG) is a type graph T plus a positive length for
each non-half-loop edge; realising it subdivides each edge into a path.
Half-loops always have length 1.

The Hashimoto spectral radius of a realisation is computed on T itself:
with M(x)[e, f] = x^len(e) for each non-backtracking turn e -> f of T,
rho(H) = 1/x* where rho(M(x*)) = 1.  Sending a length to infinity is the
same as weight 0, i.e. deleting that edge, which gives the limits used to
certify searches.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from math import sqrt
from typing import Iterator, Sequence

import numpy as np

from .bgraphs import BGraph, LiftPlan
from .errors import CertificationError, ResourceLimitError
from .graph import Graph, build_graph
from .posets import UpperSet, minimal_elements
from .spectra import BAND, hashimoto_radius


# variable-length graphs ------------------------------------------------------

def variable_edges(t: Graph) -> list[int]:
    return [e for e in t.edge_representatives.tolist() if t.inv[e] != e]


@dataclass
class VLG:
    skeleton: Graph
    lengths: tuple

    def __post_init__(self):
        self.lengths = tuple(int(x) for x in self.lengths)
        if len(self.lengths) != len(variable_edges(self.skeleton)):
            raise ValueError("one length per non-half-loop edge is required")
        if any(x < 1 for x in self.lengths):
            raise ValueError("lengths must be positive")

    def realize(self) -> Graph:
        return realize(self.skeleton, self.lengths)

    @property
    def order(self) -> Fraction:
        return self.skeleton.order

    def rho(self) -> float:
        return TurnRadius(self.skeleton).rho(self.lengths)


def realize(t: Graph, lengths: Sequence[int]) -> Graph:
    nv = t.vertex_count
    edges, halves = [], []
    for e, L in zip(variable_edges(t), lengths):
        u, v = int(t.tails[e]), int(t.heads[e])
        path = [u] + list(range(nv, nv + L - 1)) + [v]
        nv += L - 1
        edges += list(zip(path[:-1], path[1:]))
    halves = [int(t.tails[e]) for e in t.half_loops]
    return build_graph(nv, edges, halves)


class TurnRadius:
    """rho(H) of realisations of a fixed type, from the small turn matrix."""

    def __init__(self, t: Graph):
        self.t = t
        self.turns = t.hashimoto_matrix().astype(float)
        var = variable_edges(t)
        # for each directed edge: which length slot it uses (-1 for half-loops)
        slot = -np.ones(t.num_directed_edges, dtype=np.int64)
        for i, e in enumerate(var):
            slot[e] = i
            slot[t.inv[e]] = i
        self.slot = slot

    def _m(self, x, lengths, deleted):
        L = np.ones(len(self.slot))
        mask = self.slot >= 0
        if mask.any():
            L[mask] = np.asarray(lengths, dtype=float)[self.slot[mask]]
        w = x ** L
        for d in deleted:
            if isinstance(d, tuple):
                w[d[1]] = 0.0
            else:
                w[self.slot == d] = 0.0
        return self.turns * w[:, None]

    def radius_at(self, x, lengths, deleted=()) -> float:
        m = self._m(x, lengths, deleted)
        if m.shape[0] == 0:
            return 0.0
        return float(np.abs(np.linalg.eigvals(m)).max())

    def rho(self, lengths, deleted=()) -> float:
        """Spectral radius of H for the realisation.  ``deleted`` lists
        length slots sent to infinity, or ('h', e) for a half-loop e."""
        r1 = self.radius_at(1.0, lengths, deleted)
        if r1 < 1 - 1e-12:
            return 0.0
        if r1 < 1 + 1e-12:
            return 1.0
        # x^L <= x on [0, 1], so rho(M(1/r1)) <= 1 <= rho(M(1))
        lo, hi = 1.0 / r1, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.radius_at(mid, lengths, deleted) < 1.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 4e-16 * hi:
                break
        return 2.0 / (lo + hi)


# tangle predicates ------------------------------------------------------------

def tangle_threshold(base: Graph) -> float:
    return sqrt(hashimoto_radius(base))


def is_tangle_value(rho: float, thr: float, strict: bool = False, eps: float = 0.0) -> bool:
    if strict:
        return rho > thr + eps + BAND
    return rho >= thr + eps - BAND


@dataclass
class TangleClass:
    label: str          # 'none', 'tangle', 'strict', 'eps'
    rho: float
    threshold: float
    near_threshold: bool


def classify_tangle(psi: BGraph, eps: float = 0.0) -> TangleClass:
    """Classify a connected etale B-graph against sqrt(rho(H_B)) (+ eps)."""
    if not psi.graph.is_connected():
        raise ValueError("tangles are connected")
    if not psi.etale:
        raise ValueError("tangles must be etale over the base")
    thr = tangle_threshold(psi.base)
    rho = hashimoto_radius(psi.graph)
    near = abs(rho - thr) < 1e-6
    if eps > 0 and rho >= thr + eps - BAND:
        label = "eps"
    elif rho > thr + BAND:
        label = "strict"
    elif rho >= thr - BAND:
        label = "tangle"
    else:
        label = "none"
    return TangleClass(label, rho, thr, near)


# type graph enumeration ------------------------------------------------------

def _multigraphs(deg: Sequence[int], allow_half: bool):
    """All (half, loops, pair-multiplicity) structures with the given degrees."""
    n = len(deg)
    res = list(deg)
    half = [0] * n
    loops = [0] * n
    mult = {}

    def fill(i, j):
        # distribute res[i] over pairs (i, j..n-1)
        if j == n:
            if res[i] == 0:
                yield from vertex(i + 1)
            return
        top = min(res[i], res[j])
        for c in range(top, -1, -1):
            if c:
                mult[(i, j)] = c
            else:
                mult.pop((i, j), None)
            res[i] -= c
            res[j] -= c
            yield from fill(i, j + 1)
            res[i] += c
            res[j] += c
        mult.pop((i, j), None)

    def vertex(i):
        if i == n:
            yield (tuple(half), tuple(loops), dict(mult))
            return
        r0 = res[i]
        for h in (range(r0 + 1) if allow_half else (0,)):
            for l in range((r0 - h) // 2 + 1):
                half[i], loops[i] = h, l
                res[i] = r0 - h - 2 * l
                yield from fill(i, i + 1)
                res[i] = r0
        half[i] = loops[i] = 0

    yield from vertex(0)


def _structure_graph(n, half, loops, mult) -> Graph:
    edges = []
    for v in range(n):
        edges += [(v, v)] * loops[v]
    for (i, j), c in sorted(mult.items()):
        edges += [(i, j)] * c
    halves = [v for v in range(n) for _ in range(half[v])]
    return build_graph(n, edges, halves)


def _canonical_key(n, half, loops, mult, classes):
    best = None
    pair = lambda p, i, j: mult.get((min(p[i], p[j]), max(p[i], p[j])), 0)
    for perm in _class_perms(classes):
        key = (tuple(half[perm[v]] for v in range(n)), tuple(loops[perm[v]] for v in range(n)),
               tuple(pair(perm, i, j) for i in range(n) for j in range(i + 1, n)))
        if best is None or key < best:
            best = key
    return best


def _class_perms(classes):
    groups = []
    for c in sorted(set(classes)):
        groups.append([v for v, k in enumerate(classes) if k == c])
    n = len(classes)
    for choice in product(*[permutations(g) for g in groups]):
        perm = [0] * n
        for g, img in zip(groups, choice):
            for a, b in zip(g, img):
                perm[a] = b
        yield perm


def _degree_sequences(total_excess, count, lo):
    """Non-increasing sequences of `count` ints >= lo whose (d - 2) sum to total_excess."""
    def rec(k, remaining, cap):
        if k == 0:
            if remaining == 0:
                yield ()
            return
        for d in range(min(cap, remaining + 2), lo - 1, -1):
            if d - 2 > remaining:
                continue
            for rest in rec(k - 1, remaining - (d - 2), d):
                yield (d,) + rest
    yield from rec(count, total_excess, total_excess + 2)


def _types_of_order(two_o: int, allow_half: bool, rule: str, max_degree: int | None,
                    max_vertices: int) -> list[Graph]:
    out, seen = [], set()
    if two_o == 0:
        cands = [build_graph(1, [(0, 0)])]
        if allow_half:
            cands.append(build_graph(1, [], [0, 0]))
            if rule == "reduced":
                cands.append(build_graph(2, [(0, 1)], [0, 1]))
        return cands
    core_max = two_o
    for core in range(1, core_max + 1):
        for cdeg in _degree_sequences(two_o, core, 3):
            if max_degree is not None and max(cdeg) > max_degree:
                continue
            if rule == "reduced" and allow_half:
                _reduced_types(cdeg, max_vertices, seen, out)
                continue
            pend_max = (sum(cdeg) if allow_half else 0)
            if rule == "spec":
                pend_max = 1
            for pend in range(0, pend_max + 1):
                n = core + pend
                if n > max_vertices:
                    raise ResourceLimitError(f"type enumeration needs more than {max_vertices} vertices")
                deg = list(cdeg) + [2] * pend
                if max_degree is not None and max(deg) > max_degree:
                    continue
                classes = [(d, 0) for d in cdeg] + [(2, 1)] * pend
                for half, loops, mult in _multigraphs(deg, allow_half):
                    if rule == "reduced" and any(half[v] == 0 for v in range(core, n)):
                        continue
                    g = _structure_graph(n, half, loops, mult)
                    if not g.is_connected():
                        continue
                    key = _canonical_key(n, half, loops, mult, classes)
                    if key in seen:
                        continue
                    seen.add(key)
                    out.append(g)
    return out


def _reduced_types(cdeg, max_vertices, seen, out):
    """Core of degree >= 3 vertices; every degree-2 vertex is a pendant
    edge ending in a half-loop, recorded as a count on its core vertex."""
    core = len(cdeg)
    for stubs, loops, mult in _multigraphs(cdeg, True):
        for pend in product(*[range(x + 1) for x in stubs]):
            n = core + sum(pend)
            if n > max_vertices:
                raise ResourceLimitError(f"type enumeration needs more than {max_vertices} vertices")
            half = tuple(x - p for x, p in zip(stubs, pend))
            key = _canonical_key(core, tuple(zip(half, pend)), loops, mult, [(d, 0) for d in cdeg])
            if key in seen:
                continue
            g = _structure_graph(core, half, loops, mult)
            if not g.is_connected():
                continue
            seen.add(key)
            edges = [(int(g.tails[e]), int(g.heads[e])) for e in g.edge_representatives.tolist()
                     if g.inv[e] != e]
            halves = [int(g.tails[e]) for e in g.half_loops]
            j = core
            for v, p in enumerate(pend):
                for _ in range(p):
                    edges.append((v, j))
                    halves.append(j)
                    j += 1
            out.append(build_graph(n, edges, halves))


def enumerate_type_graphs(r, half_loops: bool = True, rule: str = "reduced",
                          max_degree: int | None = None, max_vertices: int = 16,
                          min_order=0) -> Iterator[tuple[str, Graph]]:
    """Connected pruned type graphs of order < r, by increasing order.

    rule='spec': every degree >= 3 except at most one vertex of degree 2.
    rule='reduced': degree-2 vertices must carry a half-loop (plus the
    order-0 cycles), which avoids subdivided copies of smaller types.
    Yields (type id, graph).
    """
    if rule not in ("spec", "reduced"):
        raise ValueError(f"unknown rule {rule!r}")
    r = Fraction(r)
    two_o = int(2 * Fraction(min_order))
    while Fraction(two_o, 2) < r:
        if half_loops or two_o % 2 == 0:
            for i, g in enumerate(_types_of_order(two_o, half_loops, rule, max_degree,
                                                  max_vertices)):
                yield f"o{two_o}h-{i}" if two_o % 2 else f"o{two_o // 2}-{i}", g
        two_o += 1


# etale labelings ---------------------------------------------------------------

def _edge_order(g: Graph, root: int = 0):
    out = g.out_edges()
    seen = {root}
    order = []
    used = set()
    q = deque([root])
    while q:
        v = q.popleft()
        for e in out[v]:
            rep = min(e, int(g.inv[e]))
            if rep in used:
                continue
            used.add(rep)
            order.append(e)
            w = int(g.heads[e])
            if w not in seen:
                seen.add(w)
                q.append(w)
    return order


def etale_labelings(g: Graph, base: Graph, first_only: bool = False,
                    node_cap: int = 5_000_000) -> list[BGraph]:
    """Etale B-graph structures on a connected graph, up to isomorphism."""
    if g.vertex_count == 0 or not g.is_connected():
        raise ValueError("need a nonempty connected graph")
    order = _edge_order(g)
    bout = base.out_edges()
    vimg = [-1] * g.vertex_count
    emap = [-1] * g.num_directed_edges
    used = [set() for _ in range(g.vertex_count)]
    found, codes = [], set()
    nodes = [0]

    def rec(i):
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise ResourceLimitError("labeling search exceeded its node budget")
        if i == len(order):
            bg = BGraph(g, base, np.array(vimg), np.array(emap))
            c = canonical_code(bg)
            if c not in codes:
                codes.add(c)
                found.append(bg)
            return first_only
        e = order[i]
        u, w = int(g.tails[e]), int(g.heads[e])
        ie = int(g.inv[e])
        for x in bout[vimg[u]]:
            ix = int(base.inv[x])
            if (ie == e) != (ix == x):
                continue
            hx = int(base.heads[x])
            if vimg[w] >= 0 and vimg[w] != hx:
                continue
            if x in used[u]:
                continue
            new_w = vimg[w] < 0
            if new_w:
                vimg[w] = hx
            if ie != e:
                if ix in used[w] or (u == w and ix == x):
                    if new_w:
                        vimg[w] = -1
                    continue
                used[w].add(ix)
            used[u].add(x)
            emap[e], emap[ie] = x, ix
            if rec(i + 1):
                return True
            used[u].discard(x)
            if ie != e:
                used[w].discard(ix)
            emap[e] = emap[ie] = -1
            if new_w:
                vimg[w] = -1
        return False

    for b in range(base.vertex_count):
        vimg[0] = b
        if rec(0) and first_only:
            break
        vimg[0] = -1
    return found


def canonical_code(bg: BGraph) -> tuple:
    """Isomorphism invariant (complete) for connected etale B-graphs."""
    g = bg.graph
    lab = bg.edge_map.tolist()
    out = [sorted(o, key=lambda e: lab[e]) for o in g.out_edges()]
    heads = g.heads.tolist()
    best = None
    for root in range(g.vertex_count):
        index = {root: 0}
        seq = [root]
        code = [(int(bg.vertex_map[root]), -1)]
        k = 0
        while k < len(seq):
            v = seq[k]
            k += 1
            for e in out[v]:
                w = heads[e]
                if w not in index:
                    index[w] = len(seq)
                    seq.append(w)
                code.append((lab[e], index[w]))
            code.append((-1, -1))
        t = tuple(code)
        if best is None or t < best:
            best = t
    return best


# searches ----------------------------------------------------------------------

@dataclass
class TangleReport:
    type_id: str
    lengths: tuple
    order: Fraction
    rho: float
    strict: bool
    labelings: list = field(default_factory=list)

    def row(self):
        return {"type": self.type_id, "lengths": " ".join(map(str, self.lengths)),
                "order": str(self.order), "rho": repr(self.rho), "strict": int(self.strict),
                "labelings": len(self.labelings)}


def _type_search_box(t: Graph, thr: float, strict: bool, start: int, max_length: int):
    """Tangle points of the type within a certified box, or raise."""
    tr = TurnRadius(t)
    dim = len(variable_edges(t))
    halves = [("h", int(e)) for e in t.half_loops]
    memo = {}

    def rho(k, deleted=()):
        key = (k, deleted)
        if key not in memo:
            memo[key] = tr.rho(k, deleted)
        return memo[key]

    def tangle(k, deleted=()):
        return is_tangle_value(rho(k, deleted), thr, strict)

    if dim == 0:
        return tr, rho, tangle, halves, ([()] if tangle(()) else [])
    L = start
    while True:
        box = [k for k in product(range(1, L + 1), repeat=dim)]
        pts = [k for k in box if tangle(k)]
        ok = True
        for k in pts:
            face = tuple(i for i in range(dim) if k[i] == L)
            if face and not tangle(k, face):
                ok = False
                break
        if ok:
            return tr, rho, tangle, halves, pts
        if L >= max_length:
            raise CertificationError(f"tangle region of type could not be certified within length {max_length}")
        L = min(2 * L, max_length)


def minimal_tangles(base: Graph, r, strict: bool = False, rule: str = "reduced",
                    start_length: int = 4, max_length: int = 64,
                    with_reports: bool = False):
    """Minimal (strict) B-tangles of order < r, up to isomorphism.

    Every tangle of order < r contains one of them.  Returns a list of
    BGraph (and the per-type reports when ``with_reports``).
    """
    thr = tangle_threshold(base)
    has_half = len(base.half_loops) > 0
    dmax = int(base.degrees().max())
    found, codes, reports = [], set(), []
    for tid, t in enumerate_type_graphs(r, half_loops=has_half, rule=rule, max_degree=dmax):
        if t.order == 0:
            continue
        tr, rho, tangle, halves, pts = _type_search_box(t, thr, strict, start_length, max_length)
        dim = len(variable_edges(t))
        for k in pts:
            minimal = all(not tangle(k, (i,)) for i in range(dim)) and \
                all(not tangle(k, (h,)) for h in halves)
            if not minimal:
                continue
            g = realize(t, k)
            labs = [b for b in etale_labelings(g, base) if canonical_code(b) not in codes]
            for b in labs:
                codes.add(canonical_code(b))
            found += labs
            reports.append(TangleReport(tid, k, t.order, rho(k), rho(k) > thr + BAND, labs))
    return (found, reports) if with_reports else found


def tangle_certificates(t: Graph, base: Graph, strict: bool = False,
                        start: int = 2, max_cap: int = 1024) -> list[tuple]:
    """Minimal length vectors at which VLG(t, k) stops being a tangle."""
    thr = tangle_threshold(base)
    tr = TurnRadius(t)
    dim = len(variable_edges(t))
    if dim == 0:
        raise ValueError("type has no variable-length edges")
    not_tangle = lambda k: not is_tangle_value(tr.rho(k), thr, strict)
    limit = lambda q, dirs: not is_tangle_value(tr.rho(q, tuple(dirs)), thr, strict)
    return minimal_elements(UpperSet(dim, not_tangle, limit), start=start, max_cap=max_cap)


def has_tangle(cover, r, tangles=None, plans=None) -> bool:
    """Does the cover contain a B-tangle of order < r?"""
    if plans is None:
        if tangles is None:
            tangles = minimal_tangles(cover.base, r)
        plans = [LiftPlan(t) for t in tangles]
    return any(int(p.count(cover.assignment.sigma)[0]) > 0 for p in plans)


def tangle_indicator(plans, sigma_batch: np.ndarray) -> np.ndarray:
    """Boolean per cover in a (T, m, n) batch: contains any planned tangle."""
    hit = np.zeros(sigma_batch.shape[0], bool)
    for p in plans:
        hit |= p.count(sigma_batch) > 0
    return hit


def fundamental_order(base: Graph, length_cap: int | None = None,
                      rule: str = "reduced") -> Fraction:
    """Smallest order of a strict B-tangle, searched over type graphs of
    order below order(B) with lengths up to ``length_cap`` (default |V_B|).

    B itself is a strict tangle, so the answer is at most order(B).
    """
    thr = tangle_threshold(base)
    cap = base.vertex_count if length_cap is None else int(length_cap)
    has_half = len(base.half_loops) > 0
    dmax = int(base.degrees().max())
    for tid, t in enumerate_type_graphs(base.order, half_loops=has_half, rule=rule,
                                        max_degree=dmax, min_order=Fraction(1, 2)):
        tr = TurnRadius(t)
        dim = len(variable_edges(t))
        for k in product(range(1, cap + 1), repeat=dim):
            if is_tangle_value(tr.rho(k), thr, strict=True):
                if etale_labelings(realize(t, k), base, first_only=True):
                    return t.order
    return base.order


def bouquet_fundamental_order(d: int) -> int:
    """For a single vertex with d/2 whole-loops: m - 1 for the least m with
    2m - 1 > sqrt(d - 1)."""
    m = 1
    while 2 * m - 1 <= sqrt(d - 1) + BAND:
        m += 1
    return m - 1


def fundamental_order_probe(base: Graph, **kw) -> dict:
    """Compare the computed fundamental order with sqrt(d - 1) for a d-regular base."""
    eta = fundamental_order(base, **kw)
    d = int(base.degrees().max())
    out = {"eta": eta, "d": d, "sqrt_d_minus_1": sqrt(d - 1),
           "eta_exceeds_sqrt_d_minus_1": float(eta) > sqrt(d - 1)}
    if base.vertex_count == 1 and len(base.half_loops) == 0:
        out["bouquet_formula"] = bouquet_fundamental_order(d)
    return out
