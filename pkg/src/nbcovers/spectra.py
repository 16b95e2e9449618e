"""Adjacency and Hashimoto spectra, the half-loop Ihara identity, new spectra.

The Ihara determinant identity checked here, for a graph with ``h``
half-loops, ``p`` undirected non-half-loop edges and vertex set V::

    det(mu I - H) = det(mu^2 I - mu A + D - I) * (mu + 1)^h * (mu^2 - 1)^(p - |V|)

The right-hand determinant is the characteristic polynomial of the
companion matrix [[A, -(D - I)], [I, 0]], which keeps everything integral.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

from .errors import NumericalError, ResourceLimitError
from .graph import Graph

MAX_EIG_DIMENSION = 4000
DENSE_PF_LIMIT = 512
EXACT_IHARA_MAX_EDGES = 64
BAND = 1e-9          # width of the "on the threshold" band for tangle tests


@dataclass(frozen=True)
class Spectrum:
    """Multiset of eigenvalues, sorted by (real, imag) for display."""
    values: np.ndarray
    source: str

    def __post_init__(self):
        v = np.asarray(self.values)
        order = np.lexsort((np.round(v.imag, 9), np.round(v.real, 9))) if np.iscomplexobj(v) \
            else np.argsort(v, kind="stable")
        object.__setattr__(self, "values", v[order])

    def __len__(self):
        return len(self.values)

    def distance(self, other: "Spectrum | np.ndarray") -> float:
        return multiset_distance(self.values, getattr(other, "values", other))

    def rows(self):
        v = np.asarray(self.values, dtype=complex)
        return [(self.source, float(z.real), float(z.imag)) for z in v]


def _check_dim(n: int):
    if n > MAX_EIG_DIMENSION:
        raise ResourceLimitError(f"eigensolve dimension {n} exceeds cap {MAX_EIG_DIMENSION}")


def _eigvals(m: np.ndarray, symmetric: bool) -> np.ndarray:
    _check_dim(m.shape[0])
    if m.shape[0] == 0:
        return np.zeros(0)
    try:
        return np.linalg.eigvalsh(m) if symmetric else np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on a {m.shape[0]}x{m.shape[0]} matrix: {exc}")


def multiset_distance(a, b) -> float:
    """Bottleneck-free matching distance: max |a_i - b_pi(i)| for the best
    assignment (sum of distances minimised), inf if the sizes differ."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if len(a) != len(b):
        return float("inf")
    if len(a) == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def multiset_difference(full, part, tol: float = 1e-6) -> np.ndarray:
    """Remove ``part`` from ``full`` by nearest matching; raises if a value
    of ``part`` has no partner within ``tol``."""
    full = np.asarray(full, dtype=complex)
    part = np.asarray(part, dtype=complex)
    if len(part) == 0:
        return full
    cost = np.abs(part[:, None] - full[None, :])
    r, c = linear_sum_assignment(cost)
    if len(r) and cost[r, c].max() > tol:
        raise NumericalError("old spectrum is not contained in the cover spectrum")
    keep = np.ones(len(full), bool)
    keep[c] = False
    return full[keep]


def adjacency_spectrum(g: Graph) -> Spectrum:
    return Spectrum(_eigvals(g.adjacency_matrix().astype(float), True), "adjacency")


def hashimoto_spectrum(g: Graph) -> Spectrum:
    return Spectrum(_eigvals(g.hashimoto_matrix().astype(float), False).astype(complex),
                    "hashimoto")


# Ihara ----------------------------------------------------------------------

def _ihara_exponents(g: Graph) -> tuple[int, int]:
    h = len(g.half_loops)
    pairs = (g.num_directed_edges - h) // 2
    return h, pairs - g.vertex_count


def _companion(g: Graph) -> np.ndarray:
    a = g.adjacency_matrix()
    d = np.diag(g.degrees())
    n = g.vertex_count
    top = np.hstack([a, -(d - np.eye(n, dtype=np.int64))])
    bottom = np.hstack([np.eye(n, dtype=np.int64), np.zeros((n, n), dtype=np.int64)])
    return np.vstack([top, bottom])


def ihara_polynomials(g: Graph):
    """Both sides of the identity as integer polynomials with denominators
    cleared.  Returns (lhs, rhs) as python-flint ``fmpz_poly``."""
    import flint

    def charpoly(m):
        if m.shape[0] == 0:
            return flint.fmpz_poly([1])
        return flint.fmpz_mat(m.tolist()).charpoly()

    h, x = _ihara_exponents(g)
    lhs = charpoly(g.hashimoto_matrix())
    rhs = charpoly(_companion(g)) * flint.fmpz_poly([1, 1]) ** h
    sq = flint.fmpz_poly([-1, 0, 1])
    if x >= 0:
        rhs = rhs * sq ** x
    else:
        lhs = lhs * sq ** (-x)
    return lhs, rhs


def ihara_residual(g: Graph, exact: bool | None = None, points: int = 64):
    """Discrepancy between the two sides of the Ihara identity.

    Exact mode (default for at most 64 directed edges) returns the max
    absolute coefficient difference as an ``int``.  Numeric mode evaluates
    both sides from eigenvalues on two circles and returns the max relative
    difference as a float.
    """
    if exact is None:
        exact = g.num_directed_edges <= EXACT_IHARA_MAX_EDGES
    if exact:
        lhs, rhs = ihara_polynomials(g)
        diff = (lhs - rhs).coeffs()
        return int(max((abs(int(c)) for c in diff), default=0))
    h, x = _ihara_exponents(g)
    lam_h = _eigvals(g.hashimoto_matrix().astype(float), False)
    lam_m = _eigvals(_companion(g).astype(float), False)
    dmax = max(int(g.degrees().max(initial=1)), 2)
    ang = 2 * np.pi * (np.arange(points) + 0.5) / points
    mus = np.concatenate([dmax * np.exp(1j * ang), np.exp(1j * ang)])
    worst = 0.0
    for mu in mus:
        left = np.sum(np.log(mu - lam_h))
        right = np.sum(np.log(mu - lam_m)) + h * np.log(mu + 1) + x * np.log(mu * mu - 1)
        worst = max(worst, abs(np.expm1(left - right)))
    return float(worst)


def ihara_spectrum(g: Graph) -> Spectrum:
    """Hashimoto spectrum predicted by the Ihara identity."""
    h, x = _ihara_exponents(g)
    roots = _eigvals(_companion(g).astype(float), False).astype(complex)
    extra = [-1.0] * h
    if x >= 0:
        extra += [1.0, -1.0] * x
        roots = np.concatenate([roots, np.array(extra, dtype=complex)])
    else:
        roots = np.concatenate([roots, np.array(extra, dtype=complex)])
        roots = multiset_difference(roots, np.array([1.0, -1.0] * (-x), dtype=complex), tol=1e-4)
    return Spectrum(roots, "ihara")


def regular_hashimoto_prediction(g: Graph) -> Spectrum:
    """For a d-regular graph: roots of mu^2 - lambda mu + (d-1) over the
    adjacency eigenvalues, plus the +-1 eigenvalues."""
    if not g.is_regular():
        raise ValueError("graph is not regular")
    d = int(g.degrees()[0])
    lam = adjacency_spectrum(g).values
    disc = np.sqrt(lam.astype(complex) ** 2 - 4 * (d - 1))
    roots = np.concatenate([(lam + disc) / 2, (lam - disc) / 2])
    h, x = _ihara_exponents(g)
    extra = np.array([-1.0] * h + [1.0, -1.0] * max(x, 0), dtype=complex)
    roots = np.concatenate([roots, extra])
    if x < 0:
        roots = multiset_difference(roots, np.array([1.0, -1.0] * (-x), dtype=complex), tol=1e-4)
    return Spectrum(roots, "regular-prediction")


# traces -----------------------------------------------------------------------

def matrix_power_traces(m: np.ndarray, kmax: int) -> list[int]:
    """Exact traces of m^1..m^kmax (python ints, no overflow)."""
    use_obj = m.shape[0] * float(np.abs(m).sum(axis=1).max(initial=1)) ** kmax > 2 ** 62
    base = m.astype(object) if use_obj else m.astype(np.int64)
    p = base.copy()
    out = []
    for _ in range(kmax):
        out.append(int(np.trace(p)))
        p = p @ base
    return out


# Perron-Frobenius radius ---------------------------------------------------------

def perron_frobenius_radius(m, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Spectral radius of a nonnegative matrix (dense or scipy sparse).

    Dense eigenvalues below ``DENSE_PF_LIMIT``; above it, power iteration
    on M + I per strongly connected component, stopped by Collatz-Wielandt
    bounds.
    """
    from scipy import sparse
    n = m.shape[0]
    if n == 0:
        return 0.0
    if n < DENSE_PF_LIMIT:
        dense = m.toarray() if sparse.issparse(m) else np.asarray(m, dtype=float)
        return float(np.abs(_eigvals(dense.astype(float), False)).max())
    sm = sparse.csr_matrix(m, dtype=float)
    k, labels = connected_components(sm, directed=True, connection="strong")
    best = 0.0
    for c in range(k):
        idx = np.flatnonzero(labels == c)
        sub = sm[idx][:, idx]
        if sub.nnz == 0:
            continue
        if len(idx) < DENSE_PF_LIMIT:
            best = max(best, float(np.abs(_eigvals(sub.toarray(), False)).max()))
            continue
        shifted = sub + sparse.identity(len(idx), format="csr")
        x = np.ones(len(idx))
        for it in range(max_iter):
            y = shifted @ x
            ratio = y / x
            lo, hi = ratio.min(), ratio.max()
            x = y / y.max()
            if hi - lo <= tol * hi:
                break
        else:
            raise NumericalError(f"power iteration did not converge in {max_iter} iterations "
                                 f"(bounds {lo - 1:.3e}, {hi - 1:.3e})")
        best = max(best, 0.5 * (lo + hi) - 1.0)
    return best


def hashimoto_radius(g: Graph) -> float:
    if g.num_directed_edges == 0:
        return 0.0
    if g.num_directed_edges < DENSE_PF_LIMIT:
        return perron_frobenius_radius(g.hashimoto_matrix())
    return perron_frobenius_radius(g.hashimoto_sparse())


# new spectra -----------------------------------------------------------------------

def _fibre_zero_basis(fibres: Sequence[np.ndarray], size: int) -> np.ndarray:
    """Orthonormal basis (columns) of vectors summing to zero on each fibre."""
    cols = []
    for fib in fibres:
        n = len(fib)
        if n < 2:
            continue
        # Helmert contrasts
        k = np.arange(1, n)
        block = np.zeros((n, n - 1))
        tri = np.arange(n)[:, None] < k[None, :]
        block[tri] = 1.0
        block[k, k - 1] = -k
        block /= np.sqrt(k * (k + 1))
        full = np.zeros((size, n - 1))
        full[fib] = block
        cols.append(full)
    if not cols:
        return np.zeros((size, 0))
    return np.hstack(cols)


def _new_operator(cover, kind: str):
    if kind == "adjacency":
        m = cover.graph.adjacency_matrix().astype(float)
        fibres = cover.vertex_fibres()
    elif kind == "hashimoto":
        m = cover.graph.hashimoto_matrix().astype(float)
        fibres = cover.edge_fibres()
    else:
        raise ValueError(f"unknown operator {kind!r}")
    sizes = {len(f) for f in fibres}
    if len(sizes) > 1:
        raise ValueError("fibres have unequal sizes; not a covering map")
    q = _fibre_zero_basis(fibres, m.shape[0])
    expected = m.shape[0] - len(fibres)
    if q.shape[1] != expected:
        raise ValueError(f"projector rank {q.shape[1]} differs from expected {expected}")
    mq = m @ q
    small = q.T @ mq
    if np.abs(mq - q @ small).max(initial=0.0) > 1e-8:
        raise ValueError("new subspace is not invariant; the map is not a covering")
    return small


def new_spectrum(cover, kind: str = "adjacency") -> Spectrum:
    """Eigenvalues of the cover operator restricted to fibre-sum-zero vectors."""
    small = _new_operator(cover, kind)
    vals = _eigvals(small, kind == "adjacency")
    return Spectrum(vals if kind == "adjacency" else vals.astype(complex), f"new-{kind}")


def new_spectrum_via_difference(cover, kind: str = "adjacency") -> Spectrum:
    """Cross-check: full spectrum minus the base spectrum as multisets."""
    spec = adjacency_spectrum if kind == "adjacency" else hashimoto_spectrum
    full = spec(cover.graph).values
    old = spec(cover.base).values
    return Spectrum(multiset_difference(full, old, tol=1e-6), f"new-{kind}-diff")


def new_spectrum_trace_residual(cover, kind: str = "adjacency", kmax: int = 6) -> float:
    """max_k |sum lambda_new^k - (Tr M_G^k - Tr M_B^k)| for k = 1..kmax."""
    lam = new_spectrum(cover, kind).values
    if kind == "adjacency":
        tg = matrix_power_traces(cover.graph.adjacency_matrix(), kmax)
        tb = matrix_power_traces(cover.base.adjacency_matrix(), kmax)
    else:
        tg = matrix_power_traces(cover.graph.hashimoto_matrix(), kmax)
        tb = matrix_power_traces(cover.base.hashimoto_matrix(), kmax)
    worst = 0.0
    for k in range(1, kmax + 1):
        s = np.sum(lam.astype(complex) ** k)
        worst = max(worst, abs(s - (tg[k - 1] - tb[k - 1])))
    return float(worst)


def rho_new(cover, kind: str = "adjacency") -> float:
    v = new_spectrum(cover, kind).values
    return float(np.abs(v).max(initial=0.0))


def _count_above(m: np.ndarray, t: float) -> int:
    """Number of eigenvalues of symmetric m strictly above t (Sylvester inertia)."""
    _check_dim(m.shape[0])
    if m.shape[0] == 0:
        return 0
    _, d, _ = sla.ldl(m - t * np.eye(m.shape[0]), lower=True)
    # d is block diagonal with 1x1 and 2x2 blocks; inertia from its eigenvalues
    n = d.shape[0]
    pos = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            pos += int(np.sum(np.linalg.eigvalsh(d[i:i + 2, i:i + 2]) > 0))
            i += 2
        else:
            pos += int(d[i, i] > 0)
            i += 1
    return pos


def count_new_adjacency_beyond(cover, t: float) -> int:
    """Number of new adjacency eigenvalues with |lambda| > t, by inertia
    counting on the cover and base matrices (no eigensolve).  Values within
    the tangle band above t are not counted."""
    if t >= int(cover.graph.degrees().max(initial=0)):
        return 0        # |lambda| never exceeds the maximum degree
    # eigenvalues sitting exactly on the threshold (old ones often do) must
    # fall on the same side in the cover and the base, so shift off them
    t = t + BAND * max(1.0, abs(t))
    ag = cover.graph.adjacency_matrix().astype(float)
    ab = cover.base.adjacency_matrix().astype(float)
    above = _count_above(ag, t) - _count_above(ab, t)
    below = _count_above(-ag, t) - _count_above(-ab, t)
    return above + below


# spectral inequalities -----------------------------------------------------------

def kotani_sunada_check(g: Graph, tol: float = 1e-8, imag_tol: float = 1e-7) -> tuple[bool, float]:
    """Non-real Hashimoto eigenvalues should satisfy |mu| <= sqrt(d_max - 1).

    Returns (holds, largest excess over the bound)."""
    mu = hashimoto_spectrum(g).values
    bound = np.sqrt(max(int(g.degrees().max(initial=1)) - 1, 0))
    nonreal = mu[np.abs(mu.imag) > imag_tol]
    excess = float((np.abs(nonreal) - bound).max(initial=-np.inf))
    return excess <= tol, excess


def spreader_separation_check(g: Graph, gamma: float, tol: float = 1e-8) -> bool:
    """For a d-regular gamma-spreader: lambda_i^2 <= d^2 - gamma^2/(4 + 2 gamma^2), i > 1."""
    from .graph import is_gamma_spreader
    if not is_gamma_spreader(g, gamma):
        raise ValueError("graph is not a gamma-spreader")
    d = int(g.degrees()[0])
    lam = np.sort(adjacency_spectrum(g).values)[::-1]
    bound = d * d - gamma * gamma / (4 + 2 * gamma * gamma)
    return bool(np.all(lam[1:] ** 2 <= bound + tol))
