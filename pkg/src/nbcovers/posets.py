"""Upper sets in the positive integer lattice: minimal elements and
Moebius (inclusion-exclusion) coefficients.

Points are tuples of positive ints, ordered componentwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import CertificationError, ResourceLimitError

Point = tuple


@dataclass
class UpperSet:
    """Membership oracle for an upward-closed subset of Z_{>=1}^dim.

    ``limit_contains(q, dirs)`` answers whether q + t*e_dirs is in the set
    for all large t; it is what lets the search certify that no minimal
    element lies outside the current box.  ``caps`` instead bounds every
    coordinate of every minimal element (as certified by the caller).
    """
    dim: int
    contains: Callable[[Point], bool]
    limit_contains: Callable[[Point, tuple], bool] | None = None
    caps: Sequence[int] | None = None
    vectorized: bool = False
    _memo: dict = field(default_factory=dict, repr=False)

    def member(self, p: Point) -> bool:
        if p not in self._memo:
            self._memo[p] = bool(self.contains(p))
        return self._memo[p]

    def grid(self, lengths: Sequence[int]) -> np.ndarray:
        """Membership on the box prod [1..L_i] as a boolean array."""
        if self.vectorized:
            axes = [np.arange(1, L + 1) for L in lengths]
            pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
            return np.asarray(self.contains(pts), dtype=bool).reshape(tuple(lengths))
        out = np.zeros(tuple(lengths), dtype=bool)
        for idx in np.ndindex(*lengths):
            out[idx] = self.member(tuple(i + 1 for i in idx))
        return out


def _minimal_mask(m: np.ndarray) -> np.ndarray:
    mask = m.copy()
    for ax in range(m.ndim):
        prev = np.zeros_like(m)
        sl_to = [slice(None)] * m.ndim
        sl_from = [slice(None)] * m.ndim
        sl_to[ax] = slice(1, None)
        sl_from[ax] = slice(None, -1)
        prev[tuple(sl_to)] = m[tuple(sl_from)]
        mask &= ~prev
    return mask


def _check_monotone(m: np.ndarray):
    for ax in range(m.ndim):
        d = np.diff(m.astype(np.int8), axis=ax)
        if np.any(d < 0):
            raise CertificationError("membership oracle is not upward closed")


def minimal_elements(u: UpperSet, start: int = 4, max_cap: int = 4096,
                     budget: int = 1 << 22) -> list[Point]:
    """All minimal elements of the upper set, certified complete.

    Grows the box [1..L]^dim by doubling until either the caller's caps are
    covered or the limit oracle shows that no ray leaving the box through a
    non-member face point ever enters the set.
    """
    if u.dim < 1:
        raise ValueError("dimension must be positive")
    if u.caps is not None:
        lengths = [int(c) for c in u.caps]
        if int(np.prod(lengths)) > budget:
            raise ResourceLimitError("box given by caps exceeds the evaluation budget")
        m = u.grid(lengths)
        _check_monotone(m)
        return sorted(tuple(int(i) + 1 for i in idx) for idx in np.argwhere(_minimal_mask(m)))
    if u.limit_contains is None:
        raise CertificationError("need caps or a limit oracle to certify minimal elements")
    L = max(1, start)
    while True:
        if L ** u.dim > budget:
            raise ResourceLimitError(f"box side {L} in dimension {u.dim} exceeds the budget")
        m = u.grid([L] * u.dim)
        _check_monotone(m)
        if _certified(u, m, L):
            return sorted(tuple(int(i) + 1 for i in idx) for idx in np.argwhere(_minimal_mask(m)))
        if L >= max_cap:
            raise CertificationError(f"could not certify minimal elements within side {max_cap}")
        L = min(2 * L, max_cap)


def _certified(u: UpperSet, m: np.ndarray, L: int) -> bool:
    on_face = np.zeros(m.shape, dtype=bool)
    for ax in range(u.dim):
        sl = [slice(None)] * u.dim
        sl[ax] = L - 1
        on_face[tuple(sl)] = True
    for idx in np.argwhere(on_face & ~m):
        q = tuple(int(i) + 1 for i in idx)
        face = tuple(i for i in range(u.dim) if q[i] == L)
        for r in range(1, len(face) + 1):
            for dirs in combinations(face, r):
                if u.limit_contains(q, dirs):
                    return False
    return True


def local_minimal(u: UpperSet, p: Point) -> bool:
    """p is in the set and no single-coordinate decrement is (sufficient
    for upper sets)."""
    if not u.member(p):
        return False
    for i in range(len(p)):
        if p[i] > 1:
            q = p[:i] + (p[i] - 1,) + p[i + 1:]
            if u.member(q):
                return False
    return True


def mobius_coefficients(minimals: Sequence[Point], max_grid: int = 1 << 24) -> dict[Point, int]:
    """Coefficients mu with 1_U = sum_p mu(p) 1_{x >= p} for the upper set
    generated by ``minimals``.

    Works on the grid of coordinate values that occur among the minimal
    elements (every join lies on it) using the product-of-chains
    Moebius function.
    """
    pts = np.array(sorted(set(tuple(p) for p in minimals)), dtype=np.int64)
    if len(pts) == 0:
        return {}
    dim = pts.shape[1]
    axes = [np.unique(pts[:, i]) for i in range(dim)]
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) > max_grid:
        raise ResourceLimitError(f"Moebius grid of shape {shape} too large")
    g = np.zeros(shape, dtype=np.int8)
    idx = tuple(np.searchsorted(axes[i], pts[:, i]) for i in range(dim))
    g[idx] = 1
    for ax in range(dim):
        g = np.maximum.accumulate(g, axis=ax)
    mu = g.astype(np.int64)
    for ax in range(dim):
        shifted = np.zeros_like(mu)
        sl_to = [slice(None)] * dim
        sl_from = [slice(None)] * dim
        sl_to[ax] = slice(1, None)
        sl_from[ax] = slice(None, -1)
        shifted[tuple(sl_to)] = mu[tuple(sl_from)]
        mu = mu - shifted
    out = {}
    for loc in np.argwhere(mu != 0):
        p = tuple(int(axes[i][loc[i]]) for i in range(dim))
        out[p] = int(mu[tuple(loc)])
    return out


def cone_sum(f, p: Point, extent: Sequence[int] | int | None = None) -> float:
    """sum_{q >= p} f(q).  ``f`` is a finite-support mapping, or a callable
    summed over the box [p, extent] (a truncation the caller controls)."""
    if isinstance(f, Mapping):
        return sum(v for q, v in f.items() if all(a >= b for a, b in zip(q, p)))
    if extent is None:
        raise ValueError("callable f needs a truncation extent")
    ext = [extent] * len(p) if isinstance(extent, int) else list(extent)
    total = 0.0
    for q in product(*[range(a, e + 1) for a, e in zip(p, ext)]):
        total += f(q)
    return total


def suffix_sums(values: np.ndarray) -> np.ndarray:
    """S[x] = sum over the box of values[y] for y >= x (componentwise)."""
    s = values.astype(float)
    for ax in range(values.ndim):
        s = np.flip(np.cumsum(np.flip(s, axis=ax), axis=ax), axis=ax)
    return s


def inversion_check(f, minimals: Sequence[Point], extent: int | None = None,
                    cone=None, total=None) -> float:
    """|sum_{x in U} f(x) - sum_p mu(p) sum_{q >= p} f(q)|.

    With ``extent`` both sides are computed on the box [1..extent]^dim from
    a vectorised ``f`` (called with coordinate arrays).  Alternatively pass
    closed forms: ``cone(p)`` for cone sums and ``total`` for the left side.
    """
    mu = mobius_coefficients(minimals)
    if cone is not None and total is not None:
        rhs = sum(c * cone(p) for p, c in mu.items())
        return abs(total - rhs)
    if extent is None:
        raise ValueError("need an extent, or closed forms for cone and total")
    dim = len(next(iter(minimals)))
    axes = np.meshgrid(*[np.arange(1, extent + 1)] * dim, indexing="ij")
    vals = np.asarray(f(*axes), dtype=float)
    pts = np.array(list(minimals))
    member = np.zeros(vals.shape, dtype=np.int8)
    inside = np.all(pts <= extent, axis=1)
    member[tuple((pts[inside] - 1).T)] = 1
    for ax in range(dim):
        member = np.maximum.accumulate(member, axis=ax)
    lhs = float(np.sum(vals[member.astype(bool)]))
    s = suffix_sums(vals)
    rhs = sum(c * s[tuple(np.array(p) - 1)] for p, c in mu.items() if max(p) <= extent)
    return abs(lhs - rhs)
