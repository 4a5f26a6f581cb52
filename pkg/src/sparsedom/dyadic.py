"""Dyadic cube geometry on the integer grid.

A grid of extent ``m`` in dimension ``d`` is the set of integer points
``[0, 2**m)**d``; each point ``x`` stands for the unit cell ``x + [0, 1)**d``.
Boxes (dilates of cubes) are resolved against the grid by cell-center
inclusion: the cell ``x`` belongs to the box ``[lo, hi)`` iff
``lo <= x + 1/2 < hi`` in every coordinate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Box:
    """Half-open axis-aligned box ``[lo, hi)`` in real coordinates."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def measure(self) -> float:
        return float(np.prod([h - l for l, h in zip(self.lo, self.hi)]))

    def cell_range(self) -> list[tuple[int, int]]:
        """Integer cell range ``[a, b)`` per axis (unclipped)."""
        return [
            (math.ceil(l - 0.5), math.ceil(h - 0.5)) for l, h in zip(self.lo, self.hi)
        ]

    def clipped_slices(self, n: int) -> tuple[slice, ...] | None:
        """Slices of the cells inside ``[0, n)**d``; ``None`` if empty."""
        out = []
        for a, b in self.cell_range():
            a, b = max(a, 0), min(b, n)
            if a >= b:
                return None
            out.append(slice(a, b))
        return tuple(out)

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros((n,) * self.dim, dtype=bool)
        sl = self.clipped_slices(n)
        if sl is not None:
            m[sl] = True
        return m

    def count_cells(self, n: int) -> int:
        sl = self.clipped_slices(n)
        if sl is None:
            return 0
        return int(np.prod([s.stop - s.start for s in sl]))

    def inside_domain(self, n: int) -> bool:
        return all(a >= 0 and b <= n for a, b in self.cell_range())

    def intersects(self, other: "Box") -> bool:
        return all(
            l1 < h2 and l2 < h1
            for l1, h1, l2, h2 in zip(self.lo, self.hi, other.lo, other.hi)
        )

    def contains_box(self, other: "Box") -> bool:
        return all(
            l1 <= l2 and h2 <= h1
            for l1, h1, l2, h2 in zip(self.lo, self.hi, other.lo, other.hi)
        )


@dataclass(frozen=True, order=True)
class Cube:
    """Dyadic cube ``corner + [0, 2**s)**d`` with ``corner`` divisible by ``2**s``."""

    s: int
    corner: tuple[int, ...]

    def __post_init__(self):
        if self.s < 0:
            raise ValueError(f"cube scale {self.s} is below the grid scale 0")
        if len(self.corner) not in (1, 2):
            raise ValueError("only d = 1 or d = 2 is supported")
        side = 1 << self.s
        if any(c % side for c in self.corner):
            raise ValueError(f"corner {self.corner} not aligned to side {side}")
        object.__setattr__(self, "corner", tuple(int(c) for c in self.corner))

    @classmethod
    def containing(cls, s: int, point: Sequence[int]) -> "Cube":
        side = 1 << s
        return cls(s, tuple((int(p) // side) * side for p in point))

    @property
    def dim(self) -> int:
        return len(self.corner)

    @property
    def side(self) -> int:
        return 1 << self.s

    @property
    def measure(self) -> int:
        return self.side**self.dim

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(c + self.side / 2 for c in self.corner)

    def box(self) -> Box:
        return Box(self.corner, tuple(c + self.side for c in self.corner))

    def dilate(self, lam: float) -> Box:
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        half = lam * self.side / 2
        return Box(tuple(c - half for c in self.center), tuple(c + half for c in self.center))

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(c, c + self.side) for c in self.corner)

    def mask(self, n: int) -> np.ndarray:
        return self.box().mask(n)

    def parent(self) -> "Cube":
        return Cube.containing(self.s + 1, self.corner)

    def children(self) -> list["Cube"]:
        if self.s == 0:
            return []
        h = self.side // 2
        return [
            Cube(self.s - 1, tuple(c + o for c, o in zip(self.corner, offs)))
            for offs in itertools.product((0, h), repeat=self.dim)
        ]

    def contains(self, other: "Cube") -> bool:
        return other.s <= self.s and Cube.containing(self.s, other.corner) == self

    def inside_domain(self, n: int) -> bool:
        return all(0 <= c and c + self.side <= n for c in self.corner)

    def to_json(self) -> list[int]:
        return [self.s, *self.corner]

    @classmethod
    def from_json(cls, data: Sequence[int]) -> "Cube":
        return cls(int(data[0]), tuple(int(c) for c in data[1:]))


def dilate(Q: Cube, lam: float) -> Box:
    return Q.dilate(lam)


def neighbors(L: Cube, Lp: Cube) -> bool:
    """``L ~ L'``: the 7-fold dilates meet and the scales differ by less than 8."""
    if L.dim != Lp.dim:
        raise ValueError("cubes of different dimension")
    return abs(L.s - Lp.s) < 8 and L.dilate(7).intersects(Lp.dilate(7))


def lattice_cubes(s: int, n: int, dim: int) -> Iterable[Cube]:
    side = 1 << s
    for corner in itertools.product(range(0, n, side), repeat=dim):
        yield Cube(s, corner)


# ---------------------------------------------------------------------------
# Whitney decomposition


def _prefix_sum(mask: np.ndarray) -> np.ndarray:
    """Zero-padded inclusive prefix sums (exact integer counts)."""
    P = mask.astype(np.int64)
    for ax in range(P.ndim):
        P = np.cumsum(P, axis=ax)
        pad = [(0, 0)] * P.ndim
        pad[ax] = (1, 0)
        P = np.pad(P, pad)
    return P


def _box_counts(P: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Counts over index boxes ``[lo, hi)`` using prefix sums ``P``; lo/hi are (k, d)."""
    d = P.ndim
    total = np.zeros(lo.shape[0], dtype=np.int64)
    for signs in itertools.product((0, 1), repeat=d):
        idx = tuple(np.where(sg, hi[:, a], lo[:, a]) for a, sg in enumerate(signs))
        sgn = (-1) ** (d - sum(signs))
        total += sgn * P[idx]
    return total


def _qualifying(E: np.ndarray, s: int, P: np.ndarray | None = None) -> np.ndarray:
    """Boolean lattice array: True where the scale-``s`` cube ``L`` has 9L inside E.

    ``9L`` must also lie inside the grid domain.
    """
    n = E.shape[0]
    d = E.ndim
    side = 1 << s
    k = n // side
    if P is None:
        P = _prefix_sum(~E)
    grids = np.meshgrid(*[np.arange(k) * side for _ in range(d)], indexing="ij")
    corners = np.stack([g.ravel() for g in grids], axis=1)
    lo = corners - 4 * side
    hi = corners + 5 * side
    ok = np.all((lo >= 0) & (hi <= n), axis=1)
    out = np.zeros(corners.shape[0], dtype=bool)
    if ok.any():
        out[ok] = _box_counts(P, lo[ok], hi[ok]) == 0
    return out.reshape((k,) * d)


def whitney_maximal(E: np.ndarray) -> list[Cube]:
    """Maximal dyadic cubes ``L`` with ``9L`` contained in the mask ``E``.

    ``9L`` has to lie inside the grid domain; cubes near the boundary never
    qualify. The property is inherited by children, so maximality is decided
    by looking at the parent only.
    """
    E = np.asarray(E, dtype=bool)
    n = E.shape[0]
    d = E.ndim
    m = int(round(math.log2(n)))
    P = _prefix_sum(~E)
    cubes: list[Cube] = []
    parent_ok = None
    for s in range(m, -1, -1):
        q = _qualifying(E, s, P)
        if parent_ok is None:
            maximal = q
        else:
            up = parent_ok
            for ax in range(d):
                up = np.repeat(up, 2, axis=ax)
            maximal = q & ~up
        side = 1 << s
        for idx in zip(*np.nonzero(maximal)):
            cubes.append(Cube(s, tuple(int(i) * side for i in idx)))
        parent_ok = q
    return cubes


def union_mask(cubes: Iterable[Cube], n: int, dim: int) -> np.ndarray:
    m = np.zeros((n,) * dim, dtype=bool)
    for c in cubes:
        sl = c.box().clipped_slices(n)
        if sl is not None:
            m[sl] = True
    return m


def dilate_union_mask(cubes: Iterable[Cube], lam: float, n: int, dim: int) -> np.ndarray:
    m = np.zeros((n,) * dim, dtype=bool)
    for c in cubes:
        sl = c.dilate(lam).clipped_slices(n)
        if sl is not None:
            m[sl] = True
    return m


# ---------------------------------------------------------------------------
# Stopping collections


@dataclass(frozen=True)
class StoppingCollection:
    """Validated stopping collection with top cube ``top``.

    ``residual`` marks cells of the exceptional set that no grid-scale
    Whitney cube covers. In the continuum those cells are tiled by Whitney
    cubes below the grid scale; those cubes carry no kernel scale, so they
    are kept implicit and only enter through the shadow.
    """

    top: Cube
    members: tuple[Cube, ...]
    n: int
    residual: np.ndarray | None = field(default=None, compare=False, repr=False)
    shadow: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.shadow is None:
            sh = union_mask(self.members, self.n, self.top.dim)
            if self.residual is not None:
                sh |= self.residual
            object.__setattr__(self, "shadow", sh)

    @property
    def dim(self) -> int:
        return self.top.dim

    def inside_top(self) -> list[Cube]:
        return [L for L in self.members if self.top.contains(L)]

    def to_json(self) -> list[list[int]]:
        return [self.top.to_json()] + [L.to_json() for L in self.members]


@dataclass
class Violation:
    axiom: str
    witnesses: tuple[Cube, ...]
    detail: str = ""


def _check_disjoint(members: Sequence[Cube]) -> Violation | None:
    by_scale = sorted(members, key=lambda c: -c.s)
    seen: dict[Cube, Cube] = {}
    for L in by_scale:
        if L in seen:
            return Violation("disjoint", (seen[L], L), "duplicate cube")
        seen[L] = L
    # a cube overlaps another iff one contains the other; walk ancestors
    present = set(members)
    for L in members:
        A = L
        top_s = max(c.s for c in members)
        while A.s < top_s:
            A = A.parent()
            if A in present:
                return Violation("disjoint", (A, L), "nested cubes overlap")
    return None


def _check_separation(members: Sequence[Cube]) -> Violation | None:
    if not members:
        return None
    lo = np.array([c.dilate(7).lo for c in members])
    hi = np.array([c.dilate(7).hi for c in members])
    s = np.array([c.s for c in members])
    for i in range(len(members)):
        far = np.abs(s - s[i]) >= 8
        if not far.any():
            continue
        meet = np.all((lo[i] < hi) & (lo < hi[i]), axis=1) & far
        if meet.any():
            j = int(np.nonzero(meet)[0][0])
            return Violation("separation", (members[i], members[j]), "7L meets 7L' with |s_L - s_L'| >= 8")
    return None


def validate_stopping(
    Q: Cube,
    members: Sequence[Cube],
    n: int,
    residual: np.ndarray | None = None,
) -> StoppingCollection | Violation:
    """Check the stopping-collection axioms; return the collection or a violation."""
    members = tuple(members)
    dim = Q.dim
    three_q = Q.dilate(3)
    for L in members:
        if L.dim != dim:
            return Violation("dimension", (L,))
        if not three_q.contains_box(L.box()):
            return Violation("containment", (L,), "L not inside 3Q")
    v = _check_disjoint(members)
    if v is not None:
        return v
    v = _check_separation(members)
    if v is not None:
        return v
    coll = StoppingCollection(Q, members, n, residual)
    if residual is not None and residual.any():
        # sub-grid Whitney cubes in residual cells sit >= 8 scales below any
        # member of scale >= 7, so their 7-fold dilates must avoid those members
        for L in members:
            if L.s >= 7 and (residual & L.dilate(7).mask(n)).any():
                return Violation("separation", (L,), "7L meets a residual cell")
    two_q = Q.dilate(2)
    for L in members:
        if L.dilate(3).intersects(two_q):
            nine = L.dilate(9)
            if not nine.inside_domain(n):
                return Violation("shadow", (L,), "9L leaves the grid domain")
            if not coll.shadow[nine.clipped_slices(n)].all():
                return Violation("shadow", (L,), "9L not inside the shadow")
    return coll


def collection_to_json(coll: StoppingCollection) -> list[list[int]]:
    return coll.to_json()


def collection_from_json(
    data: Sequence[Sequence[int]], n: int, residual: np.ndarray | None = None
) -> StoppingCollection | Violation:
    """Inverse of ``collection_to_json``; residual cells are not part of the JSON and are passed separately."""
    top = Cube.from_json(data[0])
    return validate_stopping(top, [Cube.from_json(c) for c in data[1:]], n, residual)
