"""Localized norms over stopping collections, the associated
Calderón-Zygmund decomposition, and the L^{q,1} log L norm on the sphere."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Cube, StoppingCollection
from .grid import GridFunction, maximal_array

# dilation factor of the cubes over which the maximal function is minimized
HAT = 32


@dataclass(frozen=True, eq=False)
class StoppedFunction:
    h: GridFunction
    collection: StoppingCollection
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        outside = ~self.collection.top.dilate(3).mask(self.h.n)
        if np.any(self.h.values[outside] != 0):
            raise ValueError("supp h must lie inside 3Q")

    def y_norm(self, p: float) -> float:
        if p not in self._cache:
            self._cache[p] = y_norm_terms(self.h, self.collection, p).value
        return self._cache[p]


@dataclass
class BadFunction:
    """``b = sum_L b_L`` with each ``b_L`` stored on the cells of ``L``."""

    pieces: dict[Cube, np.ndarray]
    n: int
    dim: int
    mean_zero: bool = False

    def __post_init__(self):
        for L, v in self.pieces.items():
            if v.shape != (L.side,) * self.dim:
                raise ValueError(f"piece for {L} has shape {v.shape}")
            if self.mean_zero:
                tol = 1e-12 * max(np.abs(v).sum(), np.finfo(float).tiny)
                if abs(v.sum()) > tol:
                    raise ValueError(f"piece on {L} does not have mean zero")

    def piece(self, L: Cube) -> GridFunction:
        out = np.zeros((self.n,) * self.dim)
        out[L.slices()] = self.pieces[L]
        return GridFunction(out)

    def total(self, select=None) -> GridFunction:
        out = np.zeros((self.n,) * self.dim)
        for L, v in self.pieces.items():
            if select is None or select(L):
                out[L.slices()] += v
        return GridFunction(out)

    def by_scale(self) -> dict[int, GridFunction]:
        scales = sorted({L.s for L in self.pieces})
        return {s: self.total(lambda L, s=s: L.s == s) for s in scales}


@dataclass
class YNormTerms:
    value: float
    outside: float
    per_cube: dict[Cube, float]
    residual: float
    dropped: list[Cube]


def y_norm_terms(h: GridFunction | np.ndarray, coll: StoppingCollection, p: float) -> YNormTerms:
    """Both terms of the localized norm ``||h||_{Y_p}``.

    The infimum over the 2^5-fold dilate of ``L`` runs over the grid points of
    the dilate inside the domain; cubes whose dilate misses the domain are
    dropped and listed. Residual cells contribute ``M_p h`` at the cell.
    """
    a = h.values if isinstance(h, GridFunction) else np.asarray(h, dtype=float)
    n = a.shape[0]
    if math.isinf(p):
        v = float(np.abs(a).max(initial=0.0))
        return YNormTerms(v, v, {}, 0.0, [])
    outside = float(np.abs(a[~coll.shadow]).max(initial=0.0))
    per_cube: dict[Cube, float] = {}
    dropped: list[Cube] = []
    residual = 0.0
    if coll.members or (coll.residual is not None and coll.residual.any()):
        M = maximal_array(a, p)
        for L in coll.members:
            sl = L.dilate(HAT).clipped_slices(n)
            if sl is None:
                dropped.append(L)
                continue
            per_cube[L] = float(M[sl].min())
        if coll.residual is not None and coll.residual.any():
            residual = float(M[coll.residual].max())
    value = max([outside, residual, *per_cube.values()])
    return YNormTerms(value, outside, per_cube, residual, dropped)


def y_norm(h: GridFunction | StoppedFunction, p: float, coll: StoppingCollection | None = None) -> float:
    if isinstance(h, StoppedFunction):
        return h.y_norm(p)
    if coll is None:
        raise ValueError("a stopping collection is required")
    return y_norm_terms(h, coll, p).value


@dataclass
class CZReport:
    y_norm_h: float
    g_norm: float
    b_norm: float
    max_local_average: float
    reconstruction_error: float
    max_mean_residue: float

    def bounds_hold(self, dim: int) -> bool:
        c = 2.0 ** (5 * dim)
        y = self.y_norm_h
        return (
            self.g_norm <= c * y * (1 + 1e-12)
            and self.b_norm <= 2 * c * y * (1 + 1e-12)
            and self.max_local_average <= c * y * (1 + 1e-12)
        )


def _zero_mean(v: np.ndarray) -> np.ndarray:
    out = v - v.mean()
    # second pass removes most of the rounding residue of the first
    return out - out.sum() / out.size


def cz_decompose(
    h: StoppedFunction | GridFunction,
    p: float,
    coll: StoppingCollection | None = None,
    report: bool = True,
) -> tuple[GridFunction, BadFunction, CZReport | None]:
    """``h = g + b`` with ``b_L = (h - <h>_L) 1_L`` for every member ``L``."""
    if isinstance(h, StoppedFunction):
        coll = h.collection
        hf = h.h
    else:
        hf = h
    if coll is None:
        raise ValueError("a stopping collection is required")
    a = hf.values
    g = a.copy()
    pieces = {}
    for L in coll.members:
        sl = L.slices()
        local = a[sl]
        pieces[L] = _zero_mean(local)
        g[sl] = local.mean()
    b = BadFunction(pieces, hf.n, hf.dim, mean_zero=True)
    G = GridFunction(g)
    rep = None
    if report:
        B = b.total()
        yh = y_norm(hf, p, coll)
        local_avgs = [
            (np.sum(np.abs(a[L.slices()]) ** p) / L.measure) ** (1 / p) for L in coll.members
        ]
        residues = [
            abs(v.sum()) / max(np.abs(v).sum(), np.finfo(float).tiny) for v in pieces.values()
        ]
        rep = CZReport(
            y_norm_h=yh,
            g_norm=float(np.abs(g).max(initial=0.0)),
            b_norm=y_norm(B, p, coll),
            max_local_average=float(max(local_avgs, default=0.0)),
            reconstruction_error=float(np.abs(G.values + B.values - a).max(initial=0.0)),
            max_mean_residue=float(max(residues, default=0.0)),
        )
    return G, b, rep


# ---------------------------------------------------------------------------
# Orlicz-Lorentz norm on the sphere


def _log_primitive(t: np.ndarray) -> np.ndarray:
    # d/dt [(e + t) log(e + t) - t] = log(e + t)
    return (math.e + t) * np.log(math.e + t) - t


def orlicz_lorentz_norm(samples: np.ndarray, q: float, cell_measure: float) -> float:
    """``q * int_0^inf log(e + t) |{|Omega| > t}|^{1/q} dt`` for sampled ``Omega``.

    Each sample carries the measure ``cell_measure``; the distribution function
    is piecewise constant, so the integral is evaluated exactly.
    """
    if not (1 <= q < math.inf):
        raise ValueError("q must lie in [1, inf)")
    v = np.sort(np.abs(np.asarray(samples, dtype=float)).ravel())
    v = v[v > 0]
    if v.size == 0:
        return 0.0
    levels, counts = np.unique(v, return_counts=True)
    # on [levels[i-1], levels[i]) the set {|Omega| > t} holds every sample >= levels[i]
    remaining = np.cumsum(counts[::-1])[::-1] * cell_measure
    lower = np.concatenate([[0.0], levels[:-1]])
    pieces = (_log_primitive(levels) - _log_primitive(lower)) * remaining ** (1.0 / q)
    return float(q * pieces.sum())


def lebesgue_norm_sphere(samples: np.ndarray, q: float, cell_measure: float) -> float:
    a = np.abs(np.asarray(samples, dtype=float))
    if math.isinf(q):
        return float(a.max(initial=0.0))
    return float((np.sum(a**q) * cell_measure) ** (1.0 / q))
