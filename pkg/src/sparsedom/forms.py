"""Truncated, localized and stopping-collection bilinear forms, the sparse
averaging form, and a periodic spectral Bochner-Riesz operator.

All forms are real: ``Lambda(f1, f2) = sum_x sum_y K(x - y) f1(y) f2(x)``.
Convolutions are zero-padded (non-periodic) except in ``br_spectral``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import signal

from .dyadic import Box, Cube, StoppingCollection
from .grid import GridFunction, average
from .kernels import KernelFamily
from .localnorms import BadFunction

# grids with at most this many points use direct summation for the convolutions
DIRECT_LIMIT = 1 << 12


def _arr(f) -> np.ndarray:
    if isinstance(f, GridFunction):
        return f.values
    if isinstance(f, BadFunction):
        return f.total().values
    return np.asarray(f, dtype=float)


@dataclass
class FormValue:
    value: float
    breakdown: dict[int, float] = field(default_factory=dict)

    @classmethod
    def from_breakdown(cls, breakdown: dict[int, float]) -> "FormValue":
        return cls(math.fsum(breakdown.values()), dict(breakdown))

    def __sub__(self, other: "FormValue") -> "FormValue":
        keys = set(self.breakdown) | set(other.breakdown)
        return FormValue.from_breakdown(
            {k: self.breakdown.get(k, 0.0) - other.breakdown.get(k, 0.0) for k in sorted(keys)}
        )

    def to_record(self, mu: int, nu: int, inputs: str = "") -> dict:
        return {
            "inputs": inputs,
            "mu": mu,
            "nu": nu,
            "value": self.value,
            "breakdown": {str(k): v for k, v in sorted(self.breakdown.items())},
        }


def inputs_hash(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(_arr(a), dtype="<f8").tobytes())
    return h.hexdigest()[:16]


def active_scales(K: KernelFamily, mu: int, nu: int) -> range:
    return range(max(mu, K.mu) + 1, min(nu, K.nu) + 1)


def convolve_stencil(st: np.ndarray, a: np.ndarray, s: int, method: str | None = None) -> np.ndarray:
    """``(K_s * a)(x) = sum_y K_s(x - y) a(y)`` on the grid, zero outside."""
    if method is None:
        method = "direct" if a.size <= DIRECT_LIMIT else "fft"
    full = signal.convolve(a, st, mode="full", method=method)
    c = (1 << s) - 1
    return full[tuple(slice(c, c + k) for k in a.shape)]


def correlate_stencil(st: np.ndarray, a: np.ndarray, s: int, method: str | None = None) -> np.ndarray:
    """``sum_x K_s(x - y) a(x)`` as a function of ``y`` (the adjoint of ``convolve_stencil``)."""
    flipped = st[tuple(slice(None, None, -1) for _ in range(st.ndim))]
    return convolve_stencil(flipped, a, s, method)


def scale_values(K: KernelFamily, f1, f2, mu: int, nu: int, method: str | None = None) -> dict[int, float]:
    a1, a2 = _arr(f1), _arr(f2)
    out = {}
    for s in active_scales(K, mu, nu):
        if not a1.any() or not a2.any():
            out[s] = 0.0
            continue
        out[s] = float(np.sum(convolve_stencil(K.stencil(s), a1, s, method) * a2))
    return out


def lambda_trunc(K: KernelFamily, f1, f2, mu: int, nu: int, method: str | None = None) -> FormValue:
    """``sum_{mu < s <= nu} sum_x sum_y K_s(x - y) f1(y) f2(x)``."""
    return FormValue.from_breakdown(scale_values(K, f1, f2, mu, nu, method))


def _restrict(a: np.ndarray, Q: Cube | Box) -> np.ndarray:
    box = Q.box() if isinstance(Q, Cube) else Q
    return np.where(box.mask(a.shape[0]), a, 0.0)


def lambda_Q(K: KernelFamily, f1, f2, Q: Cube, mu: int, nu: int, method: str | None = None) -> FormValue:
    """Truncated form of ``f1 1_Q`` with the upper scale capped at ``s_Q``."""
    return lambda_trunc(K, _restrict(_arr(f1), Q), f2, mu, min(Q.s, nu), method)


def locality_defect(K: KernelFamily, f1, f2, Q: Cube, mu: int, nu: int) -> float:
    """Change in ``lambda_Q`` when ``f2`` is zeroed outside ``3Q`` (zero by the annulus support)."""
    a = lambda_Q(K, f1, f2, Q, mu, nu).value
    b = lambda_Q(K, f1, _restrict(_arr(f2), Q.dilate(3)), Q, mu, nu).value
    return abs(a - b)


def lambda_stop(
    K: KernelFamily, f1, f2, coll: StoppingCollection, mu: int, nu: int, method: str | None = None
) -> FormValue:
    """``lambda_Q(top) - sum_{L in coll, L inside top} lambda_Q(L)``.

    Members are disjoint, so at each scale ``s`` the subtracted part is the form
    of ``f1`` restricted to the union of the members with ``s_L >= s``.
    """
    Q = coll.top
    a1 = _restrict(_arr(f1), Q)
    a2 = _arr(f2)
    inside = coll.inside_top()
    out = {}
    for s in active_scales(K, mu, min(Q.s, nu)):
        keep = np.ones(a1.shape, dtype=bool)
        for L in inside:
            if L.s >= s:
                keep[L.slices()] = False
        a = np.where(keep, a1, 0.0)
        if not a.any() or not a2.any():
            out[s] = 0.0
            continue
        out[s] = float(np.sum(convolve_stencil(K.stencil(s), a, s, method) * a2))
    return FormValue.from_breakdown(out)


def lambda_stop_by_pieces(
    K: KernelFamily, f1, f2, coll: StoppingCollection, mu: int, nu: int, method: str | None = None
) -> FormValue:
    """Literal evaluation: the top form minus one localized form per member."""
    total = lambda_Q(K, f1, f2, coll.top, mu, nu, method)
    for L in coll.inside_top():
        total = total - lambda_Q(K, f1, f2, L, mu, nu, method)
    return total


def lambda_stop_by_gap(
    K: KernelFamily, b: BadFunction, h, coll: StoppingCollection, mu: int, nu: int, method: str | None = None
) -> FormValue:
    """Stopping form of a bad function grouped by the scale gap ``j = s - s_L >= 1``.

    Each scale ``s`` pairs ``K_s`` with ``b_{s-j} = sum_{s_L = s - j} b_L``;
    the breakdown is keyed by ``j``.
    """
    Q = coll.top
    a2 = _arr(h)
    members = [L for L in coll.inside_top() if L in b.pieces]
    by_scale: dict[int, np.ndarray] = {}
    n = b.n
    for L in members:
        arr = by_scale.setdefault(L.s, np.zeros((n,) * b.dim))
        arr[L.slices()] += b.pieces[L]
    out: dict[int, float] = {}
    for s in active_scales(K, mu, min(Q.s, nu)):
        if not any(t < s for t in by_scale):
            continue
        corr = correlate_stencil(K.stencil(s), a2, s, method)
        for t, bt in by_scale.items():
            if t < s:
                out[s - t] = out.get(s - t, 0.0) + float(np.sum(bt * corr))
    return FormValue.from_breakdown(dict(sorted(out.items())))


def apply_truncated(K: KernelFamily, f, mu: int, nu: int, method: str | None = None) -> GridFunction:
    a = _arr(f)
    out = np.zeros_like(a)
    if a.any():
        for s in active_scales(K, mu, nu):
            out += convolve_stencil(K.stencil(s), a, s, method)
    return GridFunction(out)


def apply_local(K: KernelFamily, f, mu: int, nu: int, sparse_limit: int = 64) -> tuple[np.ndarray, tuple[slice, ...]]:
    """``T f`` on the smallest box outside of which it vanishes.

    Inputs with few nonzero cells are handled by adding shifted stencils, so a
    spike costs one stencil per scale regardless of the grid size.
    """
    a = _arr(f)
    n, d = a.shape[0], a.ndim
    scales = active_scales(K, mu, nu)
    idx = np.nonzero(a)
    if idx[0].size == 0 or len(scales) == 0:
        return np.zeros((0,) * d), tuple(slice(0, 0) for _ in range(d))
    reach = (1 << scales[-1]) - 1
    lo = [max(int(i.min()) - reach, 0) for i in idx]
    hi = [min(int(i.max()) + reach + 1, n) for i in idx]
    box = tuple(slice(l, h) for l, h in zip(lo, hi))
    out = np.zeros(tuple(h - l for l, h in zip(lo, hi)))
    if idx[0].size <= sparse_limit:
        for s in scales:
            st = K.stencil(s)
            c = (1 << s) - 1
            for point in zip(*idx):
                val = a[point]
                # stencil index j sits at x = point + j - c
                tgt, src = [], []
                for ax, x in enumerate(point):
                    start = x - c - lo[ax]
                    j0 = max(0, -start)
                    j1 = min(st.shape[ax], out.shape[ax] - start)
                    tgt.append(slice(start + j0, start + j1))
                    src.append(slice(j0, j1))
                out[tuple(tgt)] += val * st[tuple(src)]
        return out, box
    # dense input: convolve the patch of f that can reach the box
    patch = a[box]
    for s in scales:
        out += convolve_stencil(K.stencil(s), patch, s)
    return out, box


def apply_by_scale(K: KernelFamily, f, method: str | None = None) -> dict[int, np.ndarray]:
    a = _arr(f)
    return {s: convolve_stencil(K.stencil(s), a, s, method) for s in K.scales}


# ---------------------------------------------------------------------------
# sparse form


def psf(cubes, f1, f2, p1: float, p2: float) -> float:
    """``sum_Q |Q| <f1>_{p1,Q} <f2>_{p2,Q}`` over a collection of cubes or boxes."""
    if math.isinf(p1) or math.isinf(p2):
        raise ValueError("sparse form exponents must be finite")
    boxes = getattr(cubes, "boxes", cubes)
    a1, a2 = _arr(f1), _arr(f2)
    total = []
    for Q in boxes:
        box = Q.box() if isinstance(Q, Cube) else Q
        total.append(box.measure * average(a1, p1, box) * average(a2, p2, box))
    return math.fsum(total)


# ---------------------------------------------------------------------------
# Fourier side


def br_multiplier(n: int, dim: int, delta: float, bandwidth: float = 0.5) -> np.ndarray:
    """``(1 - |xi / B|**2)_+**delta`` on the discrete frequencies; delta = 0 is the open ball."""
    xi = np.fft.fftfreq(n)
    grids = np.meshgrid(*([xi] * dim), indexing="ij")
    rho2 = sum(g * g for g in grids) / bandwidth**2
    inside = rho2 < 1
    if delta == 0:
        return inside.astype(float)
    return np.where(inside, np.clip(1 - rho2, 0, None) ** delta, 0.0)


def br_spectral(f, delta: float, bandwidth: float = 0.5) -> GridFunction:
    """Bochner-Riesz multiplier applied on the periodic grid."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    a = _arr(f)
    mult = br_multiplier(a.shape[0], a.ndim, delta, bandwidth)
    return GridFunction(np.real(np.fft.ifftn(np.fft.fftn(a) * mult)))


def scale_symbols(K: KernelFamily, size: int | None = None) -> dict[int, np.ndarray]:
    """Fourier transforms ``sum_z K_s(z) e(-z xi)`` sampled on ``size**d`` frequencies."""
    top = max(K.scales, default=1)
    if size is None:
        size = max(8 << top, 256) if K.dim == 1 else max(4 << top, 64)
    out = {}
    for s in K.scales:
        st = K.stencil(s)
        c = (1 << s) - 1
        pad = np.zeros((size,) * K.dim)
        pad[tuple(slice(0, st.shape[0]) for _ in range(K.dim))] = st
        # move offset 0 to index 0 so the phase matches the offsets
        pad = np.roll(pad, shift=(-c,) * K.dim, axis=tuple(range(K.dim)))
        out[s] = np.fft.fftn(pad)
    return out


def truncation_norms(K: KernelFamily, size: int | None = None) -> dict[tuple[int, int], float]:
    """L^2 operator norm of every truncation ``mu < s <= nu`` (sup of the symbol)."""
    sym = scale_symbols(K, size)
    scales = list(K.scales)
    out = {}
    for i, mu in enumerate([K.mu] + scales[:-1]):
        acc = 0
        for nu in scales[i:]:
            acc = acc + sym[nu]
            out[(mu, nu)] = float(np.abs(acc).max())
    return out


def uniform_truncation_bound(K: KernelFamily, size: int | None = None) -> float:
    return max(truncation_norms(K, size).values(), default=0.0)


def cubes_of(items: Iterable) -> list[Box]:
    return [Q.box() if isinstance(Q, Cube) else Q for Q in items]
