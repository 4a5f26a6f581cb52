"""Grid functions on ``[0, 2**m)**d`` with unit cell measure.

Includes L^p norms, localized averages and the p-maximal function over all
integer-cornered cubes of dyadic sidelength (functions are extended by zero
outside the grid).
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dyadic import Box, Cube


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim not in (1, 2):
            raise ValueError("only d = 1 or d = 2 grids are supported")
        n = v.shape[0]
        if any(k != n for k in v.shape) or n < 1 or n & (n - 1):
            raise ValueError(f"grid shape {v.shape} is not [0, 2^m)^d")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, m: int, dim: int) -> "GridFunction":
        return cls(np.zeros((1 << m,) * dim))

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def extent(self) -> int:
        return int(round(math.log2(self.n)))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(values)

    def restrict(self, region) -> "GridFunction":
        """Multiply by the indicator of a Cube, Box or boolean mask."""
        if isinstance(region, Cube):
            region = region.box()
        if isinstance(region, Box):
            region = region.mask(self.n)
        return GridFunction(np.where(region, self.values, 0.0))

    def support(self) -> np.ndarray:
        return self.values != 0

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.values * c)

    __rmul__ = __mul__

    # -- serialization: header (dim, m) then row-major values

    def to_bytes(self) -> bytes:
        head = struct.pack("<ii", self.dim, self.extent)
        return head + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridFunction":
        dim, m = struct.unpack("<ii", data[:8])
        vals = np.frombuffer(data[8:], dtype="<f8")
        return cls(vals.reshape((1 << m,) * dim).copy())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow([self.dim, self.extent])
        for v in self.values.ravel():
            w.writerow([repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        dim, m = int(rows[0][0]), int(rows[0][1])
        vals = np.array([float(r[0]) for r in rows[1:]])
        return cls(vals.reshape((1 << m,) * dim))

    def save(self, path: str | Path) -> None:
        path = Path(path)
        if path.suffix == ".csv":
            path.write_text(self.to_csv())
        else:
            path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "GridFunction":
        path = Path(path)
        if path.suffix == ".csv":
            return cls.from_csv(path.read_text())
        return cls.from_bytes(path.read_bytes())


def _check_p(p: float) -> None:
    if not (p >= 1):
        raise ValueError(f"exponent p = {p} must be >= 1")


def _as_array(f) -> np.ndarray:
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)


def lp_norm(f, p: float) -> float:
    _check_p(p)
    a = np.abs(_as_array(f))
    top = float(a.max(initial=0.0))
    if math.isinf(p) or top == 0:
        return top
    # scale first so that tiny or huge values survive the power
    return top * float(np.sum((a / top) ** p) ** (1.0 / p))


def average(f, p: float, Q: Cube | Box) -> float:
    """``|Q|^{-1/p} ||f 1_Q||_p`` with the full geometric measure of ``Q``."""
    _check_p(p)
    a = _as_array(f)
    box = Q.box() if isinstance(Q, Cube) else Q
    sl = box.clipped_slices(a.shape[0])
    if sl is None:
        return 0.0
    piece = np.abs(a[sl])
    top = float(piece.max(initial=0.0))
    if math.isinf(p) or top == 0:
        return top
    return top * float((np.sum((piece / top) ** p) / box.measure) ** (1.0 / p))


# ---------------------------------------------------------------------------
# maximal function


def _shift_combine(a: np.ndarray, ell: int, op) -> np.ndarray:
    """``op(a[i], a[i + ell])`` along every axis (one doubling step)."""
    for ax in range(a.ndim):
        n = a.shape[ax]
        lo = [slice(None)] * a.ndim
        hi = [slice(None)] * a.ndim
        lo[ax] = slice(0, n - ell)
        hi[ax] = slice(ell, n)
        a = op(a[tuple(lo)], a[tuple(hi)])
    return a


def _window(a: np.ndarray, k: int, op) -> np.ndarray:
    """Reduce ``op`` over all windows of side ``2**k`` (anchored at the low corner)."""
    for j in range(k):
        a = _shift_combine(a, 1 << j, op)
    return a


def maximal_array(a: np.ndarray, p: float, max_scale: int | None = None) -> np.ndarray:
    """``M_p`` of the array ``a`` (zero outside), cubes of side ``2**0 .. 2**max_scale``.

    The array may be rectangular. Every cube with an integer corner that contains the point is considered,
    including cubes hanging over the array edge.
    """
    _check_p(p)
    a = np.abs(np.asarray(a, dtype=float))
    d = a.ndim
    if max_scale is None:
        max_scale = int(math.ceil(math.log2(max(a.shape))))
    top = float(a.max(initial=0.0))
    if top == 0:
        return np.zeros_like(a)
    a = a / top
    if math.isinf(p):
        powered = a
    else:
        powered = a**p
    P = (1 << max_scale) - 1
    padded = np.pad(powered, P)
    best = np.zeros_like(a)
    S = padded
    for k in range(max_scale + 1):
        ell = 1 << k
        if k > 0:
            S = _shift_combine(S, ell >> 1, np.add if not math.isinf(p) else np.maximum)
        # sliding max of the window sums over all corners c in [x - ell + 1, x]
        W = _window(S, k, np.maximum)
        start = P - ell + 1
        sl = tuple(slice(start, start + k) for k in a.shape)
        vals = W[sl]
        if not math.isinf(p):
            vals = vals / float(ell) ** d
        np.maximum(best, vals, out=best)
    if math.isinf(p):
        return best * top
    return best ** (1.0 / p) * top


def dyadic_maximal_array(a: np.ndarray, p: float) -> np.ndarray:
    """Dyadic variant: only lattice-aligned cubes inside the grid."""
    _check_p(p)
    a = np.abs(np.asarray(a, dtype=float))
    n = a.shape[0]
    d = a.ndim
    top = float(a.max(initial=0.0))
    if top == 0:
        return np.zeros_like(a)
    a = a / top
    powered = a if math.isinf(p) else a**p
    best = powered.copy()
    m = int(round(math.log2(n)))
    for k in range(1, m + 1):
        ell = 1 << k
        shape = []
        for _ in range(d):
            shape += [n // ell, ell]
        blocks = powered.reshape(shape)
        axes = tuple(range(1, 2 * d, 2))
        red = blocks.max(axis=axes) if math.isinf(p) else blocks.sum(axis=axes) / float(ell) ** d
        for ax in range(d):
            red = np.repeat(red, ell, axis=ax)
        np.maximum(best, red, out=best)
    return top * (best if math.isinf(p) else best ** (1.0 / p))


def maximal_function(f: GridFunction, p: float, dyadic: bool = False) -> GridFunction:
    """Pointwise sup of ``average(f, p, Q)`` over cubes ``Q`` containing the point."""
    a = _as_array(f)
    if dyadic:
        return GridFunction(dyadic_maximal_array(a, p))
    return GridFunction(maximal_array(a, p))
