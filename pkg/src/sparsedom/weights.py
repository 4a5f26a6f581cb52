"""Muckenhoupt constants, weighted operator ratios and the exponents of the
weighted corollaries of sparse domination."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .forms import apply_truncated
from .grid import GridFunction
from .kernels import KernelFamily


@dataclass(frozen=True, eq=False)
class Weight:
    w: GridFunction
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not isinstance(self.w, GridFunction):
            object.__setattr__(self, "w", GridFunction(self.w))
        if not (self.w.values > 0).all():
            raise ValueError("weights must be strictly positive")

    @property
    def values(self) -> np.ndarray:
        return self.w.values

    def ap(self, t: float) -> float:
        if t not in self._cache:
            self._cache[t] = ap_constant(self, t)
        return self._cache[t]


def constant_weight(n: int, dim: int, c: float = 1.0) -> Weight:
    return Weight(GridFunction(np.full((n,) * dim, float(c))), f"constant({c})")


def power_weight(n: int, dim: int, a: float, center: tuple[float, ...] | None = None) -> Weight:
    """``(1 + |x - x0|)**a``; ``x0`` defaults to the grid center."""
    if center is None:
        center = (n / 2,) * dim
    grids = np.meshgrid(*([np.arange(n, dtype=float)] * dim), indexing="ij")
    r = np.sqrt(sum((g - c) ** 2 for g, c in zip(grids, center)))
    return Weight(GridFunction((1.0 + r) ** a), f"power({a:g})")


def piecewise_weight(n: int, breakpoints: list[float], values: list[float]) -> Weight:
    """d = 1 step weight: ``values[i]`` on ``[breakpoints[i-1], breakpoints[i])`` (normalized)."""
    if len(values) != len(breakpoints) + 1:
        raise ValueError("need one more value than breakpoints")
    x = (np.arange(n) + 0.5) / n
    idx = np.searchsorted(np.asarray(breakpoints), x, side="right")
    return Weight(GridFunction(np.asarray(values, dtype=float)[idx]), "piecewise")


def _window_sums(a: np.ndarray, ell: int) -> np.ndarray:
    """Sums over all windows of side ``ell`` lying inside the array."""
    P = a
    for ax in range(a.ndim):
        P = np.cumsum(P, axis=ax)
        pad = [(0, 0)] * a.ndim
        pad[ax] = (1, 0)
        P = np.pad(P, pad)
    d = a.ndim
    k = a.shape[0] - ell + 1
    out = np.zeros((k,) * d)
    for corner in np.ndindex(*(2,) * d):
        sl = tuple(slice(ell, ell + k) if c else slice(0, k) for c in corner)
        out += (-1) ** (d - sum(corner)) * P[sl]
    return out


def ap_constant(w: Weight | GridFunction | np.ndarray, t: float) -> float:
    """``sup_Q <w>_Q <w**(1/(1-t))>_Q**(t-1)`` over integer-cornered cubes of
    dyadic side inside the grid."""
    if not t > 1:
        raise ValueError("A_t needs t > 1")
    a = w.values if isinstance(w, (Weight, GridFunction)) else np.asarray(w, dtype=float)
    # rescale first: the constant is invariant and the dual power stays in range
    a = a / a.max()
    sigma = a ** (1.0 / (1.0 - t))
    n = a.shape[0]
    best = 1.0
    k = 0
    while (1 << k) <= n:
        ell = 1 << k
        vol = float(ell) ** a.ndim
        Aw = _window_sums(a, ell) / vol
        As = _window_sums(sigma, ell) / vol
        best = max(best, float(np.max(Aw * As ** (t - 1))))
        k += 1
    return best


@dataclass(frozen=True)
class CorollaryBound:
    exponent: float
    value: float
    ap_index: float


def corollary_exponent(t: float, q: float) -> float:
    if math.isinf(q):
        if not t > 1:
            raise ValueError("q = inf needs t > 1")
        return max(t, 2.0) / (t - 1.0)
    if not q > 1:
        raise ValueError("q must exceed 1")
    qd = q / (q - 1.0)
    if not t > qd:
        raise ValueError(f"q = {q} needs t > q' = {qd}")
    return max(1.0, 1.0 / (t - qd))


def corollary_bound(t: float, q: float, ap: float) -> CorollaryBound:
    """``ap**exponent`` for the weighted corollaries.

    For ``q < inf`` the constant ``ap`` is meant for the index ``t / q'``; for
    ``q = inf`` for the index ``t``.
    """
    e = corollary_exponent(t, q)
    index = t if math.isinf(q) else t * (1.0 - 1.0 / q)
    return CorollaryBound(e, float(ap) ** e, index)


def weighted_norm(g: np.ndarray, w: Weight, t: float) -> float:
    return float(np.sum(np.abs(g) ** t * w.values) ** (1.0 / t))


def weighted_norm_ratio(K: KernelFamily, w: Weight, t: float, f, mu: int, nu: int) -> float:
    """``||T f||_{L^t(w)} / ||f||_{L^t(w)}`` for the truncation ``mu < s <= nu``."""
    if not t > 1:
        raise ValueError("t must exceed 1")
    a = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    if not a.any():
        raise ValueError("f must not vanish")
    Tf = apply_truncated(K, a, mu, nu).values
    return weighted_norm(Tf, w, t) / weighted_norm(a, w, t)


@dataclass
class SweepRow:
    a: float
    ap: float
    ratio: float
    exponent: float
    bound: float


@dataclass
class WeightSweep:
    t: float
    rows: list[SweepRow]
    constant: float
    calibration: tuple[float, float]
    violations: list[float]

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {header}\n")
        w = csv.writer(buf)
        w.writerow(["a", "ap", "ratio", "exponent", "bound", "fitted_bound"])
        for r in self.rows:
            w.writerow([r.a, repr(r.ap), repr(r.ratio), r.exponent, repr(r.bound), repr(self.constant * r.bound)])
        return buf.getvalue()


def weight_sweep(
    K: KernelFamily,
    f,
    t: float = 2.0,
    q: float = math.inf,
    exponents: list[float] | None = None,
    calibration: tuple[float, float] = (-0.3, 0.3),
    center: tuple[float, ...] | None = None,
) -> WeightSweep:
    """Power-weight sweep: ``ratio <= C * ap**exponent`` with ``C`` fitted on the calibration range."""
    a_vals = exponents if exponents is not None else [round(float(x), 1) + 0.0 for x in np.arange(-0.9, 0.91, 0.1)]
    a_arr = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    n, d = a_arr.shape[0], a_arr.ndim
    rows = []
    for a in a_vals:
        w = power_weight(n, d, a, center)
        ap = w.ap(t)
        cb = corollary_bound(t, q, ap)
        ratio = weighted_norm_ratio(K, w, t, a_arr, K.mu, K.nu)
        rows.append(SweepRow(a, ap, ratio, cb.exponent, cb.value))
    lo, hi = calibration
    cal = [r.ratio / r.bound for r in rows if lo <= r.a <= hi]
    C = max(cal, default=0.0)
    violations = [r.a for r in rows if r.ratio > C * r.bound * (1 + 1e-12)]
    return WeightSweep(t, rows, C, calibration, violations)


def sharpness_profile(sweep: WeightSweep) -> list[tuple[float, float, float]]:
    """``(a, ratio, ap**max(1, 1/(t-1)))``: growth of the ratio against the optimal power."""
    e = max(1.0, 1.0 / (sweep.t - 1.0))
    return [(r.a, r.ratio, r.ap**e) for r in sweep.rows]
