"""Single-scale kernel families on the integer lattice.

Every family is of convolution type: ``K_s(x, y) = K_s(x - y)`` with the
stencil of scale ``s`` supported in the annulus ``2**(s-2) < |z| < 2**s``.
Stencils are stored on the offsets ``(-2**s, 2**s)**d``; index ``i`` along an
axis corresponds to the offset ``i - (2**s - 1)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import expit

from .localnorms import lebesgue_norm_sphere, orlicz_lorentz_norm

# ---------------------------------------------------------------------------
# smooth partition of unity


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    inner = (t > 0) & (t < 1)
    tt = np.where(inner, t, 0.5)
    # e(t) / (e(t) + e(1 - t)) with e(t) = exp(-1/t), written as a logistic
    val = expit(1.0 / (1.0 - tt) - 1.0 / tt)
    return np.where(t >= 1, 1.0, np.where(inner, val, 0.0))


def cutoff(r):
    """Equal to 1 on [0, 1/2] and 0 on [1, inf)."""
    return smooth_step(2.0 * (1.0 - np.asarray(r, dtype=float)))


def bump(r):
    """Radial profile supported in [1/4, 1]: ``cutoff(r) - cutoff(2r)``."""
    r = np.asarray(r, dtype=float)
    return cutoff(r) - cutoff(2.0 * r)


@dataclass(frozen=True)
class PartitionOfUnity:
    s_min: int
    s_max: int

    def __post_init__(self):
        if self.s_min < 1:
            raise ValueError("s_min must be at least 1")

    def __call__(self, r):
        return bump(r)

    @property
    def covered(self) -> tuple[float, float]:
        return 2.0 ** (self.s_min - 1), 2.0 ** (self.s_max - 1)

    def total(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for s in range(self.s_min, self.s_max + 1):
            out += bump(r * 2.0**-s)
        return out


def partition_of_unity(s_min: int, s_max: int) -> PartitionOfUnity:
    return PartitionOfUnity(s_min, s_max)


# ---------------------------------------------------------------------------
# functions on the sphere


@dataclass(frozen=True, eq=False)
class SphericalFunction:
    """Samples of ``Omega`` on the unit sphere.

    d = 1: ``samples = [Omega(+1), Omega(-1)]``, each point of measure 1.
    d = 2: ``samples[k] = Omega(angle 2 pi k / M)``, each of measure ``2 pi / M``.
    """

    samples: np.ndarray
    dim: int
    q: float = 2.0
    corrected: bool = False

    def __post_init__(self):
        v = np.array(self.samples, dtype=float).ravel()
        if self.dim == 1 and v.size != 2:
            raise ValueError("d = 1 needs exactly two samples")
        if self.dim not in (1, 2) or v.size == 0:
            raise ValueError("unsupported sphere")
        if not np.all(np.isfinite(v)):
            raise ValueError("samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "samples", v)

    @property
    def cell_measure(self) -> float:
        return 1.0 if self.dim == 1 else 2 * math.pi / self.samples.size

    @property
    def zero_mean(self) -> bool:
        return abs(self.samples.mean()) <= 1e-12 * max(np.abs(self.samples).mean(), 1e-300)

    def norm(self, q: float | None = None) -> float:
        return lebesgue_norm_sphere(self.samples, self.q if q is None else q, self.cell_measure)

    def orlicz_lorentz(self, q: float | None = None) -> float:
        return orlicz_lorentz_norm(self.samples, self.q if q is None else q, self.cell_measure)

    def centered(self) -> "SphericalFunction":
        return SphericalFunction(self.samples - self.samples.mean(), self.dim, self.q, corrected=True)

    def __call__(self, *coords):
        """``Omega(x / |x|)`` by sign lookup (d = 1) or nearest angular sample (d = 2)."""
        if self.dim == 1:
            (x,) = coords
            return np.where(np.asarray(x) >= 0, self.samples[0], self.samples[1])
        x, y = coords
        M = self.samples.size
        k = np.rint(np.arctan2(y, x) * (M / (2 * math.pi))).astype(np.int64) % M
        return self.samples[k]

    # -- file layout: (direction, value) for d = 1, (angle, value) for d = 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        if self.dim == 1:
            w.writerow([1, repr(float(self.samples[0]))])
            w.writerow([-1, repr(float(self.samples[1]))])
        else:
            M = self.samples.size
            for k, v in enumerate(self.samples):
                w.writerow([repr(2 * math.pi * k / M), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, dim: int, q: float = 2.0, correct: bool = False) -> "SphericalFunction":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        keys = np.array([float(r[0]) for r in rows])
        vals = np.array([float(r[1]) for r in rows])
        if dim == 1:
            if sorted(keys.tolist()) != [-1.0, 1.0]:
                raise ValueError("d = 1 needs rows for directions +1 and -1")
            vals = np.array([vals[keys == 1.0][0], vals[keys == -1.0][0]])
        else:
            order = np.argsort(keys)
            keys, vals = keys[order], vals[order]
            M = keys.size
            if not np.allclose(keys, 2 * math.pi * np.arange(M) / M, atol=1e-9):
                raise ValueError("angles must be the uniform grid 2 pi k / M")
        omega = cls(vals, dim, q)
        if not omega.zero_mean:
            if not correct:
                raise ValueError(f"Omega has nonzero mean {omega.samples.mean():.3e}")
            omega = omega.centered()
        return omega

    @classmethod
    def load(cls, path: str | Path, dim: int, q: float = 2.0, correct: bool = False) -> "SphericalFunction":
        return cls.from_csv(Path(path).read_text(), dim, q, correct)


def sign_omega() -> SphericalFunction:
    return SphericalFunction([1.0, -1.0], 1, q=math.inf)


def lacunary_omega(M: int = 1024, levels: int = 8, growth: float = 0.4, seed: int = 0, q: float = 2.0) -> SphericalFunction:
    """Piecewise constant ``Omega`` of height ``+-2**(growth k)`` on arcs of length ``2 pi 2**-k``.

    With ``growth < 1/q`` the function is in L^q but unbounded as ``levels`` grows.
    The result is centered to have mean zero.
    """
    rng = np.random.default_rng(seed)
    vals = np.zeros(M)
    start = 0
    for k in range(1, levels + 1):
        width = max(M >> k, 1)
        if start + width > M:
            break
        vals[start : start + width] = rng.choice([-1.0, 1.0]) * 2.0 ** (growth * k)
        start += width
    return SphericalFunction(vals - vals.mean(), 2, q=q, corrected=True)


def omega_split(omega: SphericalFunction, delta: float, j: int) -> tuple[SphericalFunction, SphericalFunction]:
    """Split ``Omega`` at height ``2**(delta j)`` into the bounded part and the large part."""
    if delta <= 0 or j < 1:
        raise ValueError("need delta > 0 and j >= 1")
    big = np.abs(omega.samples) > 2.0 ** (delta * j)
    low = np.where(big, 0.0, omega.samples)
    high = np.where(big, omega.samples, 0.0)
    return SphericalFunction(low, omega.dim, omega.q), SphericalFunction(high, omega.dim, omega.q)


def large_part_sum(omega: SphericalFunction, delta: float, q: float | None = None) -> tuple[float, list[float]]:
    """``sum_{j >= 1} ||Delta_j||_q``; terms vanish once ``2**(delta j) >= max |Omega|``."""
    q = omega.q if q is None else q
    top = float(np.abs(omega.samples).max(initial=0.0))
    terms = []
    j = 1
    while 2.0 ** (delta * j) < top:
        terms.append(omega_split(omega, delta, j)[1].norm(q))
        j += 1
    return float(sum(terms)), terms


# ---------------------------------------------------------------------------
# kernel families


def offsets(s: int, dim: int) -> tuple[np.ndarray, ...]:
    """Coordinate arrays of the stencil offsets ``(-2**s, 2**s)**d``."""
    r = np.arange(-(1 << s) + 1, 1 << s)
    if dim == 1:
        return (r.astype(float),)
    X, Y = np.meshgrid(r, r, indexing="ij")
    return X.astype(float), Y.astype(float)


def _radius(coords) -> np.ndarray:
    return np.sqrt(sum(c * c for c in coords))


@dataclass(frozen=True, eq=False)
class KernelFamily:
    """Scales ``mu < s <= nu`` of a family given by its pointwise formula.

    ``formula(s, *coords)`` returns the unsigned kernel value at the offsets;
    the stencil of scale ``s`` is ``signs[s] * formula(s, ...)``.
    """

    name: str
    dim: int
    mu: int
    nu: int
    formula: Callable
    signs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("kernel scales start at 1")

    @property
    def scales(self) -> range:
        return range(self.mu + 1, self.nu + 1)

    def sign(self, s: int) -> int:
        return int(self.signs.get(s, 1))

    def value(self, s: int, *coords) -> np.ndarray:
        """Formula evaluation at arbitrary offsets (zero outside the annulus)."""
        coords = tuple(np.asarray(c, dtype=float) for c in coords)
        r = _radius(coords)
        inside = (r > 2.0 ** (s - 2)) & (r < 2.0**s)
        out = np.zeros(np.broadcast(*coords).shape)
        if inside.any():
            sel = tuple(np.broadcast_to(c, out.shape)[inside] for c in coords)
            out[inside] = self.formula(s, *sel)
        return self.sign(s) * out

    def stencil(self, s: int) -> np.ndarray:
        if s not in self._cache:
            st = self.value(s, *offsets(s, self.dim))
            st.setflags(write=False)
            self._cache[s] = st
        return self._cache[s]

    def with_signs(self, signs: dict) -> "KernelFamily":
        return KernelFamily(self.name, self.dim, self.mu, self.nu, self.formula, dict(signs), self.params)

    def restricted(self, mu: int, nu: int) -> "KernelFamily":
        return KernelFamily(self.name, self.dim, mu, nu, self.formula, self.signs, self.params)

    def is_zero(self) -> bool:
        return all(not self.stencil(s).any() for s in self.scales)

    def norm0(self, q: float) -> float:
        key = ("norm0", q)
        if key not in self._cache:
            self._cache[key] = kernel_norm_0(self, q)
        return self._cache[key]

    def norm1(self, beta: float, j_max: int | None = None) -> float:
        key = ("norm1", beta, j_max)
        if key not in self._cache:
            self._cache[key] = kernel_norm_1(self, beta, j_max)
        return self._cache[key]

    # -- export

    def manifest(self, norms: tuple[float, ...] = (2.0, math.inf)) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "scales": list(self.scales),
            "signs": {str(s): self.sign(s) for s in self.scales},
            "params": {k: v for k, v in self.params.items() if isinstance(v, (int, float, str))},
            "norm0": {str(q): self.norm0(q) for q in norms},
            "norm1": {str(q): self.norm1(q) for q in norms},
        }

    def stencils_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["s", *("z%d" % i for i in range(self.dim)), "value"])
        for s in self.scales:
            st = self.stencil(s)
            c = (1 << s) - 1
            for idx in zip(*np.nonzero(st)):
                w.writerow([s, *(int(i) - c for i in idx), repr(float(st[idx]))])
        return buf.getvalue()

    def export(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{self.name}_stencils.csv").write_text(self.stencils_csv())
        (directory / f"{self.name}_manifest.json").write_text(json.dumps(self.manifest(), indent=2))


def zero_family(dim: int, mu: int, nu: int) -> KernelFamily:
    return KernelFamily("zero", dim, mu, nu, lambda s, *c: np.zeros_like(c[0]))


def rough_kernel(omega: SphericalFunction, s: int) -> np.ndarray:
    return rough_family(omega, s - 1, s).stencil(s)


def rough_family(omega: SphericalFunction, mu: int, nu: int, allow_nonzero_mean: bool = False) -> KernelFamily:
    """``K_s(x) = Omega(x') bump(2**-s |x|) / |x|**d``, summing to ``Omega(x')/|x|**d``."""
    if not omega.zero_mean and not allow_nonzero_mean:
        raise ValueError("Omega must have zero mean")
    d = omega.dim

    def formula(s, *coords):
        r = _radius(coords)
        return omega(*coords) * bump(r * 2.0**-s) / r**d

    return KernelFamily("rough", d, mu, nu, formula, params={"q": omega.q, "omega": omega})


def dini_kernel(K: Callable, dim: int, mu: int, nu: int, check: bool = True) -> KernelFamily:
    """``K_s(x) = K(x) bump(2**-s |x|)`` for an offset function ``K``."""

    def formula(s, *coords):
        return K(*coords) * bump(_radius(coords) * 2.0**-s)

    fam = KernelFamily("dini", dim, mu, nu, formula, params={"K": K})
    if check:
        worst = 0.0
        for s in fam.scales:
            coords = offsets(s, dim)
            r = _radius(coords)
            sel = r > 0
            vals = K(*(c[sel] for c in coords))
            worst = max(worst, float(np.max(r[sel] ** dim * np.abs(vals), initial=0.0)))
        if worst > 1 + 1e-12:
            warnings.warn(f"size normalization |x|^d |K(x)| <= 1 fails: {worst:.4g}")
    return fam


def br_delta(dim: int) -> float:
    return (dim - 1) / 2


def br_family(dim: int, mu: int, nu: int) -> KernelFamily:
    """Leading oscillatory term of the critical Bochner-Riesz kernel, unit amplitude."""
    delta = br_delta(dim)

    def formula(s, *coords):
        r = _radius(coords)
        return bump(r * 2.0**-s) * np.cos(2 * math.pi * (r - delta / 4)) / r**dim

    return KernelFamily("br", dim, mu, nu, formula, params={"delta": delta})


def br_kernel(s: int, dim: int) -> np.ndarray:
    return br_family(dim, s - 1, s).stencil(s)


def br_tail(dim: int, radius: int) -> np.ndarray:
    """``(1 + |x|)**-(d+1)`` on the offsets ``|x|_inf < radius``."""
    s = int(math.ceil(math.log2(max(radius, 1))))
    coords = offsets(s, dim)
    vals = (1.0 + _radius(coords)) ** -(dim + 1)
    keep = np.ones_like(vals, dtype=bool)
    for c in coords:
        keep &= np.abs(c) < radius
    return np.where(keep, vals, 0.0)


# ---------------------------------------------------------------------------
# kernel norms


def _dual(q: float) -> float:
    """``1 / q'``."""
    return 1.0 if math.isinf(q) else 1.0 - 1.0 / q


def _norm(a: np.ndarray, q: float) -> float:
    a = np.abs(a)
    if math.isinf(q):
        return float(a.max(initial=0.0))
    return float(np.sum(a**q) ** (1.0 / q))


def kernel_norm_0_terms(K: KernelFamily, q: float) -> dict[int, float]:
    if not q > 1:
        raise ValueError("q must lie in (1, inf]")
    return {s: 2.0 ** (s * K.dim * _dual(q)) * _norm(K.stencil(s), q) for s in K.scales}


def kernel_norm_0(K: KernelFamily, q: float) -> float:
    """``sup_s 2**(s d / q') ||K_s||_q``."""
    return max(kernel_norm_0_terms(K, q).values(), default=0.0)


def _shift_difference(st: np.ndarray, h: tuple[int, ...]) -> np.ndarray:
    """``K(z) - K(z + h)`` on the union of both supports."""
    H = max(abs(x) for x in h)
    a = np.pad(st, H)
    b = a
    for ax, hx in enumerate(h):
        b = np.roll(b, -hx, axis=ax)
    return a - b


def modulus_terms(K: KernelFamily, beta: float, j_max: int | None = None) -> list[float]:
    """``varpi_j`` for ``j = 1 .. j_max`` over integer shifts ``0 < |h|_inf < 2**(s-j-1)``."""
    if not beta > 1:
        raise ValueError("beta must lie in (1, inf]")
    top = max(K.scales, default=0)
    if j_max is None:
        j_max = max(top - 2, 0)
    terms = []
    for j in range(1, j_max + 1):
        best = 0.0
        for s in K.scales:
            if s - j - 1 < 1:
                continue
            bound = 1 << (s - j - 1)
            st = K.stencil(s)
            w = 2.0 ** (s * K.dim * _dual(beta))
            rng = range(-bound + 1, bound)
            shifts = [(h,) for h in rng] if K.dim == 1 else [(a, b) for a in rng for b in rng]
            for h in shifts:
                # K - K(.+h) and K(.-h) - K have equal norms; keep one of each pair
                if h <= tuple(-x for x in h):
                    continue
                best = max(best, w * _norm(_shift_difference(st, h), beta))
        terms.append(best)
    return terms


def kernel_norm_1(K: KernelFamily, beta: float, j_max: int | None = None) -> float:
    return float(sum(modulus_terms(K, beta, j_max)))


# ---------------------------------------------------------------------------
# presets


def preset_family(name: str, m: int) -> KernelFamily:
    """Kernel presets on a grid of side ``2**m``: scales ``1 .. m - 3``."""
    nu = max(m - 3, 1)
    if name == "dini-hilbert":
        return dini_kernel(lambda x: 1.0 / x, 1, 0, nu)
    if name == "hilbert":
        return rough_family(sign_omega(), 0, nu)
    if name == "rough-l2":
        return rough_family(lacunary_omega(), 0, nu)
    if name == "br-critical":
        return br_family(2, 0, nu)
    raise ValueError(f"unknown kernel preset {name!r}")


PRESETS = ("dini-hilbert", "rough-l2", "br-critical")
