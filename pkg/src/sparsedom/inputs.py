"""Test inputs described in normalized coordinates ``[0, 1)**d`` so the same
profile can be sampled on grids of different sizes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import cutoff

# f1 lives inside the top cube [N/4, N/2)^d, f2 inside its triple [0, 3N/4)^d
F1_REGION = (0.3, 0.45)
F2_REGION = (0.05, 0.7)


@dataclass(frozen=True)
class Component:
    kind: str  # "box", "bump" or "spike"
    center: tuple[float, ...]
    width: float
    amplitude: float


@dataclass(frozen=True)
class Profile:
    dim: int
    components: tuple[Component, ...] = field(default_factory=tuple)

    def sample(self, n: int) -> np.ndarray:
        centers = (np.arange(n) + 0.5) / n
        grids = np.meshgrid(*([centers] * self.dim), indexing="ij")
        out = np.zeros((n,) * self.dim)
        for c in self.components:
            if c.kind == "spike":
                idx = tuple(min(int(x * n), n - 1) for x in c.center)
                out[idx] += c.amplitude
                continue
            dist = [np.abs(g - x) for g, x in zip(grids, c.center)]
            if c.kind == "box":
                inside = np.ones_like(out, dtype=bool)
                for dd in dist:
                    inside &= dd < c.width / 2
                out += c.amplitude * inside
            elif c.kind == "bump":
                r = np.sqrt(sum(dd * dd for dd in dist)) / (c.width / 2)
                # smooth radial bump: 1 near the center, 0 beyond half a width
                out += c.amplitude * cutoff(0.5 + 0.5 * r)
            else:
                raise ValueError(f"unknown component {c.kind!r}")
        return out


def random_profile(
    rng: np.random.Generator,
    dim: int,
    region: tuple[float, float],
    parts: int = 3,
    widths: tuple[float, float] = (0.02, 0.4),
) -> Profile:
    """Boxes and bumps inside ``region``; widths are fractions of the region's side."""
    lo, hi = region
    comps = []
    for _ in range(parts):
        kind = rng.choice(["box", "bump"])
        width = rng.uniform(*widths) * (hi - lo)
        center = tuple(rng.uniform(lo + width / 2, hi - width / 2, size=dim))
        comps.append(Component(str(kind), center, float(width), float(rng.uniform(0.2, 2.0))))
    return Profile(dim, tuple(comps))


def random_pair_profiles(rng: np.random.Generator, dim: int) -> tuple[Profile, Profile]:
    return random_profile(rng, dim, F1_REGION), random_profile(rng, dim, F2_REGION)


def pair_family(rng: np.random.Generator, dim: int, count: int) -> list[tuple[Profile, Profile]]:
    """Input pairs in normalized coordinates, for sweeps over grid sizes.

    Cycles through three shapes of ``f1``: a few wide pieces, many narrow
    pieces, and a single spike. ``f2`` is always a few wide pieces.
    """
    out = []
    for i in range(count):
        kind = i % 3
        f2 = random_profile(rng, dim, F2_REGION, 3, (0.1, 0.6))
        if kind == 0:
            f1 = random_profile(rng, dim, F1_REGION, 3, (0.2, 0.8))
        elif kind == 1:
            f1 = random_profile(rng, dim, F1_REGION, 8, (0.1, 0.3))
        else:
            f1 = Profile(dim, (Component("spike", tuple(rng.uniform(*F1_REGION, size=dim)), 0.0, 1.0),))
        out.append((f1, f2))
    return out


def random_compact(rng: np.random.Generator, n: int, dim: int, region: tuple[float, float], signed: bool = False) -> np.ndarray:
    """Random grid function on a random sub-box of ``region`` (normalized), with sparse spikes."""
    lo, hi = int(region[0] * n), int(np.ceil(region[1] * n))
    out = np.zeros((n,) * dim)
    a = rng.integers(lo, hi, size=dim)
    b = np.minimum(a + rng.integers(1, max(hi - lo, 2), size=dim), hi)
    sl = tuple(slice(int(x), int(y)) for x, y in zip(a, b))
    shape = out[sl].shape
    vals = rng.random(shape) if not signed else rng.standard_normal(shape)
    keep = rng.random(shape) < rng.uniform(0.05, 1.0)
    out[sl] = np.where(keep, vals, 0.0)
    # a few isolated spikes inside the region
    for _ in range(int(rng.integers(0, 4))):
        idx = tuple(int(rng.integers(lo, hi)) for _ in range(dim))
        out[idx] += rng.uniform(1, 20)
    return out


def random_pair(rng: np.random.Generator, n: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    kind = rng.integers(0, 3)
    if kind == 0:
        p1, p2 = random_pair_profiles(rng, dim)
        return p1.sample(n), p2.sample(n)
    if kind == 1:
        return random_compact(rng, n, dim, F1_REGION), random_compact(rng, n, dim, F2_REGION)
    f1 = spike(n, dim, tuple(rng.uniform(*F1_REGION, size=dim)))
    return f1, random_compact(rng, n, dim, F2_REGION)


def spike(n: int, dim: int, where: tuple[float, ...] | None = None, height: float = 1.0) -> np.ndarray:
    out = np.zeros((n,) * dim)
    if where is None:
        where = (0.375,) * dim
    out[tuple(min(int(x * n), n - 1) for x in where)] = height
    return out


def smooth_bump(n: int, dim: int, center: tuple[float, ...] | None = None, width: float = 0.1) -> np.ndarray:
    if center is None:
        center = (0.375,) * dim
    return Profile(dim, (Component("bump", center, width, 1.0),)).sample(n)
