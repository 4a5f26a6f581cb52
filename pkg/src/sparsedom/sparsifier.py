"""Iterative construction of a sparse collection dominating the truncated forms.

Level ``k`` holds a family ``S_k`` of disjoint dyadic cubes. For each ``Q`` in
it the exceptional set ``E_Q`` collects the points of ``3Q`` where a
normalized local maximal function of ``f1`` or ``f2`` exceeds ``lam``. The
maximal dyadic cubes ``L`` with ``9L`` inside ``E_{k+1} = U E_Q`` form the next
level; ``F_Q = Q \\ E_{k+1}`` are the distinguished disjoint subsets.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dyadic import (
    Box,
    Cube,
    StoppingCollection,
    Violation,
    _check_separation,
    union_mask,
    validate_stopping,
    whitney_maximal,
)
from .grid import average, maximal_array
from .kernels import KernelFamily


class SparsifierAbort(RuntimeError):
    def __init__(self, message: str, level: int, witnesses=(), lam: float | None = None):
        super().__init__(message)
        self.level = level
        self.witnesses = tuple(witnesses)
        self.lam = lam


def default_threshold(dim: int) -> float:
    return 2.0 ** (dim + 3)


# ---------------------------------------------------------------------------
# exceptional sets


def local_maximal_ratio(Q: Cube, f: np.ndarray, p: float) -> tuple[np.ndarray, tuple[slice, ...]]:
    """``M_p(f 1_{3Q}) / <f>_{p,3Q}`` on the cells of ``3Q`` inside the domain.

    Cubes wider than ``4 l(Q)`` cannot beat the smallest cube holding both the
    point and all of ``3Q``, so sides up to ``2**(s_Q + 2)`` suffice.
    """
    n = f.shape[0]
    three = Q.dilate(3)
    sl = three.clipped_slices(n)
    local = f[sl]
    norm = average(f, p, three)
    if norm == 0:
        return np.zeros(local.shape), sl
    return maximal_array(local, p, max_scale=Q.s + 2) / norm, sl


def exceptional_set(Q: Cube, f1, f2, p1: float, p2: float, lam: float) -> np.ndarray:
    """Mask of ``{x in 3Q : max_j M_{p_j}(f_j 1_{3Q})(x) / <f_j>_{p_j,3Q} > lam}``."""
    if not lam > 1:
        raise ValueError("threshold must exceed 1")
    f1 = getattr(f1, "values", f1)
    f2 = getattr(f2, "values", f2)
    out = np.zeros(f1.shape, dtype=bool)
    r1, sl = local_maximal_ratio(Q, f1, p1)
    r2, _ = local_maximal_ratio(Q, f2, p2)
    out[sl] = np.maximum(r1, r2) > lam
    return out


# ---------------------------------------------------------------------------
# results


@dataclass
class SparseCollection:
    """The cubes ``Q`` of all generations, their dilates ``3Q`` and ``F_Q``.

    ``eta`` is the measured ``min |F_Q| / |Q|``; ``eta_dilated`` the
    corresponding constant for the dilates, ``eta * 3**-d``.
    """

    tops: list[Cube]
    subsets: dict[Cube, np.ndarray]
    n: int
    generations: list[list[Cube]] = field(default_factory=list)
    eta: float = 1.0

    @property
    def dim(self) -> int:
        return self.tops[0].dim if self.tops else 1

    @property
    def boxes(self) -> list[Box]:
        return [Q.dilate(3) for Q in self.tops]

    @property
    def eta_dilated(self) -> float:
        return self.eta * 3.0 ** (-self.dim)

    def subset_mask(self, Q: Cube) -> np.ndarray:
        out = np.zeros((self.n,) * self.dim, dtype=bool)
        out[Q.slices()] = self.subsets[Q]
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "eta": self.eta,
            "eta_dilated": self.eta_dilated,
            "generations": [[Q.to_json() for Q in g] for g in self.generations],
            "subset_measure": {json.dumps(Q.to_json()): int(self.subsets[Q].sum()) for Q in self.tops},
        }


@dataclass
class LevelRecord:
    level: int
    cubes: list[Cube]
    exceptional: np.ndarray
    residual_cells: int
    ratios: dict[Cube, float]
    local_measures: dict[Cube, float]
    whitney: list[Cube]
    checks: dict[str, bool]
    witnesses: dict[str, list]
    seconds: float

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "cubes": [Q.to_json() for Q in self.cubes],
            "exceptional_measure": int(self.exceptional.sum()),
            "residual_cells": self.residual_cells,
            "ratios": [self.ratios[Q] for Q in self.cubes],
            "exceptional_over_cube": [self.local_measures[Q] for Q in self.cubes],
            "whitney": [L.to_json() for L in self.whitney],
            "checks": self.checks,
            "witnesses": {k: [[c.to_json() for c in w] for w in v] for k, v in self.witnesses.items()},
            "seconds": self.seconds,
        }


@dataclass
class IterationCertificate:
    lam: float
    p: tuple[float, float]
    top: Cube | None
    levels: list[LevelRecord] = field(default_factory=list)
    retries: int = 0

    @property
    def max_ratio(self) -> float:
        return max((r for lv in self.levels for r in lv.ratios.values()), default=0.0)

    @property
    def effective_theta(self) -> float:
        """``-log2(max ratio) / d``: the measure decay exponent achieved by the run."""
        r = self.max_ratio
        d = self.top.dim if self.top else 1
        return math.inf if r == 0 else -math.log2(r) / d

    @property
    def scale_profile(self) -> list[int]:
        return [max(Q.s for Q in lv.cubes) for lv in self.levels if lv.cubes]

    def passed(self) -> bool:
        return all(all(lv.checks.values()) for lv in self.levels)

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "p": list(self.p),
            "top": self.top.to_json() if self.top else None,
            "retries": self.retries,
            "max_ratio": self.max_ratio,
            "effective_theta": self.effective_theta,
            "scale_profile": self.scale_profile,
            "passed": self.passed(),
            "levels": [lv.to_json() for lv in self.levels],
        }

    def write_trace(self, directory: str | Path) -> list[Path]:
        """Exceptional sets ``E_{k+1}`` as plain PBM bitmaps, one per level."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for lv in self.levels:
            path = directory / f"exceptional_{lv.level + 1:02d}.pbm"
            write_pbm(path, lv.exceptional)
            paths.append(path)
        return paths


def write_pbm(path: str | Path, mask: np.ndarray) -> None:
    m = np.atleast_2d(np.asarray(mask, dtype=bool))
    rows = "\n".join(" ".join("1" if v else "0" for v in row) for row in m)
    Path(path).write_text(f"P1\n{m.shape[1]} {m.shape[0]}\n{rows}\n")


def read_pbm(path: str | Path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if tokens[0] != "P1":
        raise ValueError("not a plain PBM file")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array([t == "1" for t in tokens[3 : 3 + w * h]]).reshape(h, w)


# ---------------------------------------------------------------------------
# the construction


def _support_box(a: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    idx = np.nonzero(a)
    if idx[0].size == 0:
        return None
    return np.array([i.min() for i in idx]), np.array([i.max() + 1 for i in idx])


def select_top(f1: np.ndarray, f2: np.ndarray, min_scale: int) -> Cube:
    """Smallest lattice cube ``Q0`` with ``supp f1 in Q0``, ``supp f2 in 3Q0``, ``s >= min_scale``.

    Cubes whose triple stays inside the grid are preferred.
    """
    n = f1.shape[0]
    d = f1.ndim
    m = int(round(math.log2(n)))
    b1 = _support_box(f1)
    b2 = _support_box(f2)
    if b1 is None:
        b1 = b2
    fallback = None
    for s in range(max(min_scale, 0), m + 1):
        side = 1 << s
        if b1 is None:
            corner = tuple(((n // 2) // side) * side for _ in range(d))
        else:
            lo, hi = b1
            corner = tuple(int(x) // side * side for x in lo)
            if any(h > c + side for h, c in zip(hi, corner)):
                continue
        Q = Cube(s, corner)
        three = Q.dilate(3)
        if b2 is not None:
            lo2, hi2 = b2
            if not all(three.lo[a] <= lo2[a] and hi2[a] <= three.hi[a] for a in range(d)):
                continue
        if three.inside_domain(n):
            return Q
        if fallback is None:
            fallback = Q
    if fallback is None:
        return Cube(m, (0,) * d)
    return fallback


def _run(f1, f2, p1, p2, lam, min_scale, top, validate=True):
    n = f1.shape[0]
    d = f1.ndim
    cert = IterationCertificate(lam, (p1, p2), top)
    tops: list[Cube] = []
    subsets: dict[Cube, np.ndarray] = {}
    generations: list[list[Cube]] = []
    current = [top]
    previous_E = None
    level = 0
    degenerate = not f1.any() or not f2.any()
    while current:
        t0 = time.perf_counter()
        generations.append(current)
        E = np.zeros(f1.shape, dtype=bool)
        local_measures = {}
        if not degenerate:
            for Q in current:
                EQ = exceptional_set(Q, f1, f2, p1, p2, lam)
                local_measures[Q] = float(EQ.sum()) / Q.measure
                E |= EQ
        else:
            local_measures = {Q: 0.0 for Q in current}
        ratios = {Q: float(E[Q.slices()].sum()) / Q.measure for Q in current}
        bad = [Q for Q, r in ratios.items() if r > 0.5]
        if bad:
            raise SparsifierAbort(
                f"|Q cap E| > |Q|/2 at level {level} for {len(bad)} cubes (lambda = {lam})",
                level,
                bad,
                lam,
            )
        whitney = whitney_maximal(E) if E.any() else []
        covered = union_mask(whitney, n, d)
        residual = E & ~covered
        checks: dict[str, bool] = {}
        witnesses: dict[str, list] = {}
        # neighbor property over the whole level
        v = _check_separation(whitney)
        checks["neighbors"] = v is None
        if v is not None:
            witnesses["neighbors"] = [list(v.witnesses)]
        # nested exceptional sets
        if previous_E is not None:
            checks["nested"] = bool(not (E & ~previous_E).any())
        # stopping collections, one per cube
        equivalence = True
        stops: list[StoppingCollection] = []
        if validate:
            for Q in current:
                three = Q.dilate(3)
                members = [L for L in whitney if three.contains_box(L.box())]
                touching = [L for L in whitney if L.box().intersects(three)]
                if len(touching) != len(members):
                    equivalence = False
                    witnesses.setdefault("equivalence", []).append(
                        [Q] + [L for L in touching if L not in members]
                    )
                res = validate_stopping(Q, members, n, residual)
                if isinstance(res, Violation):
                    checks["stopping"] = False
                    witnesses.setdefault("stopping", []).append([Q, *res.witnesses])
                    raise SparsifierAbort(
                        f"stopping collection of {Q} fails the {res.axiom} axiom: {res.detail}",
                        level,
                        (Q, *res.witnesses),
                        lam,
                    )
                stops.append(res)
            checks["stopping"] = True
            checks["equivalence"] = equivalence
        nxt = []
        for Q in current:
            F = ~E[Q.slices()]
            subsets[Q] = F
            tops.append(Q)
        for L in whitney:
            if L.s >= min_scale and any(Q.contains(L) for Q in current):
                nxt.append(L)
        if nxt:
            checks["scale_decay"] = max(L.s for L in nxt) < max(Q.s for Q in current)
        cert.levels.append(
            LevelRecord(
                level,
                list(current),
                E,
                int(residual.sum()),
                ratios,
                local_measures,
                whitney,
                checks,
                witnesses,
                time.perf_counter() - t0,
            )
        )
        previous_E = E
        current = sorted(nxt)
        level += 1
    eta = min((float(subsets[Q].sum()) / Q.measure for Q in tops), default=1.0)
    return SparseCollection(tops, subsets, n, generations, eta), cert


def sparsify(
    K: KernelFamily | None,
    f1,
    f2,
    p1: float,
    p2: float,
    lam: float | None = None,
    retries: int = 2,
    top: Cube | None = None,
    validate: bool = True,
) -> tuple[SparseCollection, IterationCertificate]:
    """Build the sparse collection and its certificate.

    When some cube meets the exceptional set in more than half its measure the
    threshold is doubled, at most ``retries`` times, before aborting.
    """
    f1 = np.asarray(getattr(f1, "values", f1), dtype=float)
    f2 = np.asarray(getattr(f2, "values", f2), dtype=float)
    d = f1.ndim
    if lam is None:
        lam = default_threshold(d)
    min_scale = K.mu + 1 if K is not None else 1
    top_scale = K.nu if K is not None else 0
    if top is None:
        top = select_top(f1, f2, top_scale)
    err = None
    for attempt in range(retries + 1):
        try:
            S, cert = _run(f1, f2, p1, p2, lam * 2.0**attempt, min_scale, top, validate)
            cert.retries = attempt
            return S, cert
        except SparsifierAbort as exc:
            err = exc
    raise err


# ---------------------------------------------------------------------------
# audits


@dataclass
class SparsityReport:
    disjoint: bool
    inside: bool
    eta: float
    certified_eta: float
    witnesses: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.disjoint and self.inside and self.eta >= self.certified_eta - 1e-15


def verify_sparsity(S: SparseCollection) -> SparsityReport:
    """Recheck disjointness of the ``F_Q`` and recompute ``min |F_Q| / |Q|``."""
    n, d = S.n, S.dim
    owner = -np.ones((n,) * d, dtype=np.int64)
    witnesses = []
    inside = True
    eta = 1.0
    for i, Q in enumerate(S.tops):
        F = S.subsets[Q]
        if F.shape != (Q.side,) * d:
            inside = False
            witnesses.append(("shape", Q))
            continue
        region = owner[Q.slices()]
        clash = F & (region >= 0)
        if clash.any():
            j = int(region[clash].flat[0])
            witnesses.append(("overlap", S.tops[j], Q))
        region[F] = i
        eta = min(eta, float(F.sum()) / Q.measure)
    return SparsityReport(not any(w[0] == "overlap" for w in witnesses), inside, eta if S.tops else 1.0, S.eta, witnesses)


def children(S: SparseCollection) -> dict[Cube, list[Cube]]:
    """Cubes of the next generation inside each cube."""
    out: dict[Cube, list[Cube]] = {Q: [] for Q in S.tops}
    for g, nxt in zip(S.generations, S.generations[1:]):
        for L in nxt:
            for Q in g:
                if Q.contains(L):
                    out[Q].append(L)
                    break
    return out


def telescoping_terms(K: KernelFamily, S: SparseCollection, f1, f2, mu: int, nu: int) -> dict[Cube, float]:
    """``Lambda_Q(f1 1_Q) - sum_{children L} Lambda_L(f1 1_L)`` for each cube; they sum to the full form."""
    from .forms import lambda_Q

    kids = children(S)
    out = {}
    for Q in S.tops:
        v = lambda_Q(K, f1, f2, Q, mu, nu).value
        v -= math.fsum(lambda_Q(K, f1, f2, L, mu, nu).value for L in kids[Q])
        out[Q] = v
    return out
