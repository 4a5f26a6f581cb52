"""Experiment harness: domination reports, localized lemma checks, the adjoint
remainder, decay profiles and the weak (1,1) diagnostic.

Every report stores the raw numbers its headline value is computed from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dyadic import Cube, StoppingCollection, Violation, union_mask, validate_stopping, whitney_maximal
from .forms import (
    active_scales,
    apply_local,
    convolve_stencil,
    lambda_stop,
    psf,
    scale_values,
    uniform_truncation_bound,
)
from .kernels import KernelFamily, SphericalFunction, large_part_sum, omega_split, rough_family
from .localnorms import BadFunction, cz_decompose, y_norm
from .sparsifier import sparsify, telescoping_terms, verify_sparsity


def dual(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


# ---------------------------------------------------------------------------
# domination


@dataclass
class DominationReport:
    kernel: str
    p: tuple[float, float]
    n: int
    dim: int
    scale_values: dict[int, float]
    values: dict[tuple[int, int], float]
    psf: float
    ratio: float
    lam: float
    eta: float
    retries: int = 0
    sparsity_ok: bool = True
    certificate_ok: bool = True
    telescoping_error: float = 0.0
    p_profile: dict[float, tuple[float, float]] = field(default_factory=dict)

    def recompute(self) -> float:
        top = max(self.values.values(), default=0.0)
        return top / self.psf if self.psf > 0 else 0.0

    @property
    def hard_ok(self) -> bool:
        return self.sparsity_ok and self.certificate_ok and self.telescoping_error <= 1e-9

    def to_json(self) -> dict:
        return {
            "kernel": self.kernel,
            "p": list(self.p),
            "n": self.n,
            "dim": self.dim,
            "scale_values": {str(k): v for k, v in self.scale_values.items()},
            "values": [[mu, nu, v] for (mu, nu), v in sorted(self.values.items())],
            "psf": self.psf,
            "ratio": self.ratio,
            "lambda": self.lam,
            "eta": self.eta,
            "retries": self.retries,
            "sparsity_ok": self.sparsity_ok,
            "certificate_ok": self.certificate_ok,
            "telescoping_error": self.telescoping_error,
            "p_profile": [[p, c, r] for p, (c, r) in self.p_profile.items()],
        }


def truncation_values(sv: dict[int, float], mu0: int, nu0: int) -> dict[tuple[int, int], float]:
    """``|Lambda_mu^nu|`` for every ``mu0 <= mu < nu <= nu0`` from per-scale values."""
    out = {}
    for mu in range(mu0, nu0):
        acc = []
        for nu in range(mu + 1, nu0 + 1):
            acc.append(sv.get(nu, 0.0))
            out[(mu, nu)] = abs(math.fsum(acc))
    return out


def domination_report(
    K: KernelFamily,
    f1,
    f2,
    p1: float,
    p2: float,
    lam: float | None = None,
    audit: bool = True,
    sweep_p: bool | None = None,
    ps: tuple[float, ...] = (4.0, 2.0, 1.5, 1.25),
) -> DominationReport:
    """Sparse collection for ``(f1, f2)`` and the ratios ``|Lambda_mu^nu| / PSF`` over all truncations.

    Rough families (and any family with ``sweep_p``) also get the ``(1, p)``
    ratios for each ``p`` in ``ps``, each with its own sparse collection.
    """
    f1 = np.asarray(getattr(f1, "values", f1), dtype=float)
    f2 = np.asarray(getattr(f2, "values", f2), dtype=float)
    S, cert = sparsify(K, f1, f2, p1, p2, lam)
    sv = scale_values(K, f1, f2, K.mu, K.nu)
    values = truncation_values(sv, K.mu, K.nu)
    P = psf(S, f1, f2, p1, p2)
    top = max(values.values(), default=0.0)
    ratio = top / P if P > 0 else 0.0
    tele = 0.0
    if audit and f1.any() and f2.any():
        full = math.fsum(sv.values())
        terms = telescoping_terms(K, S, f1, f2, K.mu, K.nu)
        scale = max(abs(full), math.fsum(abs(v) for v in sv.values()), 1e-300)
        tele = abs(math.fsum(terms.values()) - full) / scale
    profile = {}
    if sweep_p is None:
        sweep_p = "omega" in K.params
    if sweep_p and top > 0:
        for p in ps:
            Sp, _ = sparsify(K, f1, f2, 1.0, p, lam)
            Pp = psf(Sp, f1, f2, 1.0, p)
            C = top / Pp if Pp > 0 else 0.0
            profile[p] = (C, C * (p - 1.0) / p)
    return DominationReport(
        K.name,
        (p1, p2),
        f1.shape[0],
        f1.ndim,
        sv,
        values,
        P,
        ratio,
        cert.lam,
        S.eta,
        cert.retries,
        verify_sparsity(S).ok,
        cert.passed(),
        tele,
        profile,
    )


def p_profile(
    K: KernelFamily,
    pairs: list[tuple[np.ndarray, np.ndarray]],
    ps: tuple[float, ...] = (4.0, 2.0, 1.5, 1.25),
    lam: float | None = None,
) -> dict[float, tuple[float, float]]:
    """Measured constant of the ``(1, p)`` sparse bound and its value divided by ``p/(p-1)``."""
    out = {}
    for p in ps:
        C = max(domination_report(K, f1, f2, 1.0, p, lam, audit=False).ratio for f1, f2 in pairs)
        out[p] = (C, C * (p - 1.0) / p)
    return out


# ---------------------------------------------------------------------------
# random stopping collections and functions on them


def random_stopping(rng: np.random.Generator, top: Cube, n: int, pieces: int | None = None) -> StoppingCollection:
    """Whitney cubes of a random union of boxes inside ``3Q``.

    With the exceptional set inside ``3Q`` every one of its cells is covered
    by a member or left as a residual cell, so the axioms hold.
    """
    d = top.dim
    three = top.dilate(3)
    lo = np.array([max(int(math.ceil(x)), 0) for x in three.lo])
    hi = np.array([min(int(math.ceil(x)), n) for x in three.hi])
    for _ in range(100):
        E = np.zeros((n,) * d, dtype=bool)
        for _ in range(pieces or int(rng.integers(1, 5))):
            a = rng.integers(lo, hi)
            span = np.maximum(hi - lo, 4)
            w = rng.integers(span // 4, span // 2 + 1)
            b = np.minimum(a + w, hi)
            E[tuple(slice(int(x), int(y)) for x, y in zip(a, b))] = True
        members = [L for L in whitney_maximal(E) if three.contains_box(L.box())]
        residual = E & ~union_mask(members, n, d)
        res = validate_stopping(top, members, n, residual)
        if not isinstance(res, Violation):
            return res
    raise RuntimeError("could not draw a valid stopping collection")


def random_local(rng: np.random.Generator, coll: StoppingCollection, signed: bool = True, region: str = "triple") -> np.ndarray:
    """Random function supported in ``3Q`` (or ``Q``) intersected with the grid."""
    n, d = coll.n, coll.dim
    box = coll.top.dilate(3) if region == "triple" else coll.top.box()
    mask = box.mask(n)
    vals = rng.standard_normal((n,) * d) if signed else rng.random((n,) * d)
    keep = rng.random((n,) * d) < rng.uniform(0.1, 1.0)
    return np.where(mask & keep, vals, 0.0)


def random_bad(rng: np.random.Generator, coll: StoppingCollection, p: float = 1.0) -> BadFunction:
    h = random_local(rng, coll)
    # occasional large values make the pieces genuinely uneven
    h = h * np.where(rng.random(h.shape) < 0.02, 20.0, 1.0)
    _, b, _ = cz_decompose(_gf(h), p, coll, report=False)
    return b


def _gf(a):
    from .grid import GridFunction

    return GridFunction(a)


def scale_groups(b: BadFunction, members: list[Cube], floor: int | None = None) -> dict[int, np.ndarray]:
    """``b_t = sum_{s_L = t} b_L``; with ``floor`` all scales below it are merged into ``b_floor``."""
    out: dict[int, np.ndarray] = {}
    for L in members:
        if L not in b.pieces:
            continue
        t = L.s if floor is None else max(L.s, floor)
        arr = out.setdefault(t, np.zeros((b.n,) * b.dim))
        arr[L.slices()] += b.pieces[L]
    return {t: v for t, v in out.items() if v.any()}


# ---------------------------------------------------------------------------
# localized lemmas


@dataclass
class LemmaReport:
    constants: dict[str, list[float]]
    kernel_norms: dict[str, float]
    ceiling: float

    def max(self, name: str) -> float:
        return max(self.constants[name], default=0.0)

    @property
    def flagged(self) -> dict[str, int]:
        return {k: sum(c > self.ceiling for c in v) for k, v in self.constants.items()}

    def to_json(self) -> dict:
        return {
            "constants": self.constants,
            "max": {k: self.max(k) for k in self.constants},
            "kernel_norms": self.kernel_norms,
            "ceiling": self.ceiling,
            "flagged": self.flagged,
        }


def trivial_form(K: KernelFamily, b_groups: dict[int, np.ndarray], h: np.ndarray, j: int, scales) -> float:
    """``sum_s sum |K_s(x - y)| |b_{s-j}(y)| |h(x)|``."""
    total = []
    for s in scales:
        bt = b_groups.get(s - j)
        if bt is None:
            continue
        conv = convolve_stencil(np.abs(K.stencil(s)), np.abs(bt), s)
        total.append(float(np.sum(conv * np.abs(h))))
    return math.fsum(total)


def lemma_checks(
    K: KernelFamily,
    coll: StoppingCollection,
    trials: int,
    rng: np.random.Generator,
    q: float = 2.0,
    mu: int | None = None,
    nu: int | None = None,
) -> LemmaReport:
    """Empirical constants of the uniform, trivial and cancellation estimates.

    Each constant is the left side divided by ``|Q|``, the localized norms and
    the kernel norm of the estimate. ``q`` is the kernel exponent; the
    functions ``h`` are measured in ``Y_{q'}``.
    """
    mu = K.mu if mu is None else mu
    nu = K.nu if nu is None else nu
    alpha = dual(q)
    Q = coll.top
    vol = float(Q.measure)
    ct = uniform_truncation_bound(K)
    n0q = K.norm0(q)
    n0inf = K.norm0(math.inf)
    n1q = K.norm1(q)
    scales = list(active_scales(K, mu, min(Q.s, nu)))
    out = {"uniform": [], "trivial": [], "cancellation": []}
    for _ in range(trials):
        h1 = random_local(rng, coll)
        h2 = random_local(rng, coll)
        lhs = abs(lambda_stop(K, h1, h2, coll, mu, nu).value)
        den = ct * vol * y_norm(_gf(h1), 2.0, coll) * y_norm(_gf(h2), 2.0, coll)
        out["uniform"].append(lhs / den if den > 0 else 0.0)

        b = random_bad(rng, coll)
        B = b.total().values
        h = random_local(rng, coll)
        xb = y_norm(_gf(B), 1.0, coll)
        yh = y_norm(_gf(h), alpha, coll)
        groups = scale_groups(b, list(coll.members))
        js = range(1, (max(scales) - min(groups, default=0)) + 1) if scales and groups else []
        triv = max((trivial_form(K, groups, h, j, scales) for j in js), default=0.0)
        den = n0q * vol * xb * yh
        out["trivial"].append(triv / den if den > 0 else 0.0)

        canc = abs(lambda_stop(K, B, h, coll, mu, nu).value) + abs(lambda_stop(K, h, B, coll, mu, nu).value)
        den = (n0inf + n1q) * vol * xb * yh
        out["cancellation"].append(canc / den if den > 0 else 0.0)
    norms = {"truncation_l2": ct, "norm0_q": n0q, "norm0_inf": n0inf, "norm1_q": n1q, "q": q}
    return LemmaReport(out, norms, 2.0 ** (8 * Q.dim))


# ---------------------------------------------------------------------------
# adjoint representation


@dataclass
class RemainderReport:
    form: float
    main: float
    remainder: float
    unit: float

    @property
    def constant(self) -> float:
        return abs(self.remainder) / self.unit if self.unit > 0 else 0.0

    def to_json(self) -> dict:
        return {
            "form": self.form,
            "main": self.main,
            "remainder": self.remainder,
            "unit": self.unit,
            "constant": self.constant,
        }


def inner_part(b: BadFunction, coll: StoppingCollection) -> BadFunction:
    """``b_in``: the pieces on cubes ``L`` with ``3L`` meeting ``2Q``."""
    two = coll.top.dilate(2)
    pieces = {L: v for L, v in b.pieces.items() if L.dilate(3).intersects(two)}
    return BadFunction(pieces, b.n, b.dim)


def adjoint_remainder_check(
    K: KernelFamily,
    coll: StoppingCollection,
    h,
    b: BadFunction,
    q: float = 2.0,
    mu: int | None = None,
    nu: int | None = None,
) -> RemainderReport:
    """``V = Lambda_stop(h, b) - sum_j sum_s <K_s * h, b_in_{s-j}>`` with ``h`` restricted to ``Q``."""
    mu = K.mu if mu is None else mu
    nu = K.nu if nu is None else nu
    Q = coll.top
    h = np.asarray(getattr(h, "values", h), dtype=float)
    h = np.where(Q.mask(coll.n), h, 0.0)
    B = b.total().values
    form = lambda_stop(K, h, B, coll, mu, nu).value
    groups = scale_groups(inner_part(b, coll), list(b.pieces))
    main = []
    for s in active_scales(K, mu, min(Q.s, nu)):
        lower = [t for t in groups if t < s]
        if not lower:
            continue
        Th = convolve_stencil(K.stencil(s), h, s)
        main.extend(float(np.sum(groups[t] * Th)) for t in lower)
    main_v = math.fsum(main)
    qd = dual(q)
    unit = K.norm0(q) * Q.measure * y_norm(_gf(h), qd, coll) * y_norm(_gf(B), qd, coll)
    return RemainderReport(form, main_v, form - main_v, unit)


# ---------------------------------------------------------------------------
# decay in the scale gap


@dataclass
class DecayReport:
    mode: str
    profile: dict[int, float]
    total: float
    consistency: float
    slope: float
    split: dict[float, dict[int, tuple[float, float]]] = field(default_factory=dict)
    large_parts: dict[float, tuple[float, float, float]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "profile": {str(k): v for k, v in self.profile.items()},
            "total": self.total,
            "consistency": self.consistency,
            "slope": self.slope,
            "split": {str(dl): {str(j): list(v) for j, v in prof.items()} for dl, prof in self.split.items()},
            "large_parts": {str(dl): list(v) for dl, v in self.large_parts.items()},
        }


def fit_slope(profile: dict[int, float]) -> float:
    """Least-squares slope of ``log2 |value|`` against ``j`` (nan with fewer than two points)."""
    pts = [(j, math.log2(abs(v))) for j, v in profile.items() if abs(v) > 1e-300]
    if len(pts) < 2:
        return math.nan
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def gap_profile(K: KernelFamily, groups: dict[int, np.ndarray], h: np.ndarray, scales) -> tuple[dict[int, float], dict[int, list[float]]]:
    """``K^j = sum_s <K_s * b_{s-j}, h>`` and the per-scale terms behind it."""
    prof: dict[int, list[float]] = {}
    for s in scales:
        lower = [t for t in groups if t < s]
        if not lower:
            continue
        for t in lower:
            v = float(np.sum(convolve_stencil(K.stencil(s), groups[t], s) * h))
            prof.setdefault(s - t, []).append(v)
    return {j: math.fsum(v) for j, v in sorted(prof.items())}, prof


def decay_diagnostics(
    K: KernelFamily,
    coll: StoppingCollection,
    b: BadFunction,
    h,
    mode: str,
    deltas: tuple[float, ...] = (0.1, 0.25, 0.5),
    mu: int | None = None,
    nu: int | None = None,
) -> DecayReport:
    """Per-gap forms of ``Lambda_stop(b, h)``; in rough mode also the bounded/large split of ``Omega``.

    The oscillatory convention merges every piece of scale at most zero into ``b_0``.
    """
    if mode not in ("rough", "br"):
        raise ValueError("mode must be 'rough' or 'br'")
    mu = K.mu if mu is None else mu
    nu = K.nu if nu is None else nu
    Q = coll.top
    h = np.asarray(getattr(h, "values", h), dtype=float)
    members = coll.inside_top()
    groups = scale_groups(b, members, floor=0 if mode == "br" else None)
    scales = list(active_scales(K, mu, min(Q.s, nu)))
    profile, _ = gap_profile(K, groups, h, scales)
    B = np.zeros((b.n,) * b.dim)
    for L in members:
        if L in b.pieces:
            B[L.slices()] += b.pieces[L]
    total = lambda_stop(K, B, h, coll, mu, nu).value
    size = max(abs(total), math.fsum(abs(v) for v in profile.values()), 1e-300)
    consistency = abs(math.fsum(profile.values()) - total) / size
    report = DecayReport(mode, profile, total, consistency, fit_slope(profile))
    if mode == "rough":
        omega: SphericalFunction = K.params["omega"]
        for dl in deltas:
            split = {}
            for j in profile:
                low, high = omega_split(omega, dl, j)
                Hj = rough_family(low, K.mu, K.nu, allow_nonzero_mean=True)
                Vj = rough_family(high, K.mu, K.nu, allow_nonzero_mean=True)
                hv = 0.0
                vv = 0.0
                for s in scales:
                    bt = groups.get(s - j)
                    if bt is None:
                        continue
                    hv += float(np.sum(convolve_stencil(Hj.stencil(s), bt, s) * h))
                    vv += abs(float(np.sum(convolve_stencil(Vj.stencil(s), bt, s) * h)))
                split[j] = (abs(hv), vv)
            report.split[dl] = split
            total_large, _ = large_part_sum(omega, dl)
            # bounded Omega: the sup norm stands in for the Orlicz-Lorentz norm
            ol = float(np.abs(omega.samples).max()) if math.isinf(omega.q) else omega.orlicz_lorentz()
            report.large_parts[dl] = (total_large, ol, dl * total_large / ol if ol > 0 else 0.0)
    return report


# ---------------------------------------------------------------------------
# weak (1,1)


@dataclass
class Weak11Report:
    levels: list[tuple[float, int, float]]
    l1: float

    @property
    def value(self) -> float:
        return max((v for _, _, v in self.levels), default=0.0)

    def to_json(self) -> dict:
        return {"l1": self.l1, "value": self.value, "levels": [list(x) for x in self.levels]}


def weak11_profile(T: KernelFamily | Callable, f, mu: int | None = None, nu: int | None = None) -> Weak11Report:
    """``lam |{|T f| > lam}| / ||f||_1`` on ``lam = 2**k ||f||_1 / N**d``, ``k = 0 .. 2 d m``."""
    a = np.asarray(getattr(f, "values", f), dtype=float)
    l1 = float(np.abs(a).sum())
    if l1 == 0:
        raise ValueError("f must not vanish")
    n, d = a.shape[0], a.ndim
    m = int(round(math.log2(n)))
    if isinstance(T, KernelFamily):
        mu = T.mu if mu is None else mu
        nu = T.nu if nu is None else nu
        Tf, _ = apply_local(T, a, mu, nu)
    else:
        Tf = np.asarray(getattr(T(a), "values", T(a)), dtype=float)
    mag = np.sort(np.abs(Tf).ravel())
    levels = []
    for k in range(0, 2 * d * m + 1):
        lam = 2.0**k * l1 / float(n) ** d
        count = int(mag.size - np.searchsorted(mag, lam, side="right"))
        levels.append((lam, count, lam * count / l1))
    return Weak11Report(levels, l1)


def weak11_diagnostic(T: KernelFamily | Callable, f, mu: int | None = None, nu: int | None = None) -> float:
    return weak11_profile(T, f, mu, nu).value
