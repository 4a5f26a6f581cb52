import math

import numpy as np
import pytest

import oracles
from sparsedom.dyadic import Cube, validate_stopping
from sparsedom.inputs import random_pair, spike
from sparsedom.kernels import KernelFamily, preset_family, zero_family
from sparsedom.localnorms import BadFunction
from sparsedom.suites import central_cube
from sparsedom.verify import (
    adjoint_remainder_check,
    decay_diagnostics,
    domination_report,
    dual,
    fit_slope,
    inner_part,
    lemma_checks,
    p_profile,
    random_bad,
    random_local,
    random_stopping,
    scale_groups,
    trivial_form,
    truncation_values,
    weak11_profile,
)


def test_dual_exponents():
    assert dual(1.0) == math.inf and dual(math.inf) == 1.0 and dual(2.0) == 2.0 and dual(3.0) == 1.5


# -- domination


def test_truncation_values_from_scale_values():
    sv = {1: 1.0, 2: -3.0, 3: 0.5}
    tv = truncation_values(sv, 0, 3)
    for mu in range(3):
        for nu in range(mu + 1, 4):
            assert tv[(mu, nu)] == abs(sum(sv[s] for s in range(mu + 1, nu + 1)))


def test_zero_kernel_has_zero_ratio(rng):
    K = zero_family(1, 0, 7)
    f1, f2 = random_pair(rng, 1024, 1)
    rep = domination_report(K, f1, f2, 1.0, 2.0)
    assert rep.ratio == 0.0 and rep.hard_ok


def test_report_ratio_recomputes(rng):
    K = preset_family("hilbert", 10)
    f1, f2 = random_pair(rng, 1024, 1)
    rep = domination_report(K, f1, f2, 1.0, 2.0)
    assert rep.ratio == rep.recompute() > 0
    assert rep.hard_ok
    assert rep.to_json()["ratio"] == rep.ratio


def test_ratio_is_invariant_under_rescaling(rng):
    K = preset_family("hilbert", 10)
    f1, f2 = random_pair(rng, 1024, 1)
    a = domination_report(K, f1, f2, 1.0, 2.0, audit=False).ratio
    b = domination_report(K, 8.0 * f1, 0.125 * f2, 1.0, 2.0, audit=False).ratio
    assert b == pytest.approx(a, rel=1e-12)


def test_rough_family_has_finite_p_profile(rng):
    K = preset_family("rough-l2", 5)
    pairs = [random_pair(rng, 32, 2) for _ in range(2)]
    prof = p_profile(K, pairs, ps=(2.0,))
    C, normalized = prof[2.0]
    assert 0 < C < math.inf and normalized == C / 2
    rep = domination_report(K, *pairs[0], 1.0, 2.0, ps=(2.0,))
    assert set(rep.p_profile) == {2.0}


# -- localized lemmas


def test_trivial_form_of_zero_bad_function(rng):
    K = preset_family("hilbert", 8)
    assert trivial_form(K, {}, rng.random(256), 2, range(1, 6)) == 0.0


def test_trivial_form_of_separated_supports():
    K = preset_family("hilbert", 10)
    b = np.zeros(1024)
    b[10:12] = [1.0, -1.0]
    h = np.zeros(1024)
    h[900:] = 1.0
    # the largest stencil reaches 2**4 cells, far short of the gap
    assert trivial_form(K, {1: b}, h, 3, range(1, 5)) == 0.0


def test_trivial_form_matches_absolute_double_sum(rng):
    K = preset_family("hilbert", 6)
    b = rng.standard_normal(64)
    h = rng.standard_normal(64)
    Kabs = KernelFamily("abs", 1, K.mu, K.nu, lambda s, *c: np.abs(K.value(s, *c)))
    want = oracles.double_sum(Kabs, np.abs(b), np.abs(h), [4])
    assert trivial_form(K, {2: b}, h, 2, range(1, 6)) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("name,m", [("hilbert", 8), ("rough-l2", 5)])
def test_lemma_constants_are_finite(rng, name, m):
    K = preset_family(name, m)
    coll = random_stopping(rng, central_cube(m, K.dim), 1 << m)
    rep = lemma_checks(K, coll, 3, rng, q=K.params["q"])
    for key in ("uniform", "trivial", "cancellation"):
        assert len(rep.constants[key]) == 3
        assert all(0 <= c < math.inf for c in rep.constants[key])
    assert rep.to_json()["ceiling"] == 2.0 ** (8 * K.dim)


# -- adjoint remainder


def test_remainder_of_zero_bad_function(rng):
    K = preset_family("hilbert", 8)
    coll = random_stopping(rng, central_cube(8, 1), 256)
    rep = adjoint_remainder_check(K, coll, random_local(rng, coll), BadFunction({}, 256, 1))
    assert rep.form == rep.main == rep.remainder == 0.0


def test_main_part_matches_double_sum(rng):
    K = preset_family("hilbert", 8)
    coll = random_stopping(rng, central_cube(8, 1), 256)
    b = random_bad(rng, coll)
    h = random_local(rng, coll)
    rep = adjoint_remainder_check(K, coll, h, b)
    Q = coll.top
    hq = np.where(Q.mask(256), h, 0.0)
    two = Q.dilate(2)
    groups = {}
    for L, v in b.pieces.items():
        if L.dilate(3).intersects(two):
            groups.setdefault(L.s, np.zeros(256))[L.slices()] += v
    want = sum(
        oracles.double_sum(K, hq, g, [s]) for s in range(K.mu + 1, min(Q.s, K.nu) + 1) for t, g in groups.items() if t < s
    )
    assert rep.main == pytest.approx(want, rel=1e-10, abs=1e-12)
    assert rep.remainder == rep.form - rep.main
    assert set(inner_part(b, coll).pieces) == {L for L in b.pieces if L.dilate(3).intersects(two)}


# -- decay


def test_decay_of_zero_bad_function(rng):
    K = preset_family("br-critical", 6)
    coll = random_stopping(rng, central_cube(6, 2), 64)
    rep = decay_diagnostics(K, coll, BadFunction({}, 64, 2), random_local(rng, coll), "br")
    assert rep.profile == {} and rep.total == 0.0 and math.isnan(rep.slope)


def test_decay_profile_sums_to_the_stopping_form(rng):
    for name, m, mode in (("br-critical", 6, "br"), ("hilbert", 10, "rough")):
        K = preset_family(name, m)
        coll = random_stopping(rng, central_cube(m, K.dim), 1 << m)
        rep = decay_diagnostics(K, coll, random_bad(rng, coll), random_local(rng, coll), mode)
        assert rep.consistency <= 1e-10


def test_bounded_angular_part_has_no_large_part(rng):
    K = preset_family("hilbert", 10)
    coll = random_stopping(rng, central_cube(10, 1), 1024)
    rep = decay_diagnostics(K, coll, random_bad(rng, coll), random_local(rng, coll), "rough")
    for dl, split in rep.split.items():
        assert all(v == 0.0 for _, v in split.values())
        assert rep.large_parts[dl][0] == 0.0


def test_decay_mode_is_checked(rng):
    K = preset_family("hilbert", 8)
    coll = validate_stopping(Cube(5, (64,)), [], 256)
    with pytest.raises(ValueError):
        decay_diagnostics(K, coll, BadFunction({}, 256, 1), np.zeros(256), "smooth")


def test_scale_groups_merge_below_the_floor():
    L1, L2, L3 = Cube(0, (3,)), Cube(1, (8,)), Cube(2, (12,))
    b = BadFunction({L1: np.array([0.0]), L2: np.array([1.0, -1.0]), L3: np.array([1.0, 0, 0, -1.0])}, 32, 1, mean_zero=False)
    g = scale_groups(b, [L1, L2, L3], floor=1)
    assert set(g) == {1, 2}
    assert set(scale_groups(b, [L1, L2, L3])) == {1, 2}


def test_fit_slope_of_geometric_sequence():
    assert fit_slope({j: 3.0 * 2.0 ** (-1.5 * j) for j in range(1, 8)}) == pytest.approx(-1.5, rel=1e-12)
    assert math.isnan(fit_slope({1: 1.0}))


# -- weak (1,1)


def averaging_family(mu, nu):
    # each stencil has total mass 1 / (nu - mu), so the operator has norm at most one on L^1
    def formula(s, *c):
        w = np.ones_like(c[0], dtype=float)
        return w / w.size / (nu - mu)

    return KernelFamily("average", 1, mu, nu, formula)


def test_averaging_operator_has_weak_constant_at_most_one(rng):
    K = averaging_family(0, 8)
    f = rng.random(1024) * (rng.random(1024) < 0.1)
    rep = weak11_profile(K, f)
    assert rep.value <= 1.0
    assert len(rep.levels) == 2 * 10 + 1


def test_callable_operator():
    f = spike(256, 1)
    rep = weak11_profile(lambda a: 2 * a, f)
    assert rep.value == 1.0 and rep.l1 == 1.0


def test_spike_superpositions_stay_bounded(rng):
    K = preset_family("hilbert", 12)
    for _ in range(5):
        f = np.zeros(4096)
        f[rng.integers(1000, 3000, size=20)] = rng.random(20)
        assert weak11_profile(K, f).value <= 4.0


def test_weak_profile_rejects_zero():
    with pytest.raises(ValueError):
        weak11_profile(preset_family("hilbert", 8), np.zeros(256))
