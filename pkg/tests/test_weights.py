import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sparsedom.forms import apply_truncated
from sparsedom.inputs import spike
from sparsedom.kernels import preset_family, zero_family
from sparsedom.weights import (
    Weight,
    ap_constant,
    constant_weight,
    corollary_bound,
    corollary_exponent,
    piecewise_weight,
    power_weight,
    sharpness_profile,
    weight_sweep,
    weighted_norm_ratio,
)

# -- Muckenhoupt constants


@pytest.mark.parametrize("c", [1.0, 0.01, 250.0])
def test_constant_weights_have_constant_one(c):
    for t in (1.5, 2.0, 4.0):
        assert constant_weight(64, 1, c).ap(t) == pytest.approx(1.0, rel=1e-14)


def test_two_cell_step_weight():
    # the only nontrivial cube is the whole grid: (1 + c)**2 / (4 c)
    c = 9.0
    assert ap_constant(np.array([1.0, c]), 2.0) == pytest.approx((1 + c) ** 2 / (4 * c), rel=1e-14)


@pytest.mark.parametrize("a", [-0.8, -0.3, 0.4, 0.9])
@pytest.mark.parametrize("t", [1.5, 2.0, 3.0])
def test_power_weights_match_enumeration(a, t):
    w = power_weight(64, 1, a)
    assert w.ap(t) == pytest.approx(oracles.weight_ap(w.values, t), rel=1e-10)


def test_power_weight_in_the_plane_matches_enumeration():
    w = power_weight(16, 2, -1.2)
    assert w.ap(2.0) == pytest.approx(oracles.weight_ap(w.values, 2.0), rel=1e-10)


def test_power_weight_constants_grow_with_the_exponent():
    vals = [power_weight(1024, 1, a).ap(2.0) for a in (0.0, 0.2, 0.4, 0.6, 0.8)]
    assert vals[0] == pytest.approx(1.0)
    assert all(x < y for x, y in zip(vals, vals[1:]))
    neg = [power_weight(1024, 1, -a).ap(2.0) for a in (0.2, 0.4, 0.6, 0.8)]
    assert all(x < y for x, y in zip(neg, neg[1:]))


def test_ap_rejects_small_index():
    with pytest.raises(ValueError):
        ap_constant(np.ones(4), 1.0)
    with pytest.raises(ValueError):
        Weight(np.array([1.0, 0.0]))


positive = st.lists(st.floats(0.01, 100), min_size=16, max_size=16).map(np.array)


@given(positive, st.floats(0.001, 1000))
def test_ap_is_at_least_one_and_scale_invariant(w, c):
    a = ap_constant(w, 2.0)
    assert a >= 1.0
    assert ap_constant(c * w, 2.0) == pytest.approx(a, rel=1e-10)


@given(positive)
def test_ap_does_not_increase_with_the_index(w):
    vals = [ap_constant(w, t) for t in (1.5, 2.0, 3.0, 6.0)]
    assert all(y <= x * (1 + 1e-12) for x, y in zip(vals, vals[1:]))


def test_piecewise_weight():
    w = piecewise_weight(8, [0.25, 0.75], [1.0, 4.0, 1.0])
    assert w.values.tolist() == [1, 1, 4, 4, 4, 4, 1, 1]
    with pytest.raises(ValueError):
        piecewise_weight(8, [0.5], [1.0])


# -- corollary exponents


def test_exponents_for_bounded_angular_part():
    assert corollary_exponent(2.0, math.inf) == 2.0
    assert corollary_exponent(1.5, math.inf) == 4.0
    assert corollary_exponent(4.0, 2.0) == 1.0


@pytest.mark.parametrize(
    "t,q",
    [(Fraction(5, 2), 2), (Fraction(13, 4), Fraction(3, 2)), (Fraction(5, 4), None), (Fraction(7, 2), Fraction(3, 2))],
)
def test_exponents_match_exact_arithmetic(t, q):
    if q is None:
        want = max(t, 2) / (t - 1)
        got = corollary_exponent(float(t), math.inf)
    else:
        qd = q / (q - 1)
        want = max(Fraction(1), 1 / (t - qd))
        got = corollary_exponent(float(t), float(q))
    assert got == float(want)


def test_exponent_domain():
    with pytest.raises(ValueError):
        corollary_exponent(2.0, 2.0)  # t must exceed q' = 2
    with pytest.raises(ValueError):
        corollary_exponent(1.0, math.inf)
    with pytest.raises(ValueError):
        corollary_exponent(3.0, 1.0)


def test_corollary_bound_index():
    cb = corollary_bound(3.0, 2.0, 2.0)
    assert cb.exponent == 1.0 and cb.value == 2.0 and cb.ap_index == 1.5
    assert corollary_bound(2.0, math.inf, 3.0).value == 9.0


# -- weighted ratios


def test_zero_kernel_gives_zero_ratio(rng):
    K = zero_family(1, 0, 6)
    assert weighted_norm_ratio(K, power_weight(128, 1, 0.5), 2.0, rng.random(128), 0, 6) == 0.0


def test_unit_weight_gives_unweighted_ratio(rng):
    K = preset_family("hilbert", 8)
    f = rng.standard_normal(256)
    want = np.linalg.norm(apply_truncated(K, f, K.mu, K.nu).values) / np.linalg.norm(f)
    got = weighted_norm_ratio(K, constant_weight(256, 1), 2.0, f, K.mu, K.nu)
    assert got == pytest.approx(want, rel=1e-12)


def test_zero_input_is_rejected():
    K = preset_family("hilbert", 8)
    with pytest.raises(ValueError):
        weighted_norm_ratio(K, constant_weight(256, 1), 2.0, np.zeros(256), K.mu, K.nu)


def test_weight_sweep_table():
    K = preset_family("hilbert", 10)
    sw = weight_sweep(K, spike(1024, 1), 2.0, math.inf, exponents=[-0.5, -0.2, 0.0, 0.2, 0.5])
    assert [r.a for r in sw.rows] == [-0.5, -0.2, 0.0, 0.2, 0.5]
    assert all(r.exponent == 2.0 and r.bound == pytest.approx(r.ap**2) for r in sw.rows)
    assert sw.constant == max(r.ratio / r.bound for r in sw.rows if -0.3 <= r.a <= 0.3)
    text = sw.to_csv("hilbert t=2")
    lines = text.splitlines()
    assert lines[0] == "# hilbert t=2" and lines[1] == "a,ap,ratio,exponent,bound,fitted_bound"
    assert len(lines) == 7
    prof = sharpness_profile(sw)
    assert [p[0] for p in prof] == [r.a for r in sw.rows]
