import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sparsedom.forms import apply_truncated, lambda_trunc
from sparsedom.kernels import (
    KernelFamily,
    SphericalFunction,
    br_kernel,
    br_tail,
    bump,
    dini_kernel,
    kernel_norm_0,
    kernel_norm_0_terms,
    kernel_norm_1,
    lacunary_omega,
    large_part_sum,
    modulus_terms,
    offsets,
    omega_split,
    partition_of_unity,
    preset_family,
    rough_family,
    rough_kernel,
    sign_omega,
    zero_family,
)

PRESET_NAMES = ("dini-hilbert", "hilbert", "rough-l2", "br-critical")


# -- partition of unity


def test_profile_matches_independent_construction():
    r = np.linspace(0, 1.2, 2001)
    want = np.array([oracles.bump(x) for x in r])
    assert np.allclose(bump(r), want, rtol=0, atol=1e-15)


def test_telescoping_at_unit_radius():
    assert partition_of_unity(1, 6).total(1.0) == 1.0


def test_partition_sums_to_one_on_covered_range():
    pu = partition_of_unity(1, 12)
    lo, hi = pu.covered
    r = np.concatenate([np.geomspace(lo, hi, 5000), np.linspace(lo, hi, 5000)])
    assert np.abs(pu.total(r) - 1).max() <= 1e-10


def test_profile_support():
    r = np.concatenate([np.linspace(0, 0.249, 500), np.linspace(1.001, 3, 500)])
    assert not bump(r).any()
    assert bump(np.array([0.5])).item() > 0


def test_partition_rejects_low_scale():
    with pytest.raises(ValueError):
        partition_of_unity(0, 3)


# -- rough kernels


def test_zero_omega_gives_zero_stencil():
    om = SphericalFunction(np.zeros(64), 2)
    assert not rough_kernel(om, 3).any()


def test_sign_kernel_by_hand():
    st_ = rough_kernel(sign_omega(), 3)
    z = np.arange(-7, 8)
    assert st_.shape == (15,)
    for x, v in zip(z, st_):
        r = abs(int(x))
        want = 0.0 if r == 0 else math.copysign(1.0, x) * oracles.bump(r / 8) / r
        assert v == pytest.approx(want, rel=1e-14, abs=1e-16)
    assert np.array_equal(st_, -st_[::-1])
    assert not st_[np.abs(z) <= 2].any()


def test_rough_family_sums_to_hilbert_kernel():
    # scales 1..nu sum to 1/x exactly on 1 <= |x| <= 2**(nu-1)
    nu = 6
    K = rough_family(sign_omega(), 0, nu)
    f = np.zeros(256)
    f[100:116] = np.sin(np.linspace(0, 3, 16)) + 1.0
    Tf = apply_truncated(K, f, 0, nu).values
    x = np.arange(256)
    ys = np.arange(100, 116)
    reach = (x >= 116 - 2 ** (nu - 1)) & (x < 100 + 2 ** (nu - 1))
    for xi in x[reach]:
        want = sum(f[y] / (xi - y) for y in ys if y != xi)
        assert Tf[xi] == pytest.approx(want, rel=1e-12, abs=1e-14)


def test_rough_rejects_nonzero_mean():
    om = SphericalFunction([1.0, 0.5], 1)
    with pytest.raises(ValueError):
        rough_family(om, 0, 3)
    assert rough_family(om, 0, 3, allow_nonzero_mean=True).stencil(2).any()


def test_homogeneity_of_rough_stencils():
    for om in (sign_omega(), lacunary_omega(seed=1)):
        d = om.dim
        for s in range(1, 5):
            a = rough_kernel(om, s)
            b = rough_kernel(om, s + 1)
            # offset z of scale s sits at index z + c; 2z at scale s + 1 sits at 2z + 2c + 1
            sl = tuple(slice(1, None, 2) for _ in range(d))
            assert np.allclose(b[sl], a * 2.0**-d, rtol=1e-13, atol=0)
            assert b[sl].shape == a.shape


def test_odd_kernel_form_vanishes_on_the_diagonal(rng):
    K = preset_family("hilbert", 10)
    f = rng.standard_normal(1024)
    v = lambda_trunc(K, f, f, K.mu, K.nu).value
    mass = np.abs(apply_truncated(K, np.abs(f), K.mu, K.nu).values) @ np.abs(f)
    assert abs(v) <= 1e-12 * mass


# -- Dini kernels


def test_zero_dini_kernel():
    K = dini_kernel(lambda x: 0.0 * x, 1, 0, 5)
    assert K.is_zero()


def test_dini_kernel_reconstructs_profile():
    nu = 8
    K = dini_kernel(lambda x: 1.0 / x, 1, 0, nu)
    z = np.arange(1, 2 ** (nu - 1) + 1, dtype=float)
    z = np.concatenate([-z, z])
    total = sum(K.value(s, z) for s in K.scales)
    assert np.abs(total * z - 1).max() <= 1e-12


def test_dini_size_norm_bound():
    K = dini_kernel(lambda x: 1.0 / x, 1, 0, 9)
    per_scale = {s: 2.0**s * np.abs(K.stencil(s)).max() for s in K.scales}
    assert kernel_norm_0(K, math.inf) == max(per_scale.values())
    assert kernel_norm_0(K, math.inf) <= 1.0 * 2 ** (2 * 1)


def test_dini_warns_when_normalization_fails():
    with pytest.warns(UserWarning):
        dini_kernel(lambda x: 2.0 / x, 1, 0, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dini_kernel(lambda x, y: x / np.power(x * x + y * y, 1.5), 2, 0, 4)


# -- oscillatory kernels


def test_br_kernel_in_one_dimension_by_hand():
    st_ = br_kernel(4, 1)
    c = 15
    for z in (5, 6, 7, 9, 11, -5, -8, -13):
        r = abs(z)
        want = oracles.bump(r / 16) * math.cos(2 * math.pi * r) / r
        assert st_[z + c] == pytest.approx(want, rel=1e-14)


def test_br_kernel_in_two_dimensions_by_hand():
    st_ = br_kernel(3, 2)
    c = 7
    for x, y in ((2, 1), (3, 4), (0, 5), (-6, 2)):
        r = math.hypot(x, y)
        want = oracles.bump(r / 8) * math.cos(2 * math.pi * (r - 0.125)) / r**2
        assert st_[x + c, y + c] == pytest.approx(want, rel=1e-13)


def test_br_tail_profile():
    t = br_tail(2, 6)
    c = (t.shape[0] - 1) // 2
    assert t[c, c] == 1.0
    assert t[c + 3, c + 4] == pytest.approx(6.0**-3)
    assert t[c + 6, c] == 0.0 and t[c + 5, c] > 0


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_stencils_live_on_their_annulus(name):
    K = preset_family(name, 9 if "hilbert" in name else 7)
    for s in K.scales:
        st_ = K.stencil(s)
        r = np.sqrt(sum(c * c for c in offsets(s, K.dim)))
        outside = (r <= 2.0 ** (s - 2)) | (r >= 2.0**s)
        assert not st_[outside].any()
        assert st_[r > 0].any()


# -- kernel norms


def test_zero_family_norms():
    K = zero_family(2, 0, 4)
    assert kernel_norm_0(K, 2.0) == 0.0 and kernel_norm_1(K, math.inf) == 0.0


def test_sign_kernel_size_norm_is_scale_independent():
    K = rough_family(sign_omega(), 0, 10)
    terms = kernel_norm_0_terms(K, math.inf)
    for s, v in terms.items():
        assert v == pytest.approx(2.0**s * np.abs(K.stencil(s)).max(), rel=1e-15)
    late = [v for s, v in terms.items() if s >= 4]
    assert max(late) / min(late) < 1.02


def test_rough_size_norm_with_unit_omega():
    om = lacunary_omega()
    om = SphericalFunction(om.samples / om.norm(2.0), 2, 2.0)
    K = rough_family(om, 0, 7)
    terms = kernel_norm_0_terms(K, 2.0)
    assert all(2.0**-4 <= v <= 2.0**4 for v in terms.values())
    for s, v in terms.items():
        direct = 2.0**s * math.sqrt(float(np.sum(K.stencil(s) ** 2)))
        assert v == pytest.approx(direct, rel=1e-14)


def test_smoothness_moduli_decay():
    K = dini_kernel(lambda x: 1.0 / x, 1, 0, 10)
    t = modulus_terms(K, math.inf)
    assert len(t) == 8
    for j in range(1, len(t) - 1):
        assert t[j + 1] / t[j] <= 0.75
    assert kernel_norm_1(K, math.inf) == pytest.approx(sum(t))


def test_smoothness_modulus_by_direct_shift():
    K = dini_kernel(lambda x: 1.0 / x, 1, 0, 6)
    # j = 2: shifts |h| < 2**(s-3), sup over s and h of 2**s max |K_s(z) - K_s(z + h)|
    best = 0.0
    for s in K.scales:
        for h in range(1, 1 << max(s - 3, 0)):
            z = np.arange(-(1 << s) - h, (1 << s) + h + 1, dtype=float)
            best = max(best, 2.0**s * float(np.abs(K.value(s, z) - K.value(s, z + h)).max()))
    assert modulus_terms(K, math.inf, 2)[1] == pytest.approx(best, rel=1e-14)


def test_nonzero_family_has_positive_smoothness_norm(rng):
    om = SphericalFunction(rng.standard_normal(64), 2).centered()
    assert kernel_norm_1(rough_family(om, 0, 5), 2.0) > 0


# -- angular splitting


def test_split_below_threshold_is_trivial():
    om = sign_omega()
    low, high = omega_split(om, 0.5, 1)
    assert not high.samples.any() and np.array_equal(low.samples, om.samples)


@given(st.floats(0.05, 2.0), st.integers(1, 20))
def test_split_partitions_the_samples(delta, j):
    om = lacunary_omega(seed=2, levels=10, growth=0.45)
    low, high = omega_split(om, delta, j)
    assert np.array_equal(low.samples + high.samples, om.samples)
    big = np.abs(om.samples) > 2.0 ** (delta * j)
    assert np.array_equal(high.samples != 0, big & (om.samples != 0))


def test_large_part_sum_of_bounded_omega():
    total, terms = large_part_sum(sign_omega(), 0.25)
    assert total == 0.0 and terms == []


def test_large_part_sum_is_controlled_by_orlicz_lorentz():
    ratios = []
    for seed in range(5):
        om = lacunary_omega(seed=seed)
        for delta in (0.1, 0.25, 0.5):
            total, _ = large_part_sum(om, delta)
            ratios.append(delta * total / om.orlicz_lorentz())
    assert 0 < max(ratios) <= 16


# -- spherical functions


def test_spherical_csv_round_trip(tmp_path):
    om = lacunary_omega(M=64, levels=4, seed=5)
    path = tmp_path / "omega.csv"
    path.write_text(om.to_csv())
    back = SphericalFunction.load(path, 2)
    assert np.allclose(back.samples, om.samples, rtol=0, atol=1e-15)
    s1 = sign_omega()
    assert np.array_equal(SphericalFunction.from_csv(s1.to_csv(), 1).samples, s1.samples)


def test_spherical_csv_mean_correction():
    text = "1,2.0\n-1,1.0\n"
    with pytest.raises(ValueError):
        SphericalFunction.from_csv(text, 1)
    om = SphericalFunction.from_csv(text, 1, correct=True)
    assert om.corrected and om.samples.tolist() == [0.5, -0.5]


def test_nearest_sample_lookup():
    om = SphericalFunction(np.arange(8.0) - 3.5, 2)
    assert om(np.array([1.0]), np.array([0.0]))[0] == -3.5
    assert om(np.array([0.0]), np.array([1.0]))[0] == om.samples[2]
    assert om(np.array([1.0]), np.array([-0.01]))[0] == om.samples[0]


def test_family_export(tmp_path):
    K = preset_family("dini-hilbert", 6)
    K.export(tmp_path)
    rows = (tmp_path / "dini_stencils.csv").read_text().splitlines()
    assert rows[0] == "s,z0,value" and len(rows) > 1
    assert (tmp_path / "dini_manifest.json").exists()


def test_signed_family():
    K = preset_family("br-critical", 6)
    flipped = K.with_signs({2: -1, 3: 0})
    assert np.array_equal(flipped.stencil(2), -K.stencil(2))
    assert not flipped.stencil(3).any()
    assert isinstance(flipped, KernelFamily)
