import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sparsedom.dyadic import (
    Box,
    Cube,
    StoppingCollection,
    Violation,
    collection_from_json,
    dilate,
    neighbors,
    union_mask,
    validate_stopping,
    whitney_maximal,
)


@st.composite
def cubes(draw, dim=1, max_s=6, span=256):
    s = draw(st.integers(0, max_s))
    side = 1 << s
    corner = tuple(draw(st.integers(-span // side, span // side)) * side for _ in range(dim))
    return Cube(s, corner)


# -- cubes and dilates


def test_cube_invariants():
    Q = Cube(3, (8, 16))
    assert Q.side == 8 and Q.measure == 64 and Q.center == (12.0, 20.0)
    assert Q.parent() == Cube(4, (0, 16))
    assert all(Q.contains(c) for c in Q.children()) and len(Q.children()) == 4
    with pytest.raises(ValueError):
        Cube(3, (4,))
    with pytest.raises(ValueError):
        Cube(-1, (0,))


def test_dilate_by_one_is_identity():
    Q = Cube(3, (8,))
    assert dilate(Q, 1) == Q.box()


def test_triple_of_unit_interval():
    assert dilate(Cube(3, (0,)), 3) == Box((-8.0,), (16.0,))


def test_ninefold_dilate_cell_count(rng):
    n = 64
    for _ in range(30):
        s = int(rng.integers(0, 4))
        side = 1 << s
        corner = tuple(int(c) * side for c in rng.integers(0, n // side, size=2))
        Q = Cube(s, corner)
        box = Q.dilate(9)
        want = sum(
            all(lo <= x + 0.5 < hi for x, lo, hi in zip(cell, box.lo, box.hi))
            for cell in itertools.product(range(n), repeat=2)
        )
        assert box.count_cells(n) == want == int(box.mask(n).sum())


def test_json_round_trip():
    Q = Cube(2, (4, 8))
    assert Cube.from_json(Q.to_json()) == Q


# -- neighbors


def test_neighbors_reflexive():
    Q = Cube(2, (8,))
    assert neighbors(Q, Q)


def test_distant_unit_cubes_are_not_neighbors():
    assert not neighbors(Cube(0, (0,)), Cube(0, (10,)))


def seven_meet(L, M):
    # 7L is the interval of half-width 3.5 l(L) around the center
    return all(abs(a - b) < 3.5 * (L.side + M.side) for a, b in zip(L.center, M.center))


@given(cubes(dim=2, max_s=9), cubes(dim=2, max_s=9))
def test_neighbors_matches_direct_predicate(L, M):
    want = seven_meet(L, M) and abs(L.s - M.s) < 8
    assert neighbors(L, M) == want
    assert neighbors(M, L) == want


# -- Whitney decomposition


def test_whitney_of_empty_set():
    assert whitney_maximal(np.zeros(64, dtype=bool)) == []


def test_whitney_of_a_single_cube():
    n = 256
    E = np.zeros(n, dtype=bool)
    R = Cube(5, (96,))
    E[R.slices()] = True
    got = whitney_maximal(E)
    assert {(L.s, L.corner) for L in got} == oracles.whitney(E)
    assert all(R.contains(L) for L in got)


def test_whitney_of_a_single_square():
    E = np.zeros((64, 64), dtype=bool)
    E[Cube(5, (32, 0)).slices()] = True
    got = whitney_maximal(E)
    assert {(L.s, L.corner) for L in got} == oracles.whitney(E)


def test_whitney_random_masks_1d(rng):
    for _ in range(20):
        E = np.zeros(256, dtype=bool)
        for _ in range(int(rng.integers(1, 6))):
            a = int(rng.integers(0, 256))
            E[a : a + int(rng.integers(1, 120))] = True
        got = whitney_maximal(E)
        assert {(L.s, L.corner) for L in got} == oracles.whitney(E)


def test_whitney_random_masks_2d(rng):
    for _ in range(10):
        E = rng.random((32, 32)) < 0.97
        E[8:30, 4:28] = True
        got = whitney_maximal(E)
        assert {(L.s, L.corner) for L in got} == oracles.whitney(E)


@given(st.lists(st.tuples(st.integers(0, 255), st.integers(1, 128)), min_size=1, max_size=5))
def test_whitney_cubes_are_disjoint_and_maximal(intervals):
    E = np.zeros(256, dtype=bool)
    for a, w in intervals:
        E[a : a + w] = True
    got = whitney_maximal(E)
    cover = np.zeros(256, dtype=int)
    for L in got:
        cover[L.slices()] += 1
        assert oracles.nine_inside(E, L.s, L.corner)
        P = L.parent()
        assert L.s == 8 or not oracles.nine_inside(E, P.s, P.corner)
    assert cover.max(initial=0) <= 1


# -- stopping collections


def test_empty_collection_is_valid():
    res = validate_stopping(Cube(4, (16,)), [], 64)
    assert isinstance(res, StoppingCollection)
    assert not res.shadow.any()


def test_overlapping_members_violate_disjointness():
    Q = Cube(4, (16,))
    res = validate_stopping(Q, [Cube(2, (20,)), Cube(1, (22,))], 64)
    assert isinstance(res, Violation) and res.axiom == "disjoint"
    assert set(res.witnesses) == {Cube(2, (20,)), Cube(1, (22,))}


def test_member_outside_triple_violates_containment():
    res = validate_stopping(Cube(4, (16,)), [Cube(2, (60,))], 64)
    assert isinstance(res, Violation) and res.axiom == "containment"


def test_scale_separation_violation():
    Q = Cube(10, (1024,))
    big, small = Cube(8, (1024,)), Cube(0, (1280,))
    res = validate_stopping(Q, [big, small], 4096)
    assert isinstance(res, Violation) and res.axiom == "separation"


def test_missing_shadow_violation():
    # a lone unit cube in the middle of 2Q: its 9-fold dilate is not in the shadow
    res = validate_stopping(Cube(4, (16,)), [Cube(0, (24,))], 64)
    assert isinstance(res, Violation) and res.axiom == "shadow"


def test_whitney_cubes_of_a_set_in_the_triple_validate():
    n = 64
    Q = Cube(4, (16,))
    E = np.zeros(n, dtype=bool)
    E[10:40] = True
    members = whitney_maximal(E)
    # without the uncovered cells of E the shadow misses part of 9L
    assert isinstance(validate_stopping(Q, members, n), Violation)
    residual = E & ~union_mask(members, n, 1)
    res = validate_stopping(Q, members, n, residual)
    assert isinstance(res, StoppingCollection)
    assert np.array_equal(res.shadow, E)
    assert collection_from_json(res.to_json(), n, residual).members == res.members
