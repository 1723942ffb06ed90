import math
from fractions import Fraction as Q
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdclab.tradeoff import (
    L_star_storage,
    c_star,
    corner_points,
    g_r,
    ocm_curve,
    ocp_curve,
    optimal_load,
    rational_grid,
    region,
    storage_grid,
    surface,
)


def envelope_oracle(r, c, K):
    """Lower convex envelope by brute force: best chord over all point pairs."""
    r = Q(r)
    pts = [(r / K + (1 - r / K) * g, (1 - r / K) ** 2 / ((1 - r / K) * g)) for g in range(1, math.floor(r) + 1)]
    lo, hi = math.floor(r), math.ceil(r)
    pts.append((c_star(r, K), Q(lo + hi - r, lo * hi) - Q(1, K)))
    best = None
    for (c1, l1), (c2, l2) in list(combinations(pts, 2)) + [(p, p) for p in pts]:
        if c1 > c2:
            (c1, l1), (c2, l2) = (c2, l2), (c1, l1)
        if not c1 <= c <= c2:
            continue
        val = l1 if c1 == c2 else l1 + (l2 - l1) * (c - c1) / (c2 - c1)
        best = val if best is None else min(best, val)
    return best


@pytest.mark.parametrize("r, K, expected", [(2, 10, 2), (Q(5, 2), 10, Q(37, 15)), (1, 4, 1)])
def test_g_r(r, K, expected):
    assert g_r(r, K) == expected


@pytest.mark.parametrize("r, expected", [(2, Q(9, 5)), (5, 3), (1, 1)])
def test_c_star(r, expected):
    assert c_star(r, 10) == expected


@pytest.mark.parametrize("r, K, expected", [(2, 10, Q(2, 5)), (5, 10, Q(1, 10)), (1, 7, Q(6, 7))])
def test_L_star_storage(r, K, expected):
    assert L_star_storage(r, K) == expected


def test_L_star_fractional_matches_memory_sharing():
    # halfway between integer storage points the optimum is their average
    assert L_star_storage(Q(5, 2), 10) == (L_star_storage(2, 10) + L_star_storage(3, 10)) / 2 == Q(19, 60)


@pytest.mark.parametrize("fn", [g_r, c_star, L_star_storage, corner_points])
@pytest.mark.parametrize("r", [Q(1, 2), 10, 11])
def test_storage_range_enforced(fn, r):
    with pytest.raises(ValueError):
        fn(r, 10)


def test_corner_points_integer_r():
    pts = corner_points(2, 10)
    assert [(p.g, p.c, p.L, p.terminal) for p in pts] == [(1, 1, Q(4, 5), False), (2, Q(9, 5), Q(2, 5), True)]
    (only,) = corner_points(1, 10)
    assert (only.g, only.c, only.L, only.terminal) == (1, 1, Q(9, 10), True)


def test_corner_points_fractional_r():
    pts = corner_points(Q(5, 2), 10)
    assert [p.g for p in pts] == [1, 2, Q(37, 15)]
    assert pts[-1].terminal and (pts[-1].c, pts[-1].L) == (c_star(Q(5, 2), 10), Q(19, 60))


@pytest.mark.parametrize("K", [4, 7, 10])
def test_corner_identity(K):
    for r in storage_grid(K, Q(1, 4)):
        for p in corner_points(r, K):
            if not p.terminal or r.denominator == 1:
                assert (1 - r / K) ** 2 / (p.c - r / K) == Q(K - r, p.g * K)


@pytest.mark.parametrize(
    "r, c, expected", [(2, Q(9, 5), Q(2, 5)), (2, Q(7, 5), Q(3, 5)), (5, 4, Q(1, 10)), (2, 1, Q(4, 5))]
)
def test_optimal_load_examples(r, c, expected):
    assert optimal_load(r, c, 10) == expected


def test_optimal_load_rejects_outside_triangle():
    with pytest.raises(ValueError):
        optimal_load(2, Q(1, 2), 10)
    with pytest.raises(ValueError):
        optimal_load(2, 3, 10)
    with pytest.raises(ValueError):
        optimal_load(10, 5, 10)


@pytest.mark.parametrize("K", [3, 5, 10])
def test_optimal_load_matches_brute_force_envelope(K):
    for r in storage_grid(K, Q(1, 5)):
        top = c_star(r, K)
        for c in rational_grid(Q(1), top, Q(1, 20)) + [top]:
            assert optimal_load(r, c, K) == envelope_oracle(r, c, K)


def test_flat_region_and_continuity():
    K = 10
    for r in storage_grid(K, Q(1, 10)):
        top = c_star(r, K)
        assert optimal_load(r, top, K) == L_star_storage(r, K)
        for c in rational_grid(top, r, Q(1, 10)):
            assert optimal_load(r, c, K) == L_star_storage(r, K)
            assert region(r, c, K) == "flat"


@given(st.integers(3, 12), st.data())
def test_convex_and_nonincreasing_in_c(K, data):
    r = data.draw(st.fractions(min_value=1, max_value=K - Q(1, 20), max_denominator=20))
    top = c_star(r, K)
    ts = data.draw(st.lists(st.fractions(0, 1, max_denominator=30), min_size=3, max_size=3, unique=True))
    cs = sorted(1 + (top - 1) * t for t in ts)
    if cs[0] == cs[2]:
        return
    la, lb, lc = (optimal_load(r, c, K) for c in cs)
    assert la >= lb >= lc
    chord = la + (lc - la) * (cs[1] - cs[0]) / (cs[2] - cs[0])
    assert lb <= chord


def test_monotone_in_r_on_grid():
    K = 10
    for c in rational_grid(Q(1), Q(9), Q(1, 10)):
        rs = [r for r in storage_grid(K, Q(1, 10)) if r >= c]
        loads = [optimal_load(r, c, K) for r in rs]
        assert all(a >= b for a, b in zip(loads, loads[1:]))


def test_ocp_and_ocm_curves():
    K = 10
    ocp = {p.r: p for p in ocp_curve(K)}
    assert ocp[2].L == Q(4, 5)
    assert ocp[1].L == 1 - Q(1, K)
    for p in ocp.values():
        assert p.c == 1 and optimal_load(p.r, 1, K) == p.L
    ocm = {p.r: p for p in ocm_curve(K)}
    assert (ocm[5].c, ocm[5].L) == (3, Q(1, 10))
    for p in ocm.values():
        assert optimal_load(p.r, p.c, K) == p.L


def test_surface_grid_shape():
    pts = surface(4, Q(1, 2), Q(1, 2))
    assert {(p.r, p.c) for p in pts} == {
        (1, 1), (Q(3, 2), 1), (Q(3, 2), Q(3, 2)), (2, 1), (2, Q(3, 2)), (2, 2),
        (Q(5, 2), 1), (Q(5, 2), Q(3, 2)), (Q(5, 2), 2), (Q(5, 2), Q(5, 2)),
        (3, 1), (3, Q(3, 2)), (3, 2), (3, Q(5, 2)), (3, 3), (Q(7, 2), 1), (Q(7, 2), Q(3, 2)),
        (Q(7, 2), 2), (Q(7, 2), Q(5, 2)), (Q(7, 2), 3), (Q(7, 2), Q(7, 2)),
    }
