from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlse import catalog
from nlse.pwl import PWLFunction, build_pwl
from nlse.regions import arrangement_bound, census, region_map, relu_pwl, step_pwl
from nlse.subspace import random_subspace


def test_bound_formula():
    assert arrangement_bound(3, 2, 1) == comb(3, 0) + comb(3, 1) == 4
    assert arrangement_bound(2, 2, 2) == 4
    assert arrangement_bound(5, 3, 2) == 1 + 10 + 45


def test_relu_k1_n3_exact():
    rec = census(relu_pwl(1.0), random_subspace(3, 1, 4), "exact_1d")
    assert rec.distinct_patterns == 4 == rec.bound and not rec.degenerate


def test_two_pieces_k2_n2_sampled():
    rec = census(relu_pwl(0.0), random_subspace(2, 2, 1), "sign_sample", budget=100_000)
    assert rec.distinct_patterns == 4


@pytest.mark.parametrize("n", [3, 5, 8])
@pytest.mark.parametrize("t", [2, 3, 5])
def test_exact_1d_general_position(n, t):
    rec = census(step_pwl(t), random_subspace(n, 1, 100 + n * t), "exact_1d")
    assert rec.distinct_patterns == n * (t - 1) + 1 == rec.bound


@pytest.mark.parametrize("n,t", [(3, 2), (4, 3), (8, 5)])
def test_sampling_agrees_with_exact_at_k1(n, t):
    Z = random_subspace(n, 1, 7 * n + t)
    f = step_pwl(t)
    exact = census(f, Z, "exact_1d").distinct_patterns
    assert census(f, Z, "sign_sample", budget=100_000, seed=3).distinct_patterns == exact


def test_single_piece_rejected():
    f = PWLFunction(np.empty(0), np.empty(0), (1.0, 0.0), (1.0, 0.0), 0.1, "line")
    with pytest.raises(ValueError):
        census(f, random_subspace(3, 1, 0), "exact_1d")


def test_method_preconditions():
    with pytest.raises(ValueError):
        census(relu_pwl(1.0), random_subspace(3, 2, 0), "exact_1d")
    with pytest.raises(ValueError):
        census(relu_pwl(1.0), random_subspace(3, 2, 0), "sign_sample", budget=10)


def test_origin_pattern():
    f = step_pwl(4)
    Z = random_subspace(5, 2, 0)
    pat = region_map(f, Z, np.zeros(2))
    assert np.all(pat == f.piece_index(0.0))


def test_far_field_uses_rays_only():
    f = step_pwl(4)
    Z = random_subspace(6, 2, 2)
    pat = region_map(f, Z, 1e9 * np.array([0.6, -0.8]))
    assert set(np.unique(pat)) <= {0, f.piece_count - 1}


def test_relu_pattern_is_sign_vector():
    Z = random_subspace(6, 2, 5)
    z = np.array([0.7, -1.1])
    x = Z.basis @ z
    assert np.array_equal(region_map(relu_pwl(0.0), Z, z), (x > 0).astype(int))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), data=st.data())
def test_affine_within_region(seed, data):
    f = build_pwl(catalog.TANH, eps=0.3)
    Z = random_subspace(5, 2, seed)
    z1 = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=2, max_size=2)))
    z2 = z1 + np.array(data.draw(st.lists(st.floats(-0.2, 0.2), min_size=2, max_size=2)))
    z3 = 0.5 * (z1 + z2)
    p1, p2, p3 = (region_map(f, Z, z) for z in (z1, z2, z3))
    if np.array_equal(p1, p2) and np.array_equal(p1, p3):
        mid = f(Z.basis @ z3)
        avg = 0.5 * (f(Z.basis @ z1) + f(Z.basis @ z2))
        assert np.max(np.abs(mid - avg)) <= 1e-9


@pytest.mark.parametrize("k,n", [(1, 4), (2, 3), (2, 5), (3, 4)])
def test_census_never_exceeds_bound(k, n):
    f = build_pwl(catalog.SQNL, eps=0.5)
    rec = census(f, random_subspace(n, k, k * n), "sign_sample", budget=20_000)
    assert rec.distinct_patterns <= arrangement_bound(n, f.piece_count, k)
