import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlse import catalog
from nlse.subspace import (SamplePlan, image_point, iter_images, random_subspace,
                           sample_images, sample_latents)


def test_square_basis_is_orthogonal():
    Q = random_subspace(3, 3, 1).basis
    assert abs(abs(np.linalg.det(Q)) - 1) <= 1e-10


def test_orthonormal_columns():
    Z = random_subspace(256, 4, 2)
    assert Z.orthonormality_error() <= 1e-10
    assert np.allclose(Z.basis.T @ Z.basis, np.eye(4), atol=1e-10)


def test_unit_column():
    Q = random_subspace(2, 1, 3).basis
    assert np.linalg.norm(Q[:, 0]) == pytest.approx(1.0, abs=1e-12)


def test_rejects_k_above_n():
    with pytest.raises(ValueError):
        random_subspace(2, 3, 0)


def test_image_points():
    Z = random_subspace(16, 2, 4)
    x, y = image_point(catalog.TANH, Z, np.zeros(2))
    assert not x.any() and not y.any()
    _, y = image_point(catalog.SIGMOID, Z, np.zeros(2))
    assert np.all(y == 0.5)
    z = np.array([0.3, -1.2])
    x, y = image_point(catalog.IDENTITY, Z, z)
    assert np.array_equal(x, y) and np.allclose(x, Z.basis @ z)


def test_plan_validation():
    with pytest.raises(ValueError):
        SamplePlan(0, 1)
    with pytest.raises(ValueError):
        SamplePlan(10, 1, radius="cauchy")


def test_fixed_radius():
    Z = random_subspace(32, 4, 5)
    imgs = sample_images(catalog.TANH, Z, SamplePlan(500, 6, "fixed", r=2.5))
    assert np.allclose(np.linalg.norm(imgs.x, axis=1), 2.5, atol=1e-10)


def test_log_uniform_spans_decades():
    plan = SamplePlan(10_000, 7, "log_uniform", 1e-4, 1e2)
    z = np.concatenate([sample_latents(4, plan, c) for c in range(math.ceil(10_000 / 1024))])
    r = np.linalg.norm(z, axis=1)
    assert z.shape == (10_000, 4)
    assert math.log10(r.max() / r.min()) >= 5


def test_chunked_stream_equals_full():
    Z = random_subspace(8, 2, 1)
    plan = SamplePlan(3000, 9)
    parts = list(iter_images(catalog.ELU, Z, plan))
    full = sample_images(catalog.ELU, Z, plan)
    assert [p.z.shape[0] for p in parts] == [1024, 1024, 952]
    assert np.array_equal(np.concatenate([p.y for p in parts]), full.y)


def test_same_seed_same_stream():
    Z = random_subspace(8, 2, 1)
    a = sample_images(catalog.TANH, Z, SamplePlan(100, 3))
    b = sample_images(catalog.TANH, Z, SamplePlan(100, 3))
    assert np.array_equal(a.y, b.y)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(2, 64), data=st.data())
def test_norm_preservation(seed, n, data):
    k = data.draw(st.integers(1, n))
    Z = random_subspace(n, k, seed)
    z = np.array(data.draw(st.lists(st.floats(-1e3, 1e3), min_size=k, max_size=k)))
    assert abs(np.linalg.norm(Z.basis @ z) - np.linalg.norm(z)) <= 1e-10 * max(1.0, np.linalg.norm(z))
