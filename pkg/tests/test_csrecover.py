import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlse import catalog
from nlse.csrecover import (Generator, check_srec, deep_pwl_surrogate, generate, make_problem,
                            recover, srec_slack, surrogate_error, synth_generator)
from nlse.sketch import SketchMatrix, sample_sketch


def test_generator_at_origin():
    assert not generate(synth_generator("tanh", [3, 8], 0), np.zeros(3)).any()
    assert np.all(generate(synth_generator("sigmoid", [3, 8], 0), np.zeros(3)) == 0.5)
    assert not generate(synth_generator("tanh", [3, 8, 8], 0), np.zeros(3)).any()


def test_generator_shapes():
    G = synth_generator(["elu", "tanh"], [4, 16, 32], 1)
    assert (G.k, G.n, G.depth) == (4, 32, 2)
    assert G.activation_names == ["elu", "tanh"]
    assert generate(G, np.ones((5, 4))).shape == (5, 32)
    with pytest.raises(ValueError):
        Generator(((np.ones((3, 2)), catalog.TANH), (np.ones((3, 4)), catalog.TANH)))


def test_identical_pair_holds():
    G = synth_generator("tanh", [2, 16], 0)
    z = np.ones((1, 2))
    rep = check_srec(sample_sketch(8, 16, 0), G, 1, 0.5, 0.1, latents=(z, z))
    assert rep.passed and rep.worst_slack == pytest.approx(0.1)


def test_zero_sketch_fails():
    G = synth_generator("tanh", [2, 16], 0)
    z1, z2 = np.array([[3.0, 0.0]]), np.array([[-3.0, 0.0]])
    gap = np.linalg.norm(G(z1) - G(z2))
    assert gap > 0.1 / 0.5
    rep = check_srec(SketchMatrix.fixed(np.zeros((8, 16))), G, 1, 0.5, 0.1, latents=(z1, z2))
    assert not rep.passed and rep.worst_slack < 0


def test_srec_dimension_mismatch():
    with pytest.raises(ValueError):
        check_srec(sample_sketch(8, 10, 0), synth_generator("tanh", [2, 16], 0), 10, 0.5, 0.1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_slack_symmetric_under_swap(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(6, 12))
    x1, x2 = rng.normal(size=(4, 12)), rng.normal(size=(4, 12))
    assert np.array_equal(srec_slack(A, x1, x2, 0.5, 0.1), srec_slack(A, x2, x1, 0.5, 0.1))


def test_zero_measurement_solved_at_start():
    G = synth_generator("tanh", [4, 32, 32], 2)
    A = sample_sketch(16, 32, 3)
    res = recover(G, A, np.zeros(16), restarts=3, iters=50)
    assert res.residual == 0.0 and not res.z_hat.any()
    assert res.restarts_used == 4


def test_residual_nonincreasing():
    G = synth_generator("tanh", [4, 64, 64], 5)
    A = sample_sketch(32, 64, 6)
    prob = make_problem(G, A, 7)
    res = recover(G, A, prob.y, restarts=4, iters=200, keep_history=True)
    assert np.all(np.diff(res.history, axis=0) <= 1e-15 * res.history[:-1])


def test_orthogonal_measurements_recover():
    n = 32
    G = synth_generator("tanh", [3, n, n], 8)
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(n, n)))
    A = SketchMatrix.fixed(Q)
    prob = make_problem(G, A, 9)
    res = recover(G, A, prob.y, restarts=10, iters=2000, x_true=prob.x_true)
    if res.residual <= 1e-8:
        assert res.reconstruction_error <= 1e-6
    assert res.residual <= 1e-8  # expected for this seed


def test_noise_scaling():
    G = synth_generator("tanh", [4, 64, 64], 1)
    A = sample_sketch(32, 64, 2)
    prob = make_problem(G, A, 3, noise_ratio=0.1)
    clean = A.entries @ prob.x_true
    assert np.linalg.norm(prob.noise) == pytest.approx(0.1 * np.linalg.norm(clean))
    res = recover(G, A, prob.y, restarts=10, iters=1000, x_true=prob.x_true)
    assert res.residual <= 1.5 * np.linalg.norm(prob.noise)


def test_recover_is_deterministic():
    G = synth_generator("tanh", [4, 32, 32], 4)
    A = sample_sketch(16, 32, 5)
    y = make_problem(G, A, 6).y
    a, b = recover(G, A, y, 5, 100, seed=9), recover(G, A, y, 5, 100, seed=9)
    assert np.array_equal(a.z_hat, b.z_hat) and a.residual == b.residual


def test_surrogate_needs_depth_two():
    with pytest.raises(ValueError):
        deep_pwl_surrogate(synth_generator("tanh", [4, 16], 0), 0.1)


def test_surrogate_rejects_unbounded_tail():
    with pytest.raises(ValueError):
        deep_pwl_surrogate(synth_generator(["tanh", "elu"], [4, 16, 16], 0), 0.1)


def test_surrogate_error_and_layer_norm():
    n = 64
    G = synth_generator("tanh", [4, n, n], 3)
    Gt = deep_pwl_surrogate(G, 0.1, pairs=4000, seed=1)
    err = surrogate_error(G, Gt, samples=10_000, seed=2)
    assert err["max_error"] <= 0.1 / math.sqrt(n)
    u = catalog.TANH.bound
    assert err["max_first_layer_norm"] <= (u + Gt.meta["pwl_tol"]) * math.sqrt(n)


def test_surrogate_error_linear_in_eps2():
    n = 64
    G = synth_generator("tanh", [4, n, n, n], 11)
    L = deep_pwl_surrogate(G, 0.2, pairs=4000, seed=1).meta["L_est"]
    e = [surrogate_error(G, deep_pwl_surrogate(G, e2, L_est=L), 10_000, 5)["max_error"]
         for e2 in (0.2, 0.1)]
    assert 0.4 <= e[1] / e[0] <= 0.6
