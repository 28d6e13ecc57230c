import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlse import catalog
from nlse.distortion import (CSV_COLUMNS, Cell, SweepConfig, additive_fit, measure,
                             measure_relative, run_cell, run_trial, summarize, trial_sweep)
from nlse.sketch import SketchMatrix, sample_sketch
from nlse.subspace import SamplePlan, random_subspace, sample_latents


def test_identity_sketch_is_isometric():
    n = 32
    Z = random_subspace(n, 3, 1)
    rep = measure(SketchMatrix.fixed(np.eye(n)), catalog.TANH, Z, SamplePlan.mixed(n, 500, 2), 0.1)
    assert rep.max_rel_over == pytest.approx(0, abs=1e-12)
    assert rep.min_rel_under == pytest.approx(0, abs=1e-12)
    assert rep.additive_fit == 0.0 and rep.additive_fit_at(0.01) == 0.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        measure(sample_sketch(4, 8, 0), catalog.TANH, random_subspace(16, 2, 0),
                SamplePlan(10, 0), 0.1)


def test_relative_mode_rejects_sigmoid():
    with pytest.raises(ValueError):
        measure_relative(sample_sketch(8, 16, 0), catalog.SIGMOID, random_subspace(16, 2, 0),
                         SamplePlan(10, 0), 0.3)


def test_additive_fit_definition():
    ny = np.array([1.0, 2.0, 0.0])
    npy = np.array([1.5, 1.0, 0.05])
    # over: 1.5 - 1.25 = 0.25 ; under: 1.5 - 1.0 = 0.5 ; zero-norm: 0.05
    assert additive_fit(ny, npy, 0.25) == pytest.approx(0.5)
    assert additive_fit([], [], 0.1) == 0.0


def test_fit_vanishes_inside_relative_band():
    rep = summarize([1.0, 2.0, 3.0], [1.09, 1.9, 3.2], 0.1, threshold=0.5)
    assert rep.worst_relative <= 0.1 and rep.additive_fit == 0.0


def test_split_consistency():
    rng = np.random.default_rng(0)
    ny = 10 ** rng.uniform(-4, 2, 400)
    npy = ny * rng.uniform(0.7, 1.3, 400)
    rep = summarize(ny, npy, 0.25, threshold=0.1)
    assert max(rep.worst_SL, rep.worst_SU) == rep.worst_relative
    assert rep.count_SL + rep.count_SU == 400


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32), alpha=st.floats(1e-6, 1e6))
def test_scale_equivariance(seed, alpha):
    rng = np.random.default_rng(seed)
    ny = rng.uniform(0.1, 10, 50)
    npy = ny * rng.uniform(0.8, 1.2, 50)
    a = summarize(ny, npy, 0.25, 1.0)
    b = summarize(alpha * ny, alpha * npy, 0.25, 1.0)
    assert abs(a.max_rel_over - b.max_rel_over) <= 1e-12
    assert abs(a.min_rel_under - b.min_rel_under) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), cut=st.integers(1, 99))
def test_more_samples_never_lower_maxima(seed, cut):
    rng = np.random.default_rng(seed)
    ny = rng.uniform(0.1, 10, 100)
    npy = ny * rng.uniform(0.8, 1.2, 100)
    part = summarize(ny[:cut], npy[:cut], 0.1, 1.0)
    full = summarize(ny, npy, 0.1, 1.0)
    assert full.max_rel_over >= part.max_rel_over
    assert full.min_rel_under >= part.min_rel_under
    assert full.additive_fit >= part.additive_fit


def test_elu_tiny_radius_behaves_linearly():
    n, k = 64, 3
    nl = catalog.ELU
    Z = random_subspace(n, k, 3)
    pi = sample_sketch(n, n, 4)
    plan = SamplePlan(300, 5, "fixed", r=1e-6)
    rep = measure_relative(pi, nl, Z, plan, 0.3, probes=False)
    ny, npy = rep.norms
    z = sample_latents(k, plan, 0)
    x = nl.constants.g2 * (z @ Z.basis.T)
    lin = np.linalg.norm(x @ pi.entries.T, axis=1) / np.linalg.norm(x, axis=1)
    gap = np.max(np.abs(npy / ny - lin))
    assert gap <= nl.constants.g3 * 1e-6 * math.sqrt(n)
    assert rep.passed


def test_threshold_probes_straddle_split():
    cell = Cell("tanh", "relative", 4, 64, 0.05, 6.0, eps=0.3)
    rep = run_trial(cell, 11, samples=200)
    assert rep.probes > 0 and rep.count_SL > 0 and rep.count_SU > 0


def test_identity_relative_trials_pass():
    cell = Cell("identity", "relative", 4, 256, 0.05, 6.0, eps=0.25)
    reps = run_cell(cell, 10, base_seed=1, samples=500)
    assert all(r.passed for r in reps)


def test_distortion_shrinks_like_inverse_sqrt_m():
    ms = (16, 32, 64, 128)
    worst = []
    for m in ms:
        cell = Cell("identity", "relative", 4, 256, 0.05, 6.0, eps=0.25, m=m)
        worst.append(np.mean([r.worst_relative for r in run_cell(cell, 10, 0, samples=500,
                                                                  probes=False)]))
    slope = np.polyfit(np.log(ms), np.log(worst), 1)[0]
    assert -0.65 <= slope <= -0.35


def test_workers_do_not_change_results():
    cell = Cell("softsign", "relative", 4, 64, 0.05, 6.0, eps=0.3)
    a = run_cell(cell, 6, 3, samples=300, workers=1)
    b = run_cell(cell, 6, 3, samples=300, workers=8)
    for x, y in zip(a, b):
        assert np.array_equal(x.norms[1], y.norms[1]) and x.passed == y.passed


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_sweep_writes_header(tmp_path):
    out = tmp_path / "r.csv"
    rows, summaries = trial_sweep(SweepConfig(fixtures=()), out)
    assert rows == [] and summaries == []
    assert _read(out) == [list(CSV_COLUMNS)]


def test_row_count(tmp_path):
    out = tmp_path / "r.csv"
    cfg = SweepConfig(fixtures=("gaussian",), n=(32,), trials=100, samples=20, probes=False)
    trial_sweep(cfg, out)
    body = _read(out)[1:]
    assert len(body) == 101 and body[-1][CSV_COLUMNS.index("trial")] == "aggregate"


def test_relative_cells_skip_fixtures_without_condition3():
    cfg = SweepConfig(fixtures=("sigmoid", "tanh"), modes=("relative",))
    assert [c.fixture for c in cfg.cells()] == ["tanh"]
