"""Empirical (eps1, eps2)-distortion of a sketch over f applied to a subspace.

For a sample y the sketch must satisfy

    (1 - eps1) |y| - eps2 <= |Pi y| <= (1 + eps1) |y| + eps2.

Ratios |Pi y| / |y| are reported separately above and below the norm
threshold eps / sqrt(n), where small-norm points are governed by the linear
behaviour of f near the origin rather than by the additive bound.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import catalog
from .rng import derive_seed, standard_normals
from .sketch import DimSpec, SketchMatrix, dimension, sample_sketch
from .subspace import SamplePlan, Subspace, random_subspace, sample_latents

PASS_RATE = 0.95

CSV_COLUMNS = ("fixture", "mode", "k", "n", "m", "eps1", "eps2", "delta", "C", "trial",
               "seed", "samples", "max_rel_over", "min_rel_under", "additive_fit",
               "split_threshold", "worst_SL", "worst_SU", "pass")


def additive_fit(norm_y, norm_py, eps1: float) -> float:
    """Smallest eps2 making every sample satisfy the two-sided bound at eps1."""
    norm_y = np.asarray(norm_y)
    norm_py = np.asarray(norm_py)
    if norm_y.size == 0:
        return 0.0
    over = norm_py - (1 + eps1) * norm_y
    under = (1 - eps1) * norm_y - norm_py
    return float(max(0.0, over.max(), under.max()))


@dataclass(frozen=True, eq=False)
class DistortionReport:
    fixture: str
    m: int
    n: int
    k: int
    samples: int
    zero_norm: int
    eps1: float
    max_rel_over: float
    min_rel_under: float
    additive_fit: float
    split_threshold: float
    worst_SL: float  # max |ratio - 1| over |y| > threshold (nan if empty)
    worst_SU: float
    count_SL: int
    count_SU: int
    seed_sketch: Optional[int] = None
    seed_subspace: Optional[int] = None
    seed_plan: Optional[int] = None
    mode: str = "additive"
    eps_effective: Optional[float] = None
    passed: Optional[bool] = None
    probes: int = 0
    norms: tuple = field(default=(), repr=False)  # (|y|, |Pi y|) arrays

    @property
    def worst_relative(self) -> float:
        return max(self.max_rel_over, self.min_rel_under)

    def additive_fit_at(self, eps1: float) -> float:
        return additive_fit(self.norms[0], self.norms[1], eps1)


def summarize(norm_y, norm_py, eps1: float, threshold: float, **meta) -> DistortionReport:
    """Fold per-sample norms into a report; zero-norm samples only enter the
    additive fit."""
    for key, default in (("fixture", ""), ("m", 0), ("n", 0), ("k", 0)):
        meta.setdefault(key, default)
    norm_y = np.asarray(norm_y, dtype=float)
    norm_py = np.asarray(norm_py, dtype=float)
    nz = norm_y > 0
    ratio = norm_py[nz] / norm_y[nz]
    dev = np.abs(ratio - 1)
    big = norm_y[nz] > threshold

    def worst(mask):
        return float(dev[mask].max()) if mask.any() else float("nan")

    return DistortionReport(
        samples=int(norm_y.size), zero_norm=int((~nz).sum()), eps1=float(eps1),
        max_rel_over=float((ratio - 1).max()) if ratio.size else 0.0,
        min_rel_under=float((1 - ratio).max()) if ratio.size else 0.0,
        additive_fit=additive_fit(norm_y, norm_py, eps1),
        split_threshold=float(threshold), worst_SL=worst(big), worst_SU=worst(~big),
        count_SL=int(big.sum()), count_SU=int((~big).sum()),
        norms=(norm_y, norm_py), **meta)


# ----------------------------------------------------------------- probes

def _directions(seed: int, count: int, k: int) -> np.ndarray:
    g = standard_normals(seed, count * k).reshape(count, k)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def threshold_radius(nl, Z: Subspace, u, target: float, lo=1e-14, hi=1e8, iters=200):
    """Radius r with |f(Q r u)| = target via log-bisection, or None when the
    norm does not cross target on [lo, hi]."""
    def norm_at(r):
        return float(np.linalg.norm(nl(Z.basis @ (r * u))))

    if not norm_at(lo) < target < norm_at(hi):
        return None
    a, b = math.log(lo), math.log(hi)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if norm_at(math.exp(mid)) < target:
            a = mid
        else:
            b = mid
        if b - a < 1e-12:
            break
    return math.exp(0.5 * (a + b))


def probe_latents(nl, Z: Subspace, threshold: float, seed: int, count: int = 16) -> np.ndarray:
    """Latents aimed at the case boundaries of the embedding argument:
    norms straddling ``threshold``, coordinates pinned on f'' jumps, and
    very large radii where only the asymptotes matter."""
    n, k = Z.n, Z.k
    dirs = _directions(derive_seed(seed, 0), count, k)
    out = []
    for u in dirs:
        r = threshold_radius(nl, Z, u, threshold)
        if r is not None:
            out.extend([r * (1 - 1e-3) * u, r * (1 + 1e-3) * u])
    disc = getattr(nl, "second_derivative_discontinuities", ())
    if disc and k >= 1:
        rows = np.arange(count) % n
        base = _directions(derive_seed(seed, 1), count, k)
        for d, (i, u) in itertools.product(disc, zip(rows, base)):
            q = Z.basis[i]
            out.append(u + (d - q @ u) / (q @ q) * q)
    big = _directions(derive_seed(seed, 2), count, k) * 1e3 * math.sqrt(n)
    out.extend(big)
    return np.array(out).reshape(-1, k)


# --------------------------------------------------------------- measure

def _norms(pi: SketchMatrix, nl, Z: Subspace, latents: np.ndarray):
    y = nl(latents @ Z.basis.T)
    py = y @ pi.entries.T
    return np.linalg.norm(y, axis=1), np.linalg.norm(py, axis=1)


def _collect(pi, nl, Z, plan: SamplePlan, threshold: float, probes: bool):
    parts_y, parts_py = [], []
    for c in range(math.ceil(plan.count / 1024)):
        ny, npy = _norms(pi, nl, Z, sample_latents(Z.k, plan, c))
        parts_y.append(ny)
        parts_py.append(npy)
    n_probe = 0
    if probes:
        lat = probe_latents(nl, Z, threshold, derive_seed(plan.seed, 0xB0B))
        ny, npy = _norms(pi, nl, Z, lat)
        parts_y.append(ny)
        parts_py.append(npy)
        n_probe = lat.shape[0]
    return np.concatenate(parts_y), np.concatenate(parts_py), n_probe


def _check_dims(pi, Z):
    if pi.n != Z.n:
        raise ValueError(f"dimension mismatch: sketch has {pi.n} columns, subspace lives in R^{Z.n}")


def measure(pi: SketchMatrix, nl, Z: Subspace, plan: SamplePlan, eps1: float,
            probes: bool = True) -> DistortionReport:
    _check_dims(pi, Z)
    threshold = eps1 / math.sqrt(Z.n)
    ny, npy, n_probe = _collect(pi, nl, Z, plan, threshold, probes)
    return summarize(ny, npy, eps1, threshold, fixture=getattr(nl, "name", "custom"),
                     m=pi.m, n=Z.n, k=Z.k, seed_sketch=pi.seed, seed_subspace=Z.seed,
                     seed_plan=plan.seed, mode="additive", probes=n_probe)


def measure_relative(pi: SketchMatrix, nl, Z: Subspace, plan: SamplePlan, eps: float,
                     probes: bool = True) -> DistortionReport:
    cc = getattr(nl, "constants", None)
    if cc is None or not cc.has_condition3:
        raise ValueError(f"{getattr(nl, 'name', nl)} does not satisfy the near-origin "
                         "linearity condition; relative-error mode is unavailable")
    _check_dims(pi, Z)
    eps_eff = min(cc.g1, eps)
    threshold = eps_eff / math.sqrt(Z.n)
    ny, npy, n_probe = _collect(pi, nl, Z, plan, threshold, probes)
    rep = summarize(ny, npy, eps, threshold, fixture=nl.name, m=pi.m, n=Z.n, k=Z.k,
                    seed_sketch=pi.seed, seed_subspace=Z.seed, seed_plan=plan.seed,
                    mode="relative", eps_effective=eps_eff, probes=n_probe)
    return replace(rep, passed=rep.worst_relative <= eps)


# ----------------------------------------------------------------- trials

@dataclass(frozen=True)
class Cell:
    fixture: str
    mode: str  # additive | relative
    k: int
    n: int
    delta: float
    C: float
    eps1: Optional[float] = None  # additive
    eps2: Optional[float] = None  # additive
    eps: Optional[float] = None  # relative
    m: Optional[int] = None  # override of the formula

    def dim_spec(self) -> DimSpec:
        if self.mode == "relative":
            return DimSpec("relative", self.k, self.n, self.delta, eps=self.eps, constant_C=self.C)
        return DimSpec("additive", self.k, self.n, self.delta, eps1=self.eps1, eps2=self.eps2,
                       constant_C=self.C)

    def sketch_dim(self) -> int:
        return self.m if self.m is not None else dimension(self.dim_spec()).m


def run_trial(cell: Cell, seed: int, samples: int = 1000, probes: bool = True) -> DistortionReport:
    """One seeded instance: fresh subspace, sketch and sample stream."""
    nl = catalog.get(cell.fixture)
    Z = random_subspace(cell.n, cell.k, derive_seed(seed, 1))
    pi = sample_sketch(cell.sketch_dim(), cell.n, derive_seed(seed, 2))
    plan = SamplePlan.mixed(cell.n, samples, derive_seed(seed, 3))
    if cell.mode == "relative":
        return measure_relative(pi, nl, Z, plan, cell.eps, probes)
    rep = measure(pi, nl, Z, plan, cell.eps1, probes)
    return replace(rep, passed=rep.additive_fit <= cell.eps2)


def trial_seed(base_seed: int, cell_index: int, trial: int) -> int:
    return derive_seed(base_seed, cell_index, trial)


def run_cell(cell: Cell, trials: int, base_seed: int, cell_index: int = 0,
             samples: int = 1000, workers: int = 1, probes: bool = True) -> list:
    seeds = [trial_seed(base_seed, cell_index, t) for t in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(lambda s: run_trial(cell, s, samples, probes), seeds))
    return [run_trial(cell, s, samples, probes) for s in seeds]


def pass_rate(reports) -> float:
    return sum(bool(r.passed) for r in reports) / max(1, len(reports))


@dataclass(frozen=True)
class SweepConfig:
    fixtures: tuple = ()
    modes: tuple = ("additive",)
    k: tuple = (4,)
    n: tuple = (256,)
    eps1: tuple = (0.25,)
    eps2: tuple = (0.1,)
    eps: tuple = (0.25,)
    delta: tuple = (0.05,)
    C: tuple = (6.0,)
    m: tuple = ()
    trials: int = 100
    samples: int = 1000
    base_seed: int = 0
    workers: int = 1
    probes: bool = True

    def cells(self) -> list:
        """Cartesian product of the grid; relative cells are skipped for
        fixtures without near-origin constants."""
        out = []
        ms = self.m or (None,)
        for fx, mode, k, n, delta, C, m in itertools.product(
                self.fixtures, self.modes, self.k, self.n, self.delta, self.C, ms):
            if mode == "relative":
                if not catalog.get(fx).constants.has_condition3:
                    continue
                for eps in self.eps:
                    out.append(Cell(fx, mode, k, n, delta, C, eps=eps, m=m))
            else:
                for e1, e2 in itertools.product(self.eps1, self.eps2):
                    out.append(Cell(fx, mode, k, n, delta, C, eps1=e1, eps2=e2, m=m))
        return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _row(cell: Cell, m: int, trial, seed, rep: DistortionReport) -> list:
    e1 = cell.eps if cell.mode == "relative" else cell.eps1
    e2 = 0.0 if cell.mode == "relative" else cell.eps2
    return [cell.fixture, cell.mode, cell.k, cell.n, m, e1, e2, cell.delta, cell.C, trial, seed,
            rep.samples, rep.max_rel_over, rep.min_rel_under, rep.additive_fit,
            rep.split_threshold, rep.worst_SL, rep.worst_SU, rep.passed]


def _max_or_nan(values) -> float:
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    return float(v.max()) if v.size else float("nan")


def trial_sweep(config: SweepConfig, out_path=None) -> tuple:
    """Run every cell; returns (rows, cell_summaries) and optionally writes CSV.

    Each cell contributes one row per trial and one ``aggregate`` row whose
    ``pass`` column holds the pass rate.
    """
    rows, summaries = [], []
    for ci, cell in enumerate(config.cells()):
        reps = run_cell(cell, config.trials, config.base_seed, ci, config.samples,
                        config.workers, config.probes)
        m = cell.sketch_dim()
        for t, rep in enumerate(reps):
            rows.append(_row(cell, m, t, rep.seed_sketch, rep))
        rate = pass_rate(reps)
        agg = [cell.fixture, cell.mode, cell.k, cell.n, m,
               cell.eps if cell.mode == "relative" else cell.eps1,
               0.0 if cell.mode == "relative" else cell.eps2, cell.delta, cell.C,
               "aggregate", "", sum(r.samples for r in reps),
               max(r.max_rel_over for r in reps), max(r.min_rel_under for r in reps),
               max(r.additive_fit for r in reps), reps[0].split_threshold,
               _max_or_nan([r.worst_SL for r in reps]),
               _max_or_nan([r.worst_SU for r in reps]), rate]
        rows.append(agg)
        summaries.append({"cell": cell, "m": m, "pass_rate": rate,
                          "worst": max(r.worst_relative for r in reps),
                          "passed": rate >= PASS_RATE})
    if out_path is not None:
        write_csv(rows, out_path)
    return rows, summaries


def write_csv(rows, path) -> None:
    write_csv_with(rows, path, CSV_COLUMNS)


def write_csv_with(rows, path, columns) -> None:
    """Header plus rows; floats via repr and booleans as 1/0."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
