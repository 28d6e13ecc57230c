"""Activation-pattern census for a subspace pushed through a PWL function.

Each coordinate of Qz falls into one of t pieces; the n(t-1) hyperplanes
(Qz)_i = t_j cut R^k into at most sum_{i<=k} C(n(t-1), i) cells, and f is
affine on each cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pwl import PWLFunction
from .rng import derive_seed, generator, standard_normals
from .subspace import Subspace

METHODS = ("exact_1d", "sign_sample")
TIE_SHIFT = 1e-12


@dataclass(frozen=True)
class RegionCensus:
    k: int
    n: int
    t: int
    method: str
    distinct_patterns: int
    bound: int
    samples_used: int
    degenerate: bool = False
    general_position_count: int | None = None

    def record(self) -> dict:
        return dict(self.__dict__)


def arrangement_bound(n: int, t: int, k: int) -> int:
    c = n * (t - 1)
    return sum(math.comb(c, i) for i in range(k + 1))


def region_map(pwl: PWLFunction, Z: Subspace, z, return_shifted: bool = False):
    """Piece index of every coordinate of Qz (ties go to the right piece).

    A z lying exactly on a hyperplane is nudged by +1e-12 in every coordinate.
    """
    z = np.asarray(z, dtype=float)
    x = Z.basis @ z
    shifted = bool(np.isin(x, pwl.breakpoints).any())
    if shifted:
        x = Z.basis @ (z + TIE_SHIFT)
    pattern = pwl.piece_index(x)
    return (pattern, shifted) if return_shifted else pattern


def _exact_1d(pwl: PWLFunction, Z: Subspace):
    q = Z.basis[:, 0]
    qs = q[q != 0]
    cross = np.sort((pwl.breakpoints[None, :] / qs[:, None]).ravel())
    gaps = np.diff(cross)
    degenerate = bool(np.any(gaps <= 1e-12 * np.maximum(1.0, np.abs(cross[1:]))))
    uniq = cross[np.concatenate([[True], gaps > 1e-12 * np.maximum(1.0, np.abs(cross[1:]))])]
    if uniq.size:
        pad = max(1.0, np.abs(uniq).max())
        probes = np.concatenate([[uniq[0] - pad], 0.5 * (uniq[1:] + uniq[:-1]), [uniq[-1] + pad]])
    else:
        probes = np.array([0.0])
    patterns = pwl.piece_index(np.outer(probes, q))
    distinct = np.unique(patterns, axis=0).shape[0]
    return distinct, probes.size, degenerate


def _radius_range(pwl: PWLFunction):
    nz = np.abs(pwl.breakpoints[pwl.breakpoints != 0])
    if nz.size == 0:
        return 1e-2, 1e2
    return 1e-2 * nz.min(), 1e2 * nz.max()


def _sign_sample(pwl: PWLFunction, Z: Subspace, budget: int, seed: int, chunk: int = 8192):
    lo, hi = _radius_range(pwl)
    seen = set()
    for c, start in enumerate(range(0, budget, chunk)):
        size = min(chunk, budget - start)
        g = standard_normals(derive_seed(seed, c), size * Z.k).reshape(size, Z.k)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        u = generator(derive_seed(seed, c, 1)).random(size)
        r = np.exp(math.log(lo) + (math.log(hi) - math.log(lo)) * u)
        pats = pwl.piece_index((r[:, None] * g) @ Z.basis.T).astype(np.int32)
        seen.update(map(bytes, np.unique(pats, axis=0)))
    return len(seen)


def census(pwl: PWLFunction, Z: Subspace, method: str = "sign_sample",
           budget: int = 100_000, seed: int = 0) -> RegionCensus:
    t = pwl.piece_count
    if t < 2:
        raise ValueError("a single affine piece does not partition the subspace")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if method == "exact_1d" and Z.k != 1:
        raise ValueError("exact_1d requires k = 1")
    bound = arrangement_bound(Z.n, t, Z.k)
    if method == "exact_1d":
        distinct, used, degenerate = _exact_1d(pwl, Z)
    else:
        if budget < 1000:
            raise ValueError("sign_sample needs budget >= 1000")
        distinct, used, degenerate = _sign_sample(pwl, Z, budget, seed), budget, False
    if distinct > bound:
        raise AssertionError(f"found {distinct} patterns, above the arrangement bound {bound}")
    return RegionCensus(Z.k, Z.n, t, method, distinct, bound, used, degenerate,
                        None if degenerate else bound)


def step_pwl(t: int, lo: float = 0.3, hi: float = 1.7) -> PWLFunction:
    """A t-piece PWL with distinct nonzero breakpoints spread over [lo, hi]."""
    xs = np.linspace(lo, hi, t - 1) if t > 2 else np.array([lo])
    ys = np.cumsum(np.arange(1, t)) * 0.1
    return PWLFunction.from_knots(xs, ys, 0.0, 1.0, source_name=f"step{t}")


def relu_pwl(breakpoint: float = 0.0) -> PWLFunction:
    return PWLFunction.from_knots([breakpoint], [0.0], 0.0, 1.0, source_name="relu")
