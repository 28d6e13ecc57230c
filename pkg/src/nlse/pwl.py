"""Piecewise-linear interpolants of catalog nonlinearities.

Knots are laid on ``[-c/eps**b, c/eps**b]`` at stride ``sqrt(8 eps / a)`` so
the interpolation error on each interval is at most ``eps`` by the usual
second-derivative bound.  Outside, ``f`` is replaced by its linear
asymptotes.  A one-stride connector on each side joins the last
interpolated knot to the asymptote ray so the approximant stays continuous.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .catalog import ConditionConstants, Nonlinearity

MERGE_TOL = 1e-12
# f'' constant on an interval makes the interpolation bound tight; shave the
# stride so rounding cannot push the error past eps
STRIDE_SHRINK = 1.0 - 1e-9


@dataclass(frozen=True, eq=False)
class PWLFunction:
    """Continuous piecewise-affine function.

    ``pieces[0]`` is the left ray ``x < breakpoints[0]``, ``pieces[-1]`` the
    right ray ``x >= breakpoints[-1]``; piece ``i`` covers
    ``[breakpoints[i-1], breakpoints[i])``.
    """
    breakpoints: np.ndarray
    knot_values: np.ndarray
    left: tuple  # (slope, intercept)
    right: tuple
    target_eps: float
    source_name: str
    inner_range: Optional[tuple] = None  # interpolated range (-c/eps^b, c/eps^b)
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_knots(cls, xs, ys, left_slope: float, right_slope: float,
                   source_name: str = "custom", target_eps: float = 0.0):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
            raise ValueError("need matching 1-d knot arrays")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        left = (float(left_slope), float(ys[0] - left_slope * xs[0]))
        right = (float(right_slope), float(ys[-1] - right_slope * xs[-1]))
        return cls(xs, ys, left, right, target_eps, source_name)

    @property
    def piece_count(self) -> int:
        return self.breakpoints.size + 1

    @property
    def pieces(self) -> list:
        """(slope, intercept) per piece, rays included."""
        t, y = self.breakpoints, self.knot_values
        s = np.diff(y) / np.diff(t)
        inner = [(float(si), float(y[i] - si * t[i])) for i, si in enumerate(s)]
        return [self.left] + inner + [self.right]

    def piece_index(self, x) -> np.ndarray:
        """Index of the piece containing x; ties go to the right piece."""
        return np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side="right")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        t, y = self.breakpoints, self.knot_values
        idx = np.searchsorted(t, x, side="right")
        out = np.empty_like(x)
        lo = idx == 0
        hi = idx == t.size
        mid = ~(lo | hi)
        out[lo] = self.left[0] * x[lo] + self.left[1]
        out[hi] = self.right[0] * x[hi] + self.right[1]
        if t.size > 1:
            j = idx[mid] - 1
            slope = (y[j + 1] - y[j]) / (t[j + 1] - t[j])
            out[mid] = y[j] + slope * (x[mid] - t[j])
        return out

    def derivative(self, x):
        """Right derivative (slope of the piece containing x)."""
        x = np.asarray(x, dtype=float)
        t, y = self.breakpoints, self.knot_values
        slopes = np.concatenate([[self.left[0]], np.diff(y) / np.diff(t), [self.right[0]]])
        return slopes[np.searchsorted(t, x, side="right")]

    def grad(self, x):
        return self.derivative(x)

    @property
    def name(self) -> str:
        return f"pwl[{self.source_name}]"

    def continuity_gap(self) -> float:
        """Largest disagreement between adjacent pieces at shared breakpoints."""
        pcs = self.pieces
        t = self.breakpoints
        gaps = [abs((pcs[i][0] - pcs[i + 1][0]) * t[i] + pcs[i][1] - pcs[i + 1][1])
                for i in range(t.size)]
        return max(gaps, default=0.0)

    def write_csv(self, path) -> None:
        pcs = self.pieces
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "t", "f_t", "slope", "intercept"])
            w.writerow([-1, "-inf", "", repr(pcs[0][0]), repr(pcs[0][1])])
            for i, (t, y) in enumerate(zip(self.breakpoints, self.knot_values)):
                w.writerow([i, repr(float(t)), repr(float(y)),
                            repr(pcs[i + 1][0]), repr(pcs[i + 1][1])])


def eval_pwl(pwl: PWLFunction, x):
    return pwl(x)


def step_size(a: float, eps: float) -> float:
    return math.sqrt(8.0 / a) * math.sqrt(eps) * STRIDE_SHRINK


def interior_interval_count(cc: ConditionConstants, eps: float) -> int:
    """Number of stride-``gamma`` intervals covering ``[-c/eps^b, c/eps^b]``."""
    span = 2 * cc.asymptote_threshold(eps)
    return max(1, math.ceil(span / step_size(cc.a, eps) - 1e-9))


def piece_count_bound(nl: Nonlinearity, cc: ConditionConstants, eps: float) -> int:
    # interior intervals, two connectors, two rays, one extra per discontinuity
    return interior_interval_count(cc, eps) + 4 + len(nl.second_derivative_discontinuities)


def build_pwl(nl: Nonlinearity, cc: Optional[ConditionConstants] = None,
              eps: float = 0.1) -> PWLFunction:
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    cc = cc or nl.constants
    if nl.affine is not None:
        s, b = nl.affine
        return PWLFunction(np.empty(0), np.empty(0), (s, b), (s, b),
                           eps, nl.name, meta={"affine": True})
    half = cc.asymptote_threshold(eps)
    gamma = step_size(cc.a, eps)
    count = interior_interval_count(cc, eps)
    knots = -half + gamma * np.arange(count + 1)
    knots[-1] = half  # last interval may be shorter than gamma
    for d in nl.second_derivative_discontinuities:
        if not -half < d < half:
            continue
        i = int(np.argmin(np.abs(knots - d)))
        if abs(knots[i] - d) <= MERGE_TOL:
            knots[i] = d
        else:
            knots = np.insert(knots, np.searchsorted(knots, d), d)
    values = nl.value(knots)

    lo, hi = -half - gamma, half + gamma
    xs = np.concatenate([[lo], knots, [hi]])
    ys = np.concatenate([[cc.d2 * lo + cc.e2], values, [cc.d1 * hi + cc.e1]])
    return PWLFunction(xs, ys, (float(cc.d2), float(cc.e2)), (float(cc.d1), float(cc.e1)),
                       float(eps), nl.name, inner_range=(-half, half),
                       meta={"gamma": gamma, "interior_intervals": count,
                             "a": cc.a, "b": cc.b, "c": cc.c})


def uniform_error(nl: Nonlinearity, pwl: PWLFunction, half_width: float, spacing: float,
                  chunk: int = 1 << 20) -> float:
    """Max of ``|f - pwl|`` on a uniform grid over ``[-half_width, half_width]``."""
    n = int(math.ceil(2 * half_width / spacing)) + 1
    worst = 0.0
    for start in range(0, n, chunk):
        xs = -half_width + spacing * np.arange(start, min(n, start + chunk))
        xs = np.minimum(xs, half_width)
        worst = max(worst, float(np.max(np.abs(nl.value(xs) - pwl(xs)))))
    return worst


def default_certification_grid(pwl: PWLFunction) -> tuple:
    """(half_width, spacing) = (2 c/eps^b, gamma/20)."""
    if pwl.inner_range is None:
        return 10.0, 1e-3
    return 2 * pwl.inner_range[1], pwl.meta["gamma"] / 20


def interval_errors(nl: Nonlinearity, pwl: PWLFunction, samples: int = 64) -> np.ndarray:
    """Rows (left, right, width, max_err) for every interval inside the
    interpolated range."""
    t = pwl.breakpoints
    lo, hi = pwl.inner_range
    rows = []
    for left, right in zip(t[:-1], t[1:]):
        if left < lo - MERGE_TOL or right > hi + MERGE_TOL:
            continue
        xs = np.linspace(left, right, samples)
        err = float(np.max(np.abs(nl.value(xs) - pwl(xs))))
        rows.append((left, right, right - left, err))
    return np.array(rows).reshape(-1, 4)


def certify(nl: Nonlinearity, eps: float, cc: Optional[ConditionConstants] = None) -> dict:
    pwl = build_pwl(nl, cc, eps)
    half, spacing = default_certification_grid(pwl)
    err = uniform_error(nl, pwl, half, spacing)
    return {"fixture": nl.name, "eps": eps, "max_error": err, "pieces": pwl.piece_count,
            "half_width": half, "spacing": spacing, "pass": err <= eps}
