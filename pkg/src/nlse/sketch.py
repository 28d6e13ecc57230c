"""Dense Gaussian embeddings and the embedding-dimension formulas."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import standard_normals

MODES = ("piecewise", "additive", "relative", "srec")
DEFAULT_C = 6.0
MAX_ENTRIES = 1 << 28


class SketchBudgetError(MemoryError):
    pass


@dataclass(frozen=True)
class DimSpec:
    mode: str
    k: int
    n: int
    delta: float
    eps: Optional[float] = None  # piecewise, relative
    eps1: Optional[float] = None  # additive, srec
    eps2: Optional[float] = None  # additive, srec
    t: Optional[int] = None  # piecewise
    constant_C: float = DEFAULT_C

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.k) != self.k or int(self.n) != self.n or self.k < 1 or self.n < 1:
            raise ValueError("k and n must be positive integers")
        if self.constant_C <= 0:
            raise ValueError("constant_C must be positive")
        needed = {"piecewise": ("eps", "t"), "relative": ("eps",),
                  "additive": ("eps1", "eps2"), "srec": ("eps1", "eps2")}[self.mode]
        for name in needed:
            if getattr(self, name) is None:
                raise ValueError(f"mode {self.mode} requires {name}")
        for name in ("delta", "eps", "eps1", "eps2"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.mode == "piecewise" and (int(self.t) != self.t or self.t < 1):
            raise ValueError("t must be a positive integer")

    def log_argument(self) -> float:
        if self.mode == "piecewise":
            return self.n * self.t
        if self.mode == "relative":
            return self.n / self.eps
        return self.n / self.eps2

    def distortion(self) -> float:
        return self.eps if self.mode in ("piecewise", "relative") else self.eps1


@dataclass(frozen=True)
class DimResult:
    m: int
    raw: int
    clamped: bool


def dimension(spec: DimSpec) -> DimResult:
    """``ceil(C (k ln(arg) + ln(1/delta)) / eps^2)`` clamped to ``[1, n]``."""
    val = spec.constant_C * (spec.k * math.log(spec.log_argument()) + math.log(1 / spec.delta))
    raw = math.ceil(val / spec.distortion() ** 2 - 1e-9)
    m = min(max(raw, 1), spec.n)
    return DimResult(m, raw, raw > spec.n)


def required_dim(spec: DimSpec) -> int:
    return dimension(spec).m


@dataclass(frozen=True, eq=False)
class SketchMatrix:
    entries: np.ndarray
    seed: Optional[int]
    distribution_tag: str = "gaussian"

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def fixed(cls, entries, tag: str = "fixed"):
        """Wrap an explicit matrix (identity, zero, ... test fixtures)."""
        return cls(np.array(entries, dtype=float, ndmin=2), None, tag)


def sample_sketch(m: int, n: int, seed: int, max_entries: int = MAX_ENTRIES) -> SketchMatrix:
    if m < 1 or n < 1:
        raise ValueError("need m, n >= 1")
    if m * n > max_entries:
        raise SketchBudgetError(f"{m}x{n} sketch exceeds budget of {max_entries} entries")
    g = standard_normals(seed, m * n).reshape(m, n)
    return SketchMatrix(g / math.sqrt(m), int(seed))


def apply(pi: SketchMatrix, y) -> np.ndarray:
    """``Pi @ y`` for a vector or an (n, s) block of column vectors."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != pi.n:
        raise ValueError(f"dimension mismatch: sketch has {pi.n} columns, got {y.shape[0]}")
    return pi.entries @ y


def spectral_norm(pi, iters: int = 200) -> float:
    """Power-iteration estimate of the largest singular value."""
    if iters < 50:
        raise ValueError("iters must be >= 50")
    a = pi.entries if isinstance(pi, SketchMatrix) else np.asarray(pi, dtype=float)
    v = standard_normals(0x5EED, a.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        est = nw
    return float(np.sqrt(est))


def spectral_bound(m: int, n: int) -> float:
    """High-probability bound ``3 sqrt(n) / sqrt(m)`` on ``||Pi||_2``."""
    return 3 * math.sqrt(n) / math.sqrt(m)
