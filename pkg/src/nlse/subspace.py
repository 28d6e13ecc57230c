"""Random k-dimensional subspaces of R^n and points of their entrywise images."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .rng import derive_seed, generator, standard_normals

CHUNK = 1024
ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Subspace:
    basis: np.ndarray  # (n, k), orthonormal columns
    seed: int

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def orthonormality_error(self) -> float:
        q = self.basis
        return float(np.max(np.abs(q.T @ q - np.eye(self.k))))


def _orthonormalize(g):
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def random_subspace(n: int, k: int, seed: int) -> Subspace:
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    q = _orthonormalize(standard_normals(seed, n * k).reshape(n, k))
    while np.max(np.abs(q.T @ q - np.eye(k))) > ORTHO_TOL:
        q = _orthonormalize(q)
    return Subspace(q, int(seed))


@dataclass(frozen=True)
class SamplePlan:
    count: int
    seed: int
    radius: str = "log_uniform"  # log_uniform | fixed | gaussian
    r_min: float = 1e-4
    r_max: float = 1e2
    r: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.radius not in ("log_uniform", "fixed", "gaussian"):
            raise ValueError(f"unknown radius distribution {self.radius!r}")
        if self.radius == "log_uniform" and not 0 < self.r_min <= self.r_max:
            raise ValueError("log_uniform needs 0 < r_min <= r_max")

    @classmethod
    def mixed(cls, n: int, count: int, seed: int) -> "SamplePlan":
        """Radii log-uniform on [1e-4 sqrt(n), 1e2 sqrt(n)]."""
        return cls(count, seed, "log_uniform", 1e-4 * math.sqrt(n), 1e2 * math.sqrt(n))


class Images(NamedTuple):
    z: np.ndarray  # (count, k)
    x: np.ndarray  # (count, n)
    y: np.ndarray  # (count, n)


def image_point(nl, Z: Subspace, z):
    x = Z.basis @ np.asarray(z, dtype=float)
    return x, nl(x)


def sample_latents(k: int, plan: SamplePlan, chunk: int) -> np.ndarray:
    size = min(CHUNK, plan.count - chunk * CHUNK)
    seed = derive_seed(plan.seed, chunk)
    g = standard_normals(seed, size * k).reshape(size, k)
    if plan.radius == "gaussian":
        return g
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    direction = g / norms
    if plan.radius == "fixed":
        return plan.r * direction
    u = generator(derive_seed(plan.seed, chunk, 1)).random(size)
    lo, hi = math.log(plan.r_min), math.log(plan.r_max)
    return np.exp(lo + (hi - lo) * u)[:, None] * direction


def iter_images(nl, Z: Subspace, plan: SamplePlan) -> Iterator[Images]:
    """Fixed-size chunks with per-chunk seeds, so output does not depend on
    how chunks are scheduled."""
    for c in range(math.ceil(plan.count / CHUNK)):
        z = sample_latents(Z.k, plan, c)
        x = z @ Z.basis.T
        yield Images(z, x, nl(x))


def sample_images(nl, Z: Subspace, plan: SamplePlan) -> Images:
    parts = list(iter_images(nl, Z, plan))
    return Images(*(np.concatenate([getattr(p, f) for p in parts]) for f in Images._fields))
