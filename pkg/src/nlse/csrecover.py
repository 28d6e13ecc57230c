"""Compressed sensing with a generative prior x = G(z).

Measurements are y = A x + noise with a Gaussian A.  We check the
set-restricted eigenvalue inequality

    |A(x1 - x2)| >= (1 - eps1) |x1 - x2| - eps2

on sampled pairs of generator outputs, recover z by multi-start gradient
descent on |y - A G(z)|^2, and build PWL surrogates of deep generators by
swapping the first-layer activation for its PWL interpolant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import catalog
from .pwl import build_pwl
from .rng import derive_seed, standard_normals
from .sketch import SketchMatrix
from .subspace import SamplePlan, sample_latents

ARMIJO = 1e-4
MAX_HALVINGS = 60
MAX_STEP = 1e6


@dataclass(frozen=True, eq=False)
class Generator:
    """Layers ``(W, activation)`` applied as ``x <- activation(W @ x)``."""
    layers: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a generator needs at least one layer")
        for (w0, _), (w1, _) in zip(self.layers, self.layers[1:]):
            if w1.shape[1] != w0.shape[0]:
                raise ValueError(f"layer shapes do not chain: {w0.shape} -> {w1.shape}")

    @property
    def k(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def n(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def activation_names(self) -> list:
        return [getattr(act, "name", "custom") for _, act in self.layers]

    def __call__(self, z):
        return generate(self, z)

    def tail(self, start: int = 1) -> "Generator":
        return Generator(self.layers[start:])


def synth_generator(fixtures, widths, seed: int) -> Generator:
    """iid N(0, 1/fan_in) weights; ``widths = [k, n_1, ..., n_d]``."""
    if isinstance(fixtures, str):
        fixtures = [fixtures] * (len(widths) - 1)
    if len(fixtures) != len(widths) - 1:
        raise ValueError("need one activation per layer")
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
        w = standard_normals(derive_seed(seed, i), fan_in * fan_out).reshape(fan_out, fan_in)
        layers.append((w / math.sqrt(fan_in), catalog.get(fixtures[i])))
    return Generator(tuple(layers))


def generate(G: Generator, z) -> np.ndarray:
    """Forward pass for one latent (k,) or a batch (B, k)."""
    h = np.asarray(z, dtype=float)
    for w, act in G.layers:
        h = act(h @ w.T)
    return h


def _forward(G: Generator, z):
    pre, h = [], z
    for w, act in G.layers:
        p = h @ w.T
        pre.append(p)
        h = act(p)
    return h, pre


def _loss_grad(G, A, y, z):
    """Batched h(z) = |y - A G(z)|^2 and its gradient (right derivatives)."""
    x, pre = _forward(G, z)
    r = x @ A.T - y
    loss = np.einsum("ij,ij->i", r, r)
    g = 2 * r @ A
    for (w, act), p in zip(reversed(G.layers), reversed(pre)):
        g = (g * act.grad(p)) @ w
    return loss, g


def _loss(G, A, y, z):
    r = generate(G, z) @ A.T - y
    return np.einsum("ij,ij->i", r, r)


# ------------------------------------------------------------------ S-REC

@dataclass(frozen=True)
class SRECReport:
    pairs: int
    m: int
    n: int
    eps1: float
    eps2: float
    worst_slack: float
    worst_pair: int
    passed: bool
    seed: Optional[int] = None

    def record(self) -> dict:
        return dict(self.__dict__)


def srec_slack(A, x1, x2, eps1: float, eps2: float) -> np.ndarray:
    """Per-pair ``|A d| - (1 - eps1)|d| + eps2`` for rows d = x1 - x2."""
    d = np.atleast_2d(x1) - np.atleast_2d(x2)
    nd = np.linalg.norm(d, axis=1)
    nad = np.linalg.norm(d @ A.T, axis=1)
    return nad - (1 - eps1) * nd + eps2


def pair_latents(k: int, n: int, pairs: int, seed: int):
    p1 = SamplePlan.mixed(n, pairs, derive_seed(seed, 1))
    p2 = SamplePlan.mixed(n, pairs, derive_seed(seed, 2))
    z1 = np.concatenate([sample_latents(k, p1, c) for c in range(math.ceil(pairs / 1024))])
    z2 = np.concatenate([sample_latents(k, p2, c) for c in range(math.ceil(pairs / 1024))])
    return z1, z2


def check_srec(A: SketchMatrix, G: Generator, pairs: int, eps1: float, eps2: float,
               seed: int = 0, latents=None) -> SRECReport:
    """Worst slack of the S-REC inequality over sampled output pairs.

    ``latents`` may supply explicit (z1, z2) arrays instead of the mixed-radius
    pair plan.
    """
    if A.n != G.n:
        raise ValueError(f"dimension mismatch: A has {A.n} columns, G outputs R^{G.n}")
    z1, z2 = latents if latents is not None else pair_latents(G.k, G.n, pairs, seed)
    slack = srec_slack(A.entries, generate(G, np.atleast_2d(z1)),
                       generate(G, np.atleast_2d(z2)), eps1, eps2)
    j = int(np.argmin(slack))
    return SRECReport(int(slack.size), A.m, A.n, eps1, eps2, float(slack[j]), j,
                      bool(slack[j] >= 0), seed)


# --------------------------------------------------------------- recovery

@dataclass(frozen=True, eq=False)
class RecoveryResult:
    z_hat: np.ndarray
    x_hat: np.ndarray
    residual: float
    reconstruction_error: Optional[float]
    restarts_used: int
    iterations: int
    seed: int
    best_restart: int = 0
    aborted: tuple = ()  # restart indices stopped on non-finite values
    history: Optional[np.ndarray] = field(default=None, repr=False)  # (iters+1, R) residuals


def recover(G: Generator, A: SketchMatrix, y, restarts: int = 20, iters: int = 2000,
            step: float = 1.0, seed: int = 0, x_true=None, tol: float = 1e-24,
            keep_history: bool = False) -> RecoveryResult:
    """Gradient descent with Armijo backtracking from z = 0 and ``restarts``
    N(0, I) starts, all advanced together; the lowest residual wins (ties to
    the lowest restart index)."""
    a = A.entries
    y = np.asarray(y, dtype=float)[None, :]
    z = np.vstack([np.zeros((1, G.k)),
                   standard_normals(derive_seed(seed, 0), restarts * G.k).reshape(restarts, G.k)])
    R = z.shape[0]
    steps = np.full(R, float(step))
    done = np.zeros(R, dtype=bool)
    aborted = np.zeros(R, dtype=bool)
    its = np.zeros(R, dtype=int)
    loss, grad = _loss_grad(G, a, y, z)
    history = [loss.copy()] if keep_history else None

    for _ in range(iters):
        bad = ~np.isfinite(loss) | ~np.all(np.isfinite(grad), axis=1)
        aborted |= bad & ~done
        done |= bad | (loss <= tol)
        if done.all():
            break
        active = ~done
        gn2 = np.einsum("ij,ij->i", grad, grad)
        s = steps.copy()
        accepted = np.zeros(R, dtype=bool)
        new_loss = loss.copy()
        for _ in range(MAX_HALVINGS):
            pending = active & ~accepted
            if not pending.any():
                break
            cand = z[pending] - s[pending, None] * grad[pending]
            lc = _loss(G, a, y, cand)
            ok = np.isfinite(lc) & (lc <= loss[pending] - ARMIJO * s[pending] * gn2[pending])
            idx = np.flatnonzero(pending)
            z[idx[ok]] = cand[ok]
            new_loss[idx[ok]] = lc[ok]
            accepted[idx[ok]] = True
            s[idx[~ok]] *= 0.5
        stalled = active & ~accepted
        done |= stalled
        its[accepted] += 1
        # no change when the decrease is below machine resolution
        done |= accepted & (loss - new_loss <= 1e-15 * loss)
        steps = np.where(accepted, np.minimum(2 * s, MAX_STEP), s)
        upd = np.flatnonzero(accepted)
        if upd.size:
            l_new, g_new = _loss_grad(G, a, y, z[upd])
            loss[upd] = l_new
            grad[upd] = g_new
        if keep_history:
            history.append(loss.copy())

    usable = np.where(aborted | ~np.isfinite(loss), np.inf, loss)
    best = int(np.argmin(usable))
    z_hat = z[best].copy()
    x_hat = generate(G, z_hat)
    err = None if x_true is None else float(np.linalg.norm(np.asarray(x_true) - x_hat))
    return RecoveryResult(z_hat, x_hat, float(math.sqrt(max(loss[best], 0.0))), err, R,
                          int(its[best]), seed, best, tuple(np.flatnonzero(aborted).tolist()),
                          np.array(history) if keep_history else None)


@dataclass(frozen=True)
class CSProblem:
    G: Generator
    A: SketchMatrix
    z_true: np.ndarray
    x_true: np.ndarray
    noise: np.ndarray
    y: np.ndarray


def make_problem(G: Generator, A: SketchMatrix, seed: int, noise_ratio: float = 0.0) -> CSProblem:
    """Latent z* ~ N(0, I_k); noise scaled to ``noise_ratio * |A G(z*)|``."""
    z = standard_normals(derive_seed(seed, 0), G.k)
    x = generate(G, z)
    clean = A.entries @ x
    eta = np.zeros(A.m)
    if noise_ratio > 0:
        g = standard_normals(derive_seed(seed, 1), A.m)
        eta = g / np.linalg.norm(g) * noise_ratio * np.linalg.norm(clean)
    return CSProblem(G, A, z, x, eta, clean + eta)


# ---------------------------------------------------------- deep surrogate

def estimate_lipschitz(G: Generator, inputs: np.ndarray, seed: int = 0,
                       local_scale: float = 1e-3) -> float:
    """Max of |G(u) - G(v)| / |u - v| over sampled pairs.

    Half the pairs are two independent rows of ``inputs``; the rest are a row
    and a small random perturbation of it, which probes local slopes.
    """
    B = inputs.shape[0]
    half = B // 2
    u1, v1 = inputs[:half], inputs[half:2 * half]
    u2 = inputs[: B - half]
    d = standard_normals(derive_seed(seed, 7), u2.size).reshape(u2.shape)
    v2 = u2 + local_scale * d
    u = np.vstack([u1, u2])
    v = np.vstack([v1, v2])
    num = np.linalg.norm(generate(G, u) - generate(G, v), axis=1)
    den = np.linalg.norm(u - v, axis=1)
    keep = den > 0
    return float(np.max(num[keep] / den[keep]))


def deep_pwl_surrogate(G: Generator, eps2: float, L_est: Optional[float] = None,
                       pairs: int = 10_000, seed: int = 0, safety: float = 2.0,
                       require_bounded: bool = True) -> Generator:
    """Replace the first-layer activation with a PWL interpolant accurate to
    ``eps2 / (n L_est)``; then ``|G - G~| <= eps2 / sqrt(n)`` whenever the
    tail of the network is ``L_est``-Lipschitz.

    When ``L_est`` is omitted it is estimated from ``pairs`` sampled pairs of
    first-layer outputs and multiplied by ``safety``.
    """
    if G.depth < 2:
        raise ValueError("surrogate needs a generator of depth >= 2")
    w1, act1 = G.layers[0]
    if not isinstance(act1, catalog.Nonlinearity):
        raise ValueError("first-layer activation must be a catalog nonlinearity")
    if require_bounded:
        for _, act in G.layers[1:]:
            if getattr(act, "bound", None) is None:
                raise ValueError(f"activation {getattr(act, 'name', act)} after layer 1 "
                                 "is unbounded")
    n1 = w1.shape[0]
    tail = G.tail(1)
    estimated = L_est is None
    if estimated:
        z = np.concatenate([sample_latents(G.k, SamplePlan.mixed(n1, pairs, derive_seed(seed, 3)), c)
                            for c in range(math.ceil(pairs / 1024))])
        h = act1(z @ w1.T)
        L_est = safety * estimate_lipschitz(tail, h, seed)
    if L_est <= 0:
        raise ValueError("L_est must be positive")
    tol = eps2 / (n1 * L_est)
    f_tilde = build_pwl(act1, act1.constants, min(tol, 1.0))
    layers = ((w1, f_tilde),) + G.layers[1:]
    return Generator(layers, meta={"eps2": eps2, "L_est": L_est, "L_estimated": estimated,
                                   "pwl_tol": tol, "pieces": f_tilde.piece_count,
                                   "n": n1, "source_bound": act1.bound})


def first_layer(G: Generator) -> Generator:
    return Generator(G.layers[:1])


def surrogate_error(G: Generator, G_tilde: Generator, samples: int = 10_000,
                    seed: int = 0) -> dict:
    """Max sampled |G(z) - G~(z)| and max |G~_1(z)| over mixed-radius z."""
    plan = SamplePlan.mixed(G.n, samples, seed)
    z = np.concatenate([sample_latents(G.k, plan, c) for c in range(math.ceil(samples / 1024))])
    diff = np.linalg.norm(generate(G, z) - generate(G_tilde, z), axis=1)
    g1 = np.linalg.norm(generate(first_layer(G_tilde), z), axis=1)
    return {"max_error": float(diff.max()), "max_first_layer_norm": float(g1.max())}


# ------------------------------------------------------------------ sweeps

CS_COLUMNS = ("trial", "seed", "k", "n", "m", "depth", "fixture", "noise_norm", "residual",
              "recon_error", "restarts_used", "srec_slack", "pass")
NOISELESS_REL_TOL = 1e-2
NOISY_FACTOR = 5.0


def recovery_threshold(x_true, noise) -> float:
    """Acceptable reconstruction error: 1% of |x*| noiseless, 5 |noise| otherwise."""
    nn = float(np.linalg.norm(noise))
    return NOISY_FACTOR * nn if nn > 0 else NOISELESS_REL_TOL * float(np.linalg.norm(x_true))


def _cs_trial(cell: dict, cfg: dict, seed: int) -> dict:
    from .sketch import sample_sketch

    G = synth_generator(cell["fixture"], [cell["k"]] + [cell["n"]] * cell["depth"],
                        derive_seed(seed, 1))
    A = sample_sketch(cell["m"], cell["n"], derive_seed(seed, 2))
    prob = make_problem(G, A, derive_seed(seed, 3), cell["noise"])
    res = recover(G, A, prob.y, cfg["restarts"], cfg["iters"], cfg["step"],
                  derive_seed(seed, 4), x_true=prob.x_true)
    srec = check_srec(A, G, cfg["pairs"], cfg["eps1"], cfg["eps2"], derive_seed(seed, 5))
    limit = recovery_threshold(prob.x_true, prob.noise)
    return {"seed": seed, "noise_norm": float(np.linalg.norm(prob.noise)),
            "residual": res.residual, "recon_error": res.reconstruction_error,
            "restarts_used": res.restarts_used, "srec_slack": srec.worst_slack,
            "limit": limit, "pass": bool(res.reconstruction_error <= limit)}


def cs_cells(cfg: dict) -> list:
    from itertools import product
    from .sketch import DimSpec, dimension

    cells = []
    for fx, depth, k, n, noise in product(cfg["fixture"], cfg["depth"], cfg["k"], cfg["n"],
                                          cfg["noise"]):
        ms = cfg["m"] or (dimension(DimSpec("srec", k, n, cfg["delta"], eps1=cfg["eps1"],
                                            eps2=cfg["eps2"], constant_C=cfg["C"])).m,)
        for m in ms:
            cells.append({"fixture": fx, "depth": depth, "k": k, "n": n, "m": m,
                          "noise": noise})
    return cells


def cs_sweep(cfg: dict) -> tuple:
    """Rows for every (cell, trial) plus a ``median`` row per cell whose pass
    flag is the median criterion; returns (rows, cell_passed)."""
    from concurrent.futures import ThreadPoolExecutor

    rows, verdicts = [], []
    for ci, cell in enumerate(cs_cells(cfg)):
        seeds = [derive_seed(cfg["base_seed"], ci, t) for t in range(cfg["trials"])]
        if cfg["workers"] > 1:
            with ThreadPoolExecutor(cfg["workers"]) as ex:
                results = list(ex.map(lambda s: _cs_trial(cell, cfg, s), seeds))
        else:
            results = [_cs_trial(cell, cfg, s) for s in seeds]
        head = [cell["k"], cell["n"], cell["m"], cell["depth"], cell["fixture"]]
        for t, r in enumerate(results):
            rows.append([t, r["seed"]] + head + [r["noise_norm"], r["residual"], r["recon_error"],
                                                 r["restarts_used"], r["srec_slack"], r["pass"]])
        med_err = float(np.median([r["recon_error"] for r in results]))
        med_lim = float(np.median([r["limit"] for r in results]))
        ok = bool(med_err <= med_lim)
        rows.append(["median", ""] + head + [
            float(np.median([r["noise_norm"] for r in results])),
            float(np.median([r["residual"] for r in results])), med_err,
            results[0]["restarts_used"], float(min(r["srec_slack"] for r in results)), ok])
        verdicts.append(ok)
    return rows, verdicts
