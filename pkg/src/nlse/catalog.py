"""Scalar nonlinearities with their asymptote / curvature constants, and
grid-based verifiers for the three regularity conditions.

Condition 1 bounds ``sup |f''|`` by ``a``.  Condition 2 asks ``f`` to sit
within ``eps`` of a line beyond ``|x| >= c / eps**b``.  Condition 3 asks the
inverse of ``f`` to be linear up to a quadratic term on ``|y| <= g1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ConditionConstants:
    a: float
    b: float
    c: float
    d1: float
    e1: float
    d2: float
    e2: float
    g1: Optional[float] = None
    g2: Optional[float] = None
    g3: Optional[float] = None
    # constants as printed in the source text when they differ from the ones used
    transcribed_constants: Optional[dict] = None

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c > 0):
            raise ValueError("a, b, c must be positive")
        if self.g1 is not None:
            if self.g2 is None or self.g3 is None:
                raise ValueError("g1, g2, g3 must be given together")
            if self.g1 <= 0 or self.g2 == 0 or self.g3 < 0:
                raise ValueError("need g1 > 0, g2 != 0, g3 >= 0")

    @property
    def has_condition3(self) -> bool:
        return self.g1 is not None

    def asymptote_threshold(self, eps: float) -> float:
        """Distance ``c / eps**b`` beyond which the linear asymptotes apply."""
        return self.c / eps ** self.b


@dataclass(frozen=True)
class Nonlinearity:
    name: str
    value: ArrayFn
    derivative: ArrayFn
    second_derivative: ArrayFn
    constants: ConditionConstants
    second_derivative_discontinuities: tuple = ()
    inverse: Optional[ArrayFn] = None
    inverse_domain: Optional[tuple] = None
    bound: Optional[float] = None  # sup |f| when finite
    affine: Optional[tuple] = None  # (slope, intercept) when f is affine

    def __post_init__(self):
        disc = self.second_derivative_discontinuities
        if any(b <= a for a, b in zip(disc, disc[1:])):
            raise ValueError("discontinuities must be strictly increasing")

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def eval(self, x: float) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def grad(self, x):
        return self.derivative(np.asarray(x, dtype=float))


def eval(nl: Nonlinearity, x: float) -> float:  # noqa: A001 - mirrors the op name
    return nl.eval(x)


# ---------------------------------------------------------------- fixtures

def _sigmoid_dd(x):
    s = expit(x)
    return s * (1 - s) * (1 - 2 * s)


def _softplus_dd(x):
    s = expit(x)
    return s * (1 - s)


def _tanh_dd(x):
    t = np.tanh(x)
    return -2 * t * (1 - t * t)


def _elu(x):
    return np.where(x >= 0, x, np.expm1(np.minimum(x, 0)))


def _elu_d(x):
    return np.where(x >= 0, 1.0, np.exp(np.minimum(x, 0)))


def _elu_dd(x):
    # right limit at 0
    return np.where(x >= 0, 0.0, np.exp(np.minimum(x, 0)))


def _elu_inv(y):
    return np.where(y >= 0, y, np.log1p(np.minimum(y, 0)))


def _softsign_dd(x):
    ax = np.abs(x)
    return np.where(x >= 0, -2 / (1 + ax) ** 3, 2 / (1 + ax) ** 3)


def _softsign_inv(y):
    return y / (1 - np.abs(y))


def _sqnl(x):
    xc = np.clip(x, -2, 2)
    return np.where(xc >= 0, xc - xc * xc / 4, xc + xc * xc / 4)


def _sqnl_d(x):
    return np.where(x >= 2, 0.0, np.where(x >= 0, 1 - x / 2, np.where(x >= -2, 1 + x / 2, 0.0)))


def _sqnl_dd(x):
    return np.where(x >= 2, 0.0, np.where(x >= 0, -0.5, np.where(x >= -2, 0.5, 0.0)))


def _sqnl_inv(y):
    # 2 - 2 sqrt(1 - y), written to avoid cancellation near 0
    ay = np.abs(y)
    return np.sign(y) * 2 * ay / (1 + np.sqrt(1 - ay))


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _identity(x):
    return np.asarray(x, dtype=float) * 1.0


SQRT3 = math.sqrt(3.0)

SIGMOID = Nonlinearity(
    "sigmoid", expit, lambda x: expit(x) * (1 - expit(x)), _sigmoid_dd,
    ConditionConstants(a=1 / (6 * SQRT3), b=1, c=1, d1=0, e1=1, d2=0, e2=0,
                       transcribed_constants={"d1": 1, "e1": 0, "d2": 0, "e2": 0}),
    bound=1.0,
)
SOFTPLUS = Nonlinearity(
    "softplus", lambda x: np.logaddexp(0.0, x), expit, _softplus_dd,
    ConditionConstants(a=0.25, b=1, c=1, d1=1, e1=0, d2=0, e2=0,
                       transcribed_constants={"d1": 0, "e1": 1, "d2": 0, "e2": 0}),
)
GAUSSIAN = Nonlinearity(
    "gaussian", lambda x: np.exp(-x * x), lambda x: -2 * x * np.exp(-x * x),
    lambda x: np.exp(-x * x) * (4 * x * x - 2),
    ConditionConstants(a=2, b=1, c=1, d1=0, e1=0, d2=0, e2=0),
    bound=1.0,
)
TANH = Nonlinearity(
    "tanh", np.tanh, lambda x: 1 - np.tanh(x) ** 2, _tanh_dd,
    ConditionConstants(a=4 / (3 * SQRT3), b=1, c=1, d1=0, e1=1, d2=0, e2=-1,
                       g1=0.5, g2=1, g3=0.2),
    inverse=np.arctanh, inverse_domain=(-1.0, 1.0), bound=1.0,
)
ELU = Nonlinearity(
    "elu", _elu, _elu_d, _elu_dd,
    ConditionConstants(a=1, b=1, c=1, d1=1, e1=0, d2=0, e2=-1, g1=0.5, g2=1, g3=1),
    second_derivative_discontinuities=(0.0,),
    inverse=_elu_inv, inverse_domain=(-1.0, math.inf),
)
ARCTAN = Nonlinearity(
    "arctan", np.arctan, lambda x: 1 / (1 + x * x), lambda x: -2 * x / (1 + x * x) ** 2,
    ConditionConstants(a=3 * SQRT3 / 8, b=1, c=1, d1=0, e1=math.pi / 2, d2=0,
                       e2=-math.pi / 2, g1=1, g2=1, g3=0.56),
    inverse=np.tan, inverse_domain=(-math.pi / 2, math.pi / 2), bound=math.pi / 2,
)
SOFTSIGN = Nonlinearity(
    "softsign", lambda x: x / (1 + np.abs(x)), lambda x: 1 / (1 + np.abs(x)) ** 2,
    _softsign_dd,
    ConditionConstants(a=2, b=1, c=1, d1=0, e1=1, d2=0, e2=-1, g1=0.5, g2=1, g3=2),
    second_derivative_discontinuities=(0.0,),
    inverse=_softsign_inv, inverse_domain=(-1.0, 1.0), bound=1.0,
)
SQNL = Nonlinearity(
    "sqnl", _sqnl, _sqnl_d, _sqnl_dd,
    ConditionConstants(a=0.5, b=1, c=1, d1=0, e1=1, d2=0, e2=-1, g1=0.5, g2=1, g3=1),
    second_derivative_discontinuities=(-2.0, 0.0, 2.0),
    inverse=_sqnl_inv, inverse_domain=(-1.0, 1.0), bound=1.0,
)
IDENTITY = Nonlinearity(
    "identity", _identity, _one, _zero,
    ConditionConstants(a=1, b=1, c=1, d1=1, e1=0, d2=1, e2=0, g1=1, g2=1, g3=0),
    inverse=_identity, inverse_domain=(-math.inf, math.inf), affine=(1.0, 0.0),
)

FIXTURES = {nl.name: nl for nl in (
    SIGMOID, SOFTPLUS, GAUSSIAN, TANH, ELU, ARCTAN, SOFTSIGN, SQNL, IDENTITY)}


def get(name: str) -> Nonlinearity:
    try:
        return FIXTURES[name.lower()]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}") from None


def affine_nonlinearity(slope: float, intercept: float, name: str = "affine") -> Nonlinearity:
    """An exactly affine ``f``; every condition holds with trivial constants."""
    return Nonlinearity(
        name,
        lambda x: slope * np.asarray(x, dtype=float) + intercept,
        lambda x: np.full_like(np.asarray(x, dtype=float), slope),
        _zero,
        ConditionConstants(a=1, b=1, c=1, d1=slope, e1=intercept, d2=slope, e2=intercept),
        affine=(float(slope), float(intercept)),
    )


# ------------------------------------------------------------- verifiers

@dataclass(frozen=True)
class GridSpec:
    lo: float = -50.0
    hi: float = 50.0
    spacing: float = 1e-3
    refine_window: float = 0.1
    refine_spacing: float = 1e-5

    def points(self, extra=()) -> np.ndarray:
        n = int(round((self.hi - self.lo) / self.spacing)) + 1
        xs = np.linspace(self.lo, self.hi, n)
        extra = np.asarray(list(extra), dtype=float)
        if extra.size:
            xs = np.union1d(xs, extra[(extra >= self.lo) & (extra <= self.hi)])
        return xs


@dataclass(frozen=True)
class Violation:
    x: float
    value: float


@dataclass(frozen=True)
class CertResult:
    fixture: str
    condition: int
    claimed: float
    observed: float
    passed: bool
    argmax: float
    eps: Optional[float] = None
    violation: Optional[Violation] = None
    notes: dict = field(default_factory=dict)

    def record(self) -> dict:
        out = {"fixture": self.fixture, "condition": self.condition,
               "claimed": self.claimed, "observed": self.observed,
               "pass": self.passed, "argmax": self.argmax}
        if self.eps is not None:
            out["eps"] = self.eps
        if self.violation is not None:
            out["violation"] = {"x": self.violation.x, "value": self.violation.value}
        return out


def _first_violation(xs, vals, limit):
    bad = np.flatnonzero(vals > limit)
    if bad.size == 0:
        return None
    i = bad[0]
    return Violation(float(xs[i]), float(vals[i]))


def verify_condition1(nl: Nonlinearity, claimed_a: Optional[float] = None,
                      grid: GridSpec = GridSpec(), tol: float = 1e-6) -> CertResult:
    if claimed_a is None:
        claimed_a = nl.constants.a
    disc = np.asarray(nl.second_derivative_discontinuities, dtype=float)
    extra = np.concatenate([disc, disc - grid.spacing, disc + grid.spacing])
    xs = grid.points(extra)
    vals = np.abs(nl.second_derivative(xs))
    i = int(np.argmax(vals))
    # refine around the coarse argmax
    w = grid.refine_window
    fine = np.arange(xs[i] - w, xs[i] + w + grid.refine_spacing / 2, grid.refine_spacing)
    fine = fine[(fine >= grid.lo) & (fine <= grid.hi)]
    fvals = np.abs(nl.second_derivative(fine))
    xs = np.concatenate([xs, fine])
    vals = np.concatenate([vals, fvals])
    j = int(np.argmax(vals))
    order = np.argsort(xs, kind="stable")
    violation = _first_violation(xs[order], vals[order], claimed_a + tol)
    return CertResult(nl.name, 1, float(claimed_a), float(vals[j]), violation is None,
                      float(xs[j]), violation=violation)


def verify_condition2(nl: Nonlinearity, cc: Optional[ConditionConstants] = None,
                      eps: float = 0.1, samples: int = 20001) -> CertResult:
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    cc = cc or nl.constants
    lo = cc.asymptote_threshold(eps)
    right = np.linspace(lo, 10 * lo, samples)
    left = -right[::-1]
    dev_r = np.abs(nl.value(right) - (cc.d1 * right + cc.e1))
    dev_l = np.abs(nl.value(left) - (cc.d2 * left + cc.e2))
    xs = np.concatenate([left, right])
    dev = np.concatenate([dev_l, dev_r])
    j = int(np.argmax(dev))
    violation = _first_violation(xs, dev, eps)
    return CertResult(nl.name, 2, float(eps), float(dev[j]), violation is None,
                      float(xs[j]), eps=float(eps), violation=violation,
                      notes={"right_max": float(dev_r.max()), "left_max": float(dev_l.max())})


def verify_condition3(nl: Nonlinearity, cc: Optional[ConditionConstants] = None,
                      spacing: float = 1e-4) -> CertResult:
    cc = cc or nl.constants
    if nl.inverse is None or not cc.has_condition3:
        raise ValueError(f"{nl.name}: condition 3 not claimed (no inverse / g-constants)")
    n = int(math.ceil(cc.g1 / spacing))
    pos = np.linspace(0.0, cc.g1, n + 1)[1:]
    ys = np.concatenate([-pos[::-1], pos])
    lo, hi = nl.inverse_domain
    ys = ys[(ys > lo) & (ys < hi)]
    dev = np.abs(cc.g2 * nl.inverse(ys) - ys)
    ratio = dev / ys ** 2
    j = int(np.argmax(ratio))
    bad = np.flatnonzero(dev > cc.g3 * ys ** 2 + 1e-10)
    violation = Violation(float(ys[bad[0]]), float(ratio[bad[0]])) if bad.size else None
    return CertResult(nl.name, 3, float(cc.g3), float(ratio[j]), violation is None,
                      float(ys[j]), violation=violation)


def verify_all(names=None, eps_values=(1.0, 0.5, 0.1, 0.01)) -> list:
    """Run every applicable verifier; returns CertResults in a fixed order."""
    out = []
    for name in names or FIXTURES:
        nl = get(name)
        out.append(verify_condition1(nl))
        for eps in eps_values:
            out.append(verify_condition2(nl, eps=eps))
        if nl.constants.has_condition3 and nl.inverse is not None:
            out.append(verify_condition3(nl))
    return out
