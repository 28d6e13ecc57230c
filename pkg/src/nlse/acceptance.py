"""Desk-scale acceptance checks, one function per criterion.

Each check returns an :class:`Outcome` with a verdict, a one-line detail and
its wall time; ``time_limit`` is the budget the check must also respect.
"""
from __future__ import annotations

import filecmp
import io
import math
import tempfile
import time
from contextlib import redirect_stdout
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import catalog, config, csrecover, distortion, pwl, regions, sketch, subspace
from .rng import derive_seed


@dataclass(frozen=True)
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    time_limit: float

    @property
    def ok(self) -> bool:
        return self.passed and self.seconds <= self.time_limit

    def line(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        return (f"{verdict} criterion {self.number:2d} {self.title}: {self.detail} "
                f"[{self.seconds:.1f}s / {self.time_limit:.0f}s]")


def _timed(number, title, limit, fn) -> Outcome:
    t0 = time.perf_counter()
    passed, detail = fn()
    return Outcome(number, title, bool(passed), detail, time.perf_counter() - t0, limit)


# ------------------------------------------------------------------ checks

def _catalog():
    recs = catalog.verify_all(eps_values=(1.0, 0.5, 0.1, 0.01))
    bad = [f"{r.fixture}/c{r.condition}" for r in recs if not r.passed]
    return not bad, f"{len(recs) - len(bad)}/{len(recs)} condition checks" + (
        f", failing {bad}" if bad else "")


FIT_EPS = (0.1, 0.05, 0.01)


def _pwl():
    worst, fails, exps = 0.0, [], {}
    for name, nl in catalog.FIXTURES.items():
        for eps in (0.5, 0.1, 0.01):
            rec = pwl.certify(nl, eps)
            worst = max(worst, rec["max_error"] / eps)
            if not rec["pass"]:
                fails.append(f"{name}@{eps}")
        if nl.affine is None and nl.constants.b == 1:
            counts = [pwl.build_pwl(nl, eps=e).piece_count for e in FIT_EPS]
            exps[name] = float(np.polyfit(np.log(FIT_EPS), np.log(counts), 1)[0])
    in_range = all(-1.7 <= e <= -1.3 for e in exps.values())
    lo, hi = min(exps.values()), max(exps.values())
    return not fails and in_range, (f"max error/eps {worst:.9f}, exponents in "
                                    f"[{lo:.3f}, {hi:.3f}]" + (f", failing {fails}" if fails else ""))


def _sweep(cells, trials=100, samples=1000, base_seed=0, workers=4):
    rates = []
    for i, cell in enumerate(cells):
        reps = distortion.run_cell(cell, trials, base_seed, i, samples, workers)
        rates.append((cell, reps))
    return rates


def _linear():
    cell = distortion.Cell("identity", "relative", 4, 256, 0.05, sketch.DEFAULT_C, eps=0.25)
    (_, reps), = _sweep([cell])
    hits = sum(r.worst_relative <= 0.25 for r in reps)
    worst = max(r.worst_relative for r in reps)
    return hits >= 95, f"m={cell.sketch_dim()}, {hits}/100 trials, worst {worst:.3f}"


def _additive():
    cells = [distortion.Cell(fx, "additive", 4, 256, 0.05, sketch.DEFAULT_C, eps1=0.25, eps2=0.1)
             for fx in ("sigmoid", "gaussian")]
    parts, ok = [], True
    for cell, reps in _sweep(cells):
        hits = sum(r.additive_fit_at(0.25) <= 0.1 for r in reps)
        ok &= hits >= 95
        parts.append(f"{cell.fixture} {hits}/100 (max fit "
                     f"{max(r.additive_fit for r in reps):.3g})")
    return ok, f"m={cells[0].sketch_dim()}, " + ", ".join(parts)


def _relative():
    cells = [distortion.Cell(fx, "relative", 4, 256, 0.05, sketch.DEFAULT_C, eps=0.3)
             for fx in ("tanh", "elu", "softsign")]
    parts, ok = [], True
    for cell, reps in _sweep(cells):
        hits = sum(bool(r.passed) for r in reps)
        both = all(r.count_SL > 0 and r.count_SU > 0 for r in reps)
        ok &= hits >= 95 and both
        parts.append(f"{cell.fixture} {hits}/100" + ("" if both else " (split not probed)"))
    return ok, f"m={cells[0].sketch_dim()}, " + ", ".join(parts)


def _regions():
    ok, notes = True, []
    for n in (3, 5, 8):
        for t in (2, 3, 5):
            rec = regions.census(regions.step_pwl(t), subspace.random_subspace(n, 1, 100 + n * t),
                                 "exact_1d")
            ok &= rec.distinct_patterns == n * (t - 1) + 1 <= rec.bound
    notes.append("exact_1d 9/9" if ok else "exact_1d mismatch")
    rec = regions.census(regions.relu_pwl(0.0), subspace.random_subspace(2, 2, 1), "sign_sample",
                         budget=100_000)
    ok &= rec.distinct_patterns == 4 <= rec.bound
    notes.append(f"k=2 n=2 t=2 patterns {rec.distinct_patterns}")
    return ok, ", ".join(notes)


def _spectral():
    est = [sketch.spectral_norm(sketch.sample_sketch(64, 256, derive_seed(7, s)))
           for s in range(100)]
    bound = sketch.spectral_bound(64, 256)
    return max(est) <= bound, f"max estimate {max(est):.3f} <= {bound:g} over 100 seeds"


def _srec():
    k, n = 4, 128
    m = sketch.dimension(sketch.DimSpec("srec", k, n, 0.05, eps1=0.5, eps2=0.1)).m
    hits, worst = 0, math.inf
    for trial in range(100):
        seed = derive_seed(11, trial)
        G = csrecover.synth_generator("sigmoid", [k, n, n], derive_seed(seed, 1))
        A = sketch.sample_sketch(m, n, derive_seed(seed, 2))
        rep = csrecover.check_srec(A, G, 10_000, 0.5, 0.1, derive_seed(seed, 5))
        hits += rep.passed
        worst = min(worst, rep.worst_slack)
    return hits >= 95, f"m={m}, {hits}/100 trials, min slack {worst:.4f}"


def cs_config(noise: float, **over) -> dict:
    raw = {"fixture": ["tanh"], "depth": ["2"], "k": ["4"], "n": ["128"], "m": ["64"],
           "noise": [repr(noise)], "trials": ["20"], "restarts": ["20"], "iters": ["2000"],
           "pairs": ["1000"], "workers": ["4"]}
    raw.update({k: [str(v)] for k, v in over.items()})
    cfg = config.resolve(raw, config.CS_SCHEMA)
    cfg["base_seed"] = over.get("base_seed", 0)  # independent of NLSE_SEED
    return cfg


def _recovery():
    parts, ok = [], True
    for noise in (0.0, 0.1):
        rows, verdicts = csrecover.cs_sweep(cs_config(noise))
        med = next(r for r in rows if r[0] == "median")
        ok &= verdicts[0]
        rule = "1e-2 |x*|" if noise == 0 else "5 |noise|"
        parts.append(f"noise {noise}: median recon {med[9]:.3g} "
                     f"({'within' if verdicts[0] else 'above'} {rule})")
    return ok, ", ".join(parts)


def _surrogate():
    n = 128
    G = csrecover.synth_generator("tanh", [4, n, n, n], 21)
    errs, ok = {}, True
    for eps2 in (0.2, 0.1):
        Gt = csrecover.deep_pwl_surrogate(G, eps2, pairs=10_000, seed=1)
        errs[eps2] = csrecover.surrogate_error(G, Gt, 10_000, 2)["max_error"]
        ok &= errs[eps2] <= eps2 / math.sqrt(n)
    ratio = errs[0.1] / errs[0.2]
    ok &= 0.4 <= ratio <= 0.6
    return ok, (f"max error {errs[0.2]:.2e} / {errs[0.1]:.2e} vs bounds "
                f"{0.2 / math.sqrt(n):.2e} / {0.1 / math.sqrt(n):.2e}, ratio {ratio:.3f}")


DETERMINISM_SWEEP = """fixture = sigmoid
fixture = softsign
mode = additive
mode = relative
k = 3
n = 64
trials = 6
samples = 300
base_seed = 5
"""

DETERMINISM_CS = """fixture = tanh
depth = 2
k = 3
n = 48
m = 24
noise = 0.0
noise = 0.1
trials = 4
restarts = 4
iters = 200
pairs = 300
base_seed = 5
"""


def _determinism():
    from .cli import main

    commands = {
        "distortion": lambda d, w: ["distortion", "run", "--config", str(d / "s.cfg"),
                                    "--out", str(d / "out.csv"), "--workers", str(w)],
        "csgen": lambda d, w: ["csgen", "run", "--config", str(d / "c.cfg"),
                               "--out", str(d / "out.csv"), "--workers", str(w)],
        "catalog": lambda d, w: ["catalog", "verify", "--out", str(d / "out.json")],
        "pwl": lambda d, w: ["pwl", "build", "--fixture", "sqnl", "--eps", "0.05",
                             "--dump", str(d / "out.csv")],
        "regions": lambda d, w: ["regions", "census", "--fixture", "tanh", "--eps", "0.3",
                                 "--k", "2", "--n", "4", "--budget", "5000", "--seed", "3"],
    }
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        runs = {}
        for tag, workers in (("a", 1), ("b", 1), ("c", 8)):
            d = Path(tmp) / tag
            d.mkdir()
            (d / "s.cfg").write_text(DETERMINISM_SWEEP)
            (d / "c.cfg").write_text(DETERMINISM_CS)
            for name, argv in commands.items():
                buf = io.StringIO()
                with redirect_stdout(buf):
                    main(argv(d, workers))
                (d / f"{name}.stdout").write_text(buf.getvalue().replace(str(d), "<dir>"))
                for out in d.glob("out.*"):
                    out.rename(d / f"{name}.{out.name}")
            runs[tag] = d
        files = sorted(p.name for p in runs["a"].iterdir() if not p.name.endswith(".cfg"))
        for tag in ("b", "c"):
            _, mism, errs = filecmp.cmpfiles(runs["a"], runs[tag], files, shallow=False)
            mismatched += [f"{tag}:{f}" for f in mism + errs]
    return not mismatched, (f"{len(files)} artifacts identical across reruns and 1 vs 8 workers"
                            if not mismatched else f"differences in {mismatched}")


CRITERIA = {
    1: ("catalog constants", 10, _catalog),
    2: ("PWL approximation", 60, _pwl),
    3: ("linear-case OSE", 300, _linear),
    4: ("additive embedding", 600, _additive),
    5: ("relative embedding", 600, _relative),
    6: ("region census", 60, _regions),
    7: ("spectral norm bound", 60, _spectral),
    8: ("S-REC", 600, _srec),
    9: ("recovery", 900, _recovery),
    10: ("depth-d surrogate", 300, _surrogate),
    11: ("determinism", 600, _determinism),
}


def run(number: int) -> Outcome:
    title, limit, fn = CRITERIA[number]
    return _timed(number, title, limit, fn)
