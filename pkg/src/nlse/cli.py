"""``nlse`` command-line entry point.

Exit codes: 0 when every check passes, 1 when a criterion fails, 2 on usage
or input errors.  Every output is a deterministic function of the resolved
config and base seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import catalog, config, csrecover, distortion, pwl, regions, sketch, subspace

CONFIG_GRAMMAR = """config grammar:
  UTF-8 text, one `key = value` per line, `#` starts a comment,
  a key repeated on several lines forms a list. NLSE_SEED overrides base_seed."""


class UsageError(Exception):
    pass


def _seed(value: int) -> int:
    env = os.environ.get("NLSE_SEED")
    return int(env) if env is not None else value


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers: {text!r}") from exc


def _fixture(name: str) -> catalog.Nonlinearity:
    try:
        return catalog.get(name)
    except KeyError as exc:
        raise UsageError(f"unknown fixture {name!r}; choose from {sorted(catalog.FIXTURES)}") from exc


def _dump_json(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    print(text)
    if path:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc.strerror}") from exc


def _plain(v):
    """Config values as JSON-ready data."""
    if isinstance(v, tuple):
        return list(v)
    return v


# ---------------------------------------------------------------- commands

def cmd_catalog_verify(args) -> int:
    names = None if args.fixture == "all" else [_fixture(args.fixture).name.lower()]
    results = catalog.verify_all(names, args.eps)
    records = [r.record() for r in results]
    ok = all(r["pass"] for r in records)
    _dump_json({"config": {"fixture": args.fixture, "eps": list(args.eps)},
                "records": records, "pass": ok}, args.out)
    return 0 if ok else 1


def cmd_pwl_build(args) -> int:
    nl = _fixture(args.fixture)
    f = pwl.build_pwl(nl, eps=args.eps)
    if args.dump:
        try:
            f.write_csv(args.dump)
        except OSError as exc:
            raise UsageError(f"cannot write {args.dump}: {exc.strerror}") from exc
    _dump_json({"fixture": nl.name, "eps": args.eps, "pieces": f.piece_count,
                "bound": pwl.piece_count_bound(nl, nl.constants, args.eps),
                "continuity_gap": f.continuity_gap(), "dump": args.dump})
    return 0


def cmd_pwl_certify(args) -> int:
    rec = pwl.certify(_fixture(args.fixture), args.eps)
    print(f"max_error {rec['max_error']!r}")
    print(f"pieces {rec['pieces']}")
    return 0 if rec["pass"] else 1


def cmd_sketch_dims(args) -> int:
    try:
        spec = sketch.DimSpec(args.mode, args.k, args.n, args.delta, eps=args.eps,
                              eps1=args.eps1, eps2=args.eps2, t=args.t, constant_C=args.C)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = sketch.dimension(spec)
    print(res.m)
    print(f"clamped {str(res.clamped).lower()} raw {res.raw}")
    return 0


def _sweep_config(cfg: dict) -> distortion.SweepConfig:
    return distortion.SweepConfig(
        fixtures=cfg["fixture"], modes=cfg["mode"], k=cfg["k"], n=cfg["n"], eps1=cfg["eps1"],
        eps2=cfg["eps2"], eps=cfg["eps"], delta=cfg["delta"], C=cfg["C"], m=cfg["m"],
        trials=cfg["trials"], samples=cfg["samples"], base_seed=cfg["base_seed"],
        workers=cfg["workers"], probes=cfg["probes"])


def _load(path, schema) -> dict:
    try:
        return config.resolve(config.load_config(path), schema, str(path))
    except config.ConfigError as exc:
        raise UsageError(f"{exc}\n{CONFIG_GRAMMAR}") from exc


def _write_meta(out, cfg: dict, extra: dict) -> None:
    meta = {"config": {k: _plain(v) for k, v in cfg.items()}, "base_seed": cfg["base_seed"]}
    meta.update(extra)
    try:
        with open(f"{out}.meta.json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write {out}.meta.json: {exc.strerror}") from exc


def cmd_distortion_run(args) -> int:
    cfg = _load(args.config, config.SWEEP_SCHEMA)
    if args.workers is not None:
        cfg["workers"] = args.workers
    if not cfg["fixture"]:
        raise UsageError(f"{args.config}: at least one `fixture` is required")
    for fx in cfg["fixture"]:
        _fixture(fx)
    try:
        _, summaries = distortion.trial_sweep(_sweep_config(cfg), args.out)
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    cells = [{"fixture": s["cell"].fixture, "mode": s["cell"].mode, "m": s["m"],
              "pass_rate": s["pass_rate"], "passed": s["passed"]} for s in summaries]
    # workers only affects scheduling, not results, so it stays out of the sidecar
    _write_meta(args.out, {k: v for k, v in cfg.items() if k != "workers"}, {"cells": cells})
    for c in cells:
        print(f"{c['fixture']} {c['mode']} m={c['m']} pass_rate={c['pass_rate']:.2f} "
              f"{'PASS' if c['passed'] else 'FAIL'}")
    return 0 if all(c["passed"] for c in cells) else 1


def cmd_regions_census(args) -> int:
    f = pwl.build_pwl(_fixture(args.fixture), eps=args.eps)
    seed = _seed(args.seed)
    Z = subspace.random_subspace(args.n, args.k, seed)
    try:
        rec = regions.census(f, Z, args.method, args.budget, seed)
    except AssertionError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = rec.record()
    out.update({"fixture": args.fixture, "eps": args.eps, "seed": seed})
    _dump_json(out)
    return 0


def cmd_csgen_run(args) -> int:
    cfg = _load(args.config, config.CS_SCHEMA)
    if args.workers is not None:
        cfg["workers"] = args.workers
    for fx in cfg["fixture"]:
        _fixture(fx)
    rows, verdicts = csrecover.cs_sweep(cfg)
    try:
        distortion.write_csv_with(rows, args.out, csrecover.CS_COLUMNS)
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    _write_meta(args.out, {k: v for k, v in cfg.items() if k != "workers"},
                {"cells_passed": verdicts})
    for row, ok in zip([r for r in rows if r[0] == "median"], verdicts):
        print(f"{row[6]} depth={row[5]} m={row[4]} noise={row[7]:.3g} "
              f"median_recon={row[9]:.3e} {'PASS' if ok else 'FAIL'}")
    return 0 if all(verdicts) else 1


def cmd_csgen_srec(args) -> int:
    seed = _seed(args.seed)
    m = args.m
    if m is None:
        m = sketch.dimension(sketch.DimSpec("srec", args.k, args.n, args.delta, eps1=args.eps1,
                                            eps2=args.eps2, constant_C=args.C)).m
    _fixture(args.fixture)
    G = csrecover.synth_generator(args.fixture, [args.k] + [args.n] * args.depth,
                                  csrecover.derive_seed(seed, 1))
    A = sketch.sample_sketch(m, args.n, csrecover.derive_seed(seed, 2))
    rep = csrecover.check_srec(A, G, args.pairs, args.eps1, args.eps2,
                               csrecover.derive_seed(seed, 5))
    out = rep.record()
    out.update({"fixture": args.fixture, "depth": args.depth, "k": args.k, "base_seed": seed})
    _dump_json(out)
    return 0 if rep.passed else 1


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlse", epilog=CONFIG_GRAMMAR,
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                description="Subspace embeddings under entrywise nonlinearities.")
    sub = p.add_subparsers(dest="group", required=True)

    cat = sub.add_parser("catalog").add_subparsers(dest="cmd", required=True)
    v = cat.add_parser("verify", help="check the condition constants of the fixtures")
    v.add_argument("--fixture", default="all")
    v.add_argument("--eps", type=_floats, default=(1.0, 0.5, 0.1, 0.01))
    v.add_argument("--out")
    v.set_defaults(func=cmd_catalog_verify)

    pw = sub.add_parser("pwl").add_subparsers(dest="cmd", required=True)
    b = pw.add_parser("build", help="build the PWL interpolant")
    b.add_argument("--fixture", required=True)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--dump")
    b.set_defaults(func=cmd_pwl_build)
    c = pw.add_parser("certify", help="uniform error and piece count")
    c.add_argument("--fixture", required=True)
    c.add_argument("--eps", type=float, required=True)
    c.set_defaults(func=cmd_pwl_certify)

    sk = sub.add_parser("sketch").add_subparsers(dest="cmd", required=True)
    d = sk.add_parser("dims", help="embedding dimension for a guarantee")
    d.add_argument("--mode", choices=sketch.MODES, required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--eps", type=float)
    d.add_argument("--eps1", type=float)
    d.add_argument("--eps2", type=float)
    d.add_argument("--t", type=int)
    d.add_argument("--delta", type=float, required=True)
    d.add_argument("--C", type=float, default=sketch.DEFAULT_C)
    d.set_defaults(func=cmd_sketch_dims)

    ds = sub.add_parser("distortion").add_subparsers(dest="cmd", required=True)
    r = ds.add_parser("run", help="seeded distortion sweep")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_distortion_run)

    rg = sub.add_parser("regions").add_subparsers(dest="cmd", required=True)
    cs = rg.add_parser("census", help="count activation patterns on a subspace")
    cs.add_argument("--fixture", required=True)
    cs.add_argument("--eps", type=float, required=True)
    cs.add_argument("--k", type=int, required=True)
    cs.add_argument("--n", type=int, required=True)
    cs.add_argument("--method", choices=regions.METHODS, default="sign_sample")
    cs.add_argument("--budget", type=int, default=100_000)
    cs.add_argument("--seed", type=int, default=0)
    cs.set_defaults(func=cmd_regions_census)

    cg = sub.add_parser("csgen").add_subparsers(dest="cmd", required=True)
    cr = cg.add_parser("run", help="compressed-sensing recovery sweep")
    cr.add_argument("--config", required=True)
    cr.add_argument("--out", required=True)
    cr.add_argument("--workers", type=int)
    cr.set_defaults(func=cmd_csgen_run)
    sr = cg.add_parser("srec", help="sampled S-REC check for a random generator")
    sr.add_argument("--pairs", type=int, required=True)
    sr.add_argument("--fixture", default="sigmoid")
    sr.add_argument("--depth", type=int, default=2)
    sr.add_argument("--k", type=int, default=4)
    sr.add_argument("--n", type=int, default=128)
    sr.add_argument("--m", type=int)
    sr.add_argument("--eps1", type=float, default=0.5)
    sr.add_argument("--eps2", type=float, default=0.1)
    sr.add_argument("--delta", type=float, default=0.05)
    sr.add_argument("--C", type=float, default=sketch.DEFAULT_C)
    sr.add_argument("--seed", type=int, default=0)
    sr.set_defaults(func=cmd_csgen_srec)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nlse: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
