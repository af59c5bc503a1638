"""Command-line front end.

    xcir simulate     CONFIG [--paths N] [--out DIR] [--long-format]
    xcir exponents    CONFIG [--t T0] [--T T1] [--u U ...] [--trace] [--out FILE]
    xcir validate     CONFIG [--out DIR]
    xcir covariance   CONFIG --n N --m M
    xcir check-jumps  CONFIG [--span]

``CONFIG`` is a scenario JSON file or the name of a bundled scenario
(``fig2``, ``fig3``).  The seed is taken from ``--seed``, then the config,
then the ``XCIR_SEED`` environment variable, then 0.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .affine import extended_exponents
from .errors import ConfigError, InadmissibleJumpError, NonAffineModelError
from .jumps import check_admissibility, check_full_convex_span, exponents, support_infimum
from .model import config_hash, decode_complex, encode_complex, load_config
from .simulate import (chunk_rng, jump_covariance_analytic_tc, jump_covariance_mc,
                       simulate_path)
from .validation import (all_time_change, compare_affine, compensator_check,
                         default_test_functions, dual_ks_check, stationary_limit_check,
                         stationary_sweep)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

STATIONARY_DELTAS = (10.0, 100.0, 1000.0, 10000.0)
STATIONARY_DELTA_LARGE = 1e6
STATIONARY_TOL = 1e-6


def _num(x: float) -> str:
    return repr(float(x))


def _resolve_seed(args, config) -> int:
    if args.seed is not None:
        return int(args.seed)
    if config.mc.seed is not None:
        return int(config.mc.seed)
    env = os.environ.get("XCIR_SEED")
    return int(env) if env else 0


def _load(args):
    config = load_config(args.config)
    seed = _resolve_seed(args, config)
    config = config.with_seed(seed)
    if getattr(args, "paths", None) is not None and args.command != "simulate":
        config = config.with_n_paths(args.paths)
    return config, seed


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    if args.paths is not None and args.paths <= 0:
        raise ConfigError("n_paths must be positive")
    config, seed = _load(args)
    n_paths = 1 if args.paths is None else args.paths
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    paths = [simulate_path(config, chunk_rng(seed, k)) for k in range(n_paths)]

    if args.long_format:
        with open(out / "paths.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "t", "x"])
            for k, p in enumerate(paths):
                w.writerows([k, _num(t), _num(x)] for t, x in zip(p.times, p.values))
        with open(out / "jumps.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "n", "s_n", "x_pre", "xi", "x_post"])
            for k, p in enumerate(paths):
                w.writerows([k, r.n, _num(r.s_n), _num(r.x_pre), _num(r.xi), _num(r.x_post)]
                            for r in p.jump_records)
    else:
        for k, p in enumerate(paths):
            with open(out / f"path_{k:04d}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "x"])
                w.writerows([_num(t), _num(x)] for t, x in zip(p.times, p.values))
            with open(out / f"jumps_{k:04d}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["n", "s_n", "x_pre", "xi", "x_post"])
                w.writerows([r.n, _num(r.s_n), _num(r.x_pre), _num(r.xi), _num(r.x_post)]
                            for r in p.jump_records)

    values = np.concatenate([p.values for p in paths])
    summary = {
        "seed": seed, "config_hash": config_hash(config), "n_paths": n_paths,
        "grid_points": len(config.grid), "feller": config.feller,
        "min": float(values.min()), "max": float(values.max()), "mean": float(values.mean()),
        "jumps_per_path": [len(p.jump_records) for p in paths],
    }
    _write_json(out / "run.json", summary)
    print(f"seed={seed} paths={n_paths} points/path={len(config.grid)} feller={config.feller}")
    print(f"min={summary['min']:.6g} max={summary['max']:.6g} mean={summary['mean']:.6g} "
          f"jumps={summary['jumps_per_path'][0]}")
    return EXIT_OK


# --------------------------------------------------------------------------
# exponents


def exponent_table(config, t, T, us, trace=False):
    rows = []
    x0 = config.params.x0
    for u in us:
        ex = extended_exponents(config.params, config.schedule, t, T, u)
        row = {"u": encode_complex(u), "phi": encode_complex(ex.phi),
               "psi": encode_complex(ex.psi),
               "cf_x0": encode_complex(np.exp(ex.phi + ex.psi * x0))}
        if trace:
            row["trace"] = [{"n": n, "s_n": s, "phi": encode_complex(p), "psi": encode_complex(q)}
                            for n, s, p, q in ex.trace]
        rows.append(row)
    return rows


def cmd_exponents(args) -> int:
    config, seed = _load(args)
    T = config.horizon if args.T is None else args.T
    us = config.u_grid if not args.u else tuple(decode_complex(u) for u in args.u)
    try:
        rows = exponent_table(config, args.t, T, us, args.trace)
    except NonAffineModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    doc = {"t": args.t, "T": T, "x0": config.params.x0, "seed": seed, "rows": rows}
    if args.out:
        _write_json(Path(args.out), doc)
    print(f"{'u':>14} {'phi':>30} {'psi':>30} {'cf(x0)':>30}")
    for r in rows:
        print(" ".join(f"{_c(r[k]):>{w}}" for k, w in
                       (("u", 14), ("phi", 30), ("psi", 30), ("cf_x0", 30))))
        for tr in r.get("trace", []):
            print(f"    jump {tr['n']:>3} s={tr['s_n']:<8g} phi={_c(tr['phi'])} psi={_c(tr['psi'])}")
    return EXIT_OK


def _c(d):
    return f"{d['re']:.10g}{d['im']:+.10g}i"


# --------------------------------------------------------------------------
# check-jumps


def jump_checks(config, x_grid=(0.5, 1.0, 5.0), span=False):
    results = []
    for n, (s, model) in enumerate(config.schedule, start=1):
        entry = {"n": n, "s_n": s, "model": _model_label(model)}
        try:
            pair = exponents(model, config.params)
        except NonAffineModelError as exc:
            entry.update(passed=False, reason=str(exc))
            results.append(entry)
            continue
        try:
            rep = check_admissibility(pair)
            entry["admissibility"] = rep.to_dict()
            entry["support_infimum"] = {
                _num(x): support_infimum(pair, x).value for x in x_grid
            } if rep.passed else {}
            entry["passed"] = rep.passed
        except (ValueError, RuntimeError) as exc:
            entry.update(passed=False, reason=str(exc))
        if span:
            sp = check_full_convex_span(model, config.params, np.linspace(0.0, 10.0, 41),
                                        np.linspace(0.0, 0.999, 41))
            # reported only: a bounded grid cannot certify the span
            entry["full_convex_span"] = sp.to_dict()
        results.append(entry)
    return results


def _model_label(model):
    try:
        return model.to_dict()
    except ConfigError:
        return {"type": "generic"}


def cmd_check_jumps(args) -> int:
    config, seed = _load(args)
    results = jump_checks(config, span=args.span)
    ok = all(r["passed"] for r in results)
    doc = {"check": "jumps", "passed": ok, "seed": seed, "config_hash": config_hash(config),
           "jumps": results}
    if args.out:
        _write_json(Path(args.out), doc)
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        extra = r.get("reason") or "; ".join(r.get("admissibility", {}).get("reasons", []))
        print(f"jump {r['n']:>3} s={r['s_n']:<8g} {r['model'].get('type'):<14} {status} {extra}")
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# validate


def run_validation(config, seed, threads=1):
    """All checks used by ``validate``; returns ``(passed, report_dict, text_lines)``."""
    checks, text = [], []

    jc = jump_checks(config)
    jump_ok = all(r["passed"] for r in jc)
    checks.append({"check": "jump_admissibility", "passed": jump_ok, "jumps": jc})
    text.append(f"jump admissibility: {'PASS' if jump_ok else 'FAIL'}")

    try:
        cf = compare_affine(config, seed=seed, threads=threads)
        checks.append(cf.to_dict())
        text.append("affine transform vs Monte Carlo:")
        text.append(cf.to_text())
    except (NonAffineModelError, InadmissibleJumpError) as exc:
        checks.append({"check": "compare_affine", "passed": False, "error": str(exc)})
        text.append(f"affine transform vs Monte Carlo: FAIL ({exc})")

    comp = compensator_check(config.schedule, default_test_functions(config.schedule),
                             config.mc.n_paths, seed, config.horizon)
    checks.append(comp.to_dict())
    for r in comp.rows:
        text.append(f"compensator {r.name:<16} mc={r.mc_mean:.6g} se={r.mc_se:.3g} "
                    f"quad={r.quadrature:.6g} {'PASS' if r.passed else 'FAIL'}")

    if all_time_change(config):
        ks = dual_ks_check(config, seed=seed, threads=threads)
        checks.append(ks)
        text.append(f"dual construction KS: p={ks['pvalue']:.4f} {'PASS' if ks['passed'] else 'FAIL'}")

    p = config.params
    if p.kappa > 0 and p.sigma > 0:
        sweep = stationary_sweep(p, STATIONARY_DELTAS, config.u_grid)
        far = stationary_limit_check(p, STATIONARY_DELTA_LARGE, config.u_grid,
                                     tolerance=STATIONARY_TOL).to_dict()
        checks.extend([sweep, far])
        text.append(f"stationary sweep monotone: {'PASS' if sweep['passed'] else 'FAIL'}")
        text.append(f"stationary limit at delta=1e6: dev={far['max_deviation']:.3g} "
                    f"{'PASS' if far['passed'] else 'FAIL'}")

    passed = all(c["passed"] for c in checks)
    report = {"passed": passed, "seed": seed, "config_hash": config_hash(config),
              "n_paths": config.mc.n_paths, "checks": checks}
    return passed, report, text


def cmd_validate(args) -> int:
    config, seed = _load(args)
    passed, report, text = run_validation(config, seed, args.threads)
    out = Path(args.out)
    _write_json(out / "report.json", report)
    (out / "report.txt").write_text("\n".join(text) + "\n")
    print("\n".join(text))
    print("ALL PASS" if passed else "FAILED")
    return EXIT_OK if passed else EXIT_FAIL


# --------------------------------------------------------------------------
# covariance


def cmd_covariance(args) -> int:
    config, seed = _load(args)
    est, se = jump_covariance_mc(config, args.n, args.m, seed=seed, threads=args.threads)
    doc = {"n": args.n, "m": args.m, "mc": est, "se": se, "seed": seed,
           "n_paths": config.mc.n_paths, "config_hash": config_hash(config)}
    line = f"c({args.n},{args.m}) mc={est:.6g} se={se:.3g}"
    try:
        an = jump_covariance_analytic_tc(config.params, config.schedule, args.n, args.m)
        doc["analytic"] = an
        doc["z"] = (est - an) / se if se > 0 else 0.0
        line += f" analytic={an:.6g} z={doc['z']:.3f}"
    except ValueError:
        pass
    if args.out:
        _write_json(Path(args.out), doc)
    print(line)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xcir", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("config", help="scenario JSON file or bundled name (fig2, fig3)")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--threads", type=int, default=1, help="worker cap for Monte Carlo")
        p.add_argument("--out", default=out_default)

    p = sub.add_parser("simulate", help="simulate paths and write CSVs")
    common(p, "out")
    p.add_argument("--paths", type=int, default=None, help="number of paths (default 1)")
    p.add_argument("--long-format", action="store_true",
                   help="single paths.csv/jumps.csv with a path_id column")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exponents", help="affine exponents table")
    common(p)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--u", nargs="*", default=None, help="complex points such as -1, 2j, -1+1j")
    p.add_argument("--trace", action="store_true", help="dump the backward-recursion trace")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("validate", help="run the statistical validation suite")
    common(p, "validation")
    p.add_argument("--paths", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("covariance", help="jump covariance c(n, m)")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--paths", type=int, default=None)
    p.set_defaults(func=cmd_covariance)

    p = sub.add_parser("check-jumps", help="admissibility diagnostics per jump")
    common(p)
    p.add_argument("--span", action="store_true", help="include the full-convex-span heuristic")
    p.set_defaults(func=cmd_check_jumps)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except (ConfigError, KeyError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InadmissibleJumpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
