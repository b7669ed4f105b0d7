"""Benchmark command line: ``ign-bench {run,compare,sequence,selftest}``.

Options may come from a JSON file given with ``--config``; any flag set on
the command line overrides the file. Output paths are resolved against
``$IGN_OUTPUT_DIR`` when it is set, otherwise against the working directory.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import problems, rate_theory, selftest, solvers
from .errors import IgnError, RunAborted

log = logging.getLogger("ign.cli")

OUTPUT_ENV = "IGN_OUTPUT_DIR"
TRACE_HEADER = ["method", "t", "epoch", "elapsed_seconds", "residual_norm", "error_norm"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3

# defaults applied after the config file and the command line are merged
RUN_DEFAULTS = {
    "problem": "chandrasekhar",
    "n": None,
    "d": 50,
    "c": 0.9,
    "samples": None,
    "data": None,
    "theta": 1e-2,
    "nu_reg": 1.0,
    "mu": 5.0,
    "lam": 2.0,
    "seed": 0,
    "method": ["mb-ign"],
    "k": 1,
    "tol": 1e-10,
    "max_epochs": 50.0,
    "refresh_period": 5,
    "drift_tol": 1e-6,
    "ekf_a": 1.0,
    "ekf_lambda": 1.0,
    "x0": None,
    "out": None,
}


def output_dir():
    return Path(os.environ.get(OUTPUT_ENV, "."))


def _resolve(path):
    p = Path(path)
    return p if p.is_absolute() else output_dir() / p


def build_problem(opts):
    """Construct the residual system named by ``opts['problem']``."""
    name = opts["problem"]
    seed = opts["seed"]
    d = opts["d"]
    if name == "chandrasekhar":
        return problems.chandrasekhar(d, opts["c"])
    if name == "affine":
        n = opts["n"] or int(1.5 * d)
        return problems.random_affine(n, d, seed=seed)
    if name == "logistic":
        if opts["data"]:
            data = problems.load_libsvm(opts["data"])
        else:
            data = problems.synthetic_logistic(opts["samples"] or 100, d, seed=seed)
        return problems.reg_logistic(data, theta=opts["theta"], nu_reg=opts["nu_reg"])
    if name == "softmax":
        return problems.soft_max_min(opts["samples"] or d, d, mu=opts["mu"], lam=opts["lam"], seed=seed)
    raise IgnError(f"unknown problem {name!r}")


def initial_point(opts, sys):
    policy = opts["x0"] or ("ones" if opts["problem"] == "chandrasekhar" else "zeros")
    if policy == "ones":
        return policy, np.ones(sys.d)
    if policy == "zeros":
        return policy, np.zeros(sys.d)
    try:
        return policy, np.full(sys.d, float(policy))
    except ValueError as err:
        raise IgnError(f"x0 must be 'ones', 'zeros' or a number, got {policy!r}") from err


def parse_method(spec, opts):
    """``'mb-ign:k=20'`` -> (label, method, SolverConfig)."""
    name, _, params = spec.partition(":")
    name = name.strip().lower()
    if name not in solvers.METHODS:
        raise IgnError(f"unknown method {name!r}; choose from {', '.join(solvers.METHODS)}")
    cfg = {
        "k": opts["k"],
        "tol": opts["tol"],
        "max_epochs": opts["max_epochs"],
        "refresh_period": opts["refresh_period"],
        "drift_tol": opts["drift_tol"],
        "seed": opts["seed"],
        "ekf_a": opts["ekf_a"],
        "ekf_lambda": opts["ekf_lambda"],
    }
    for item in filter(None, params.split(",")):
        key, sep, value = item.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in cfg:
            raise IgnError(f"bad method parameter {item!r} in {spec!r}")
        cfg[key] = type(cfg[key])(value) if cfg[key] is not None else value
    if name == "mb-ign":
        label = f"mb-ign(k={cfg['k']})"
    else:
        label = name
    return label, name, solvers.SolverConfig(**cfg)


def write_trace(path, label, trace):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r in trace:
            err = "" if r.error_norm is None else repr(float(r.error_norm))
            w.writerow([label, r.t, repr(float(r.epoch)), f"{r.elapsed_seconds:.6f}", repr(float(r.residual_norm)), err])


def write_metadata(path, meta):
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _metadata(opts, label, cfg, x0_policy, status):
    meta = {
        "problem": opts["problem"],
        "method": label,
        "x0": x0_policy,
        "config": vars(cfg),
        "status": status,
    }
    if label.startswith("ekf"):
        meta["schedule_note"] = (
            "EKF-S stepsize a/(ceil(t/n)+1) and forgetting factor lambda are artifact defaults"
        )
    return meta


def execute(opts, spec):
    """Run one method spec; returns (label, trace, error message or None)."""
    sys_ = build_problem(opts)
    x0_policy, x0 = initial_point(opts, sys_)
    label, method, cfg = parse_method(spec, opts)
    try:
        trace = solvers.run(method, sys_, cfg, x0)
        error = None
    except RunAborted as err:
        trace, error = err.trace, str(err)
    return label, trace, error, _metadata(opts, label, cfg, x0_policy, error or "ok"), cfg


def summarize(label, trace, tol, error):
    ett = solvers.epochs_to_tol(trace, tol)
    reached = next((r for r in trace if r.residual_norm <= tol), None)
    return {
        "method": label,
        "epochs_to_tol": "DNF" if ett is None else ett,
        "time_to_tol": "DNF" if reached is None else reached.elapsed_seconds,
        "final_residual": trace[-1].residual_norm if trace else math.nan,
        "final_epoch": trace[-1].epoch if trace else 0.0,
        "status": "error: " + error if error else ("ok" if ett is not None else "budget"),
    }


def cmd_run(opts):
    spec = opts["method"][0]
    label, trace, error, meta, cfg = execute(opts, spec)
    out = _resolve(opts["out"] or f"trace_{opts['problem']}_{_slug(label)}.csv")
    write_trace(out, label, trace)
    write_metadata(out, meta)
    row = summarize(label, trace, cfg.tol, error)
    print(_format_row(row))
    print(f"trace written to {out}")
    if error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_compare(opts):
    out_dir = _resolve(opts["out"] or f"compare_{opts['problem']}")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    failed = False
    for spec in opts["method"]:
        label, trace, error, meta, cfg = execute(opts, spec)
        path = out_dir / f"trace_{_slug(label)}.csv"
        write_trace(path, label, trace)
        write_metadata(path, meta)
        rows.append(summarize(label, trace, cfg.tol, error))
        failed |= error is not None
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    for row in rows:
        print(_format_row(row))
    print(f"report written to {out_dir}")
    return EXIT_SOLVER if failed else EXIT_OK


def _format_row(row):
    ett = row["epochs_to_tol"]
    ett = ett if isinstance(ett, str) else f"{ett:.3f}"
    ttt = row["time_to_tol"]
    ttt = ttt if isinstance(ttt, str) else f"{ttt:.3f}s"
    return (
        f"{row['method']:<16} epochs-to-tol {ett:>8}  time-to-tol {ttt:>9}  "
        f"final ||f|| {row['final_residual']:.3e}  [{row['status']}]"
    )


def sequence_rows(n, nu, T, r0=1.0):
    a = rate_theory.aux_sequence(n, nu, T).values
    env = rate_theory.rate_envelope(n, nu, r0, T)
    margins = rate_theory.lemma_margins(n, nu, T)
    rows = []
    for t in range(T + 1):
        row = {"t": t, "a_t": a[t], "envelope": env[t]}
        for key, col in margins.items():
            row[f"margin_{key}"] = col[t]
        rows.append(row)
    return rows


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return v


def _slug(label):
    return label.replace("(", "-").replace(")", "").replace("=", "")


def cmd_sequence(opts):
    n, nu, T = opts["n"], opts["nu"], opts["T"]
    rows = sequence_rows(n, nu, T, opts["r0"])
    out = opts["out"]
    fh = open(_resolve(out), "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(v) for k, v in row.items()})
    finally:
        if out:
            fh.close()
    bad = rate_theory.check_lemmas(n, nu, T)
    for name, t, margin in bad:
        print(f"violation: {name} at t={t}: margin {margin:.3e}", file=sys.stderr)
    return EXIT_SOLVER if bad else EXIT_OK


def cmd_selftest(opts):
    start = time.perf_counter()
    results = selftest.run_selftest(seeds=range(opts["seeds"]))
    for r in results:
        print(r)
    failed = [r for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {time.perf_counter() - start:.1f}s")
    return EXIT_SOLVER if failed else EXIT_OK


def _add_solver_args(p):
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--problem", choices=["chandrasekhar", "affine", "logistic", "softmax"])
    p.add_argument("--d", type=int, help="variable dimension")
    p.add_argument("--n", type=int, help="residual count (affine only)")
    p.add_argument("--c", type=float, help="H-equation parameter in (0, 1]")
    p.add_argument("--samples", type=int, help="data points (logistic, softmax)")
    p.add_argument("--data", help="libsvm file for the logistic problem")
    p.add_argument("--theta", type=float)
    p.add_argument("--nu-reg", dest="nu_reg", type=float)
    p.add_argument("--mu", type=float, help="softmax smoothing")
    p.add_argument("--lam", type=float, help="softmax ridge weight")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", action="append", help="method spec, e.g. mb-ign:k=20 (repeatable)")
    p.add_argument("--k", type=int, help="mini-batch size")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=float)
    p.add_argument("--refresh-period", dest="refresh_period", type=int)
    p.add_argument("--drift-tol", dest="drift_tol", type=float)
    p.add_argument("--ekf-a", dest="ekf_a", type=float)
    p.add_argument("--ekf-lambda", dest="ekf_lambda", type=float)
    p.add_argument("--x0", help="ones, zeros or a constant")
    p.add_argument("--out", help="trace file (run) or report directory (compare)")


def build_parser():
    parser = argparse.ArgumentParser(prog="ign-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_solver_args(sub.add_parser("run", help="run one method and write a CSV trace"))
    _add_solver_args(sub.add_parser("compare", help="run several methods from the same x0"))
    seq = sub.add_parser("sequence", help="tabulate the rate sequence and its lemma margins")
    seq.add_argument("--n", type=int, required=True)
    seq.add_argument("--nu", type=float, default=1.0)
    seq.add_argument("--T", type=int, default=20)
    seq.add_argument("--r0", type=float, default=1.0)
    seq.add_argument("--out")
    st = sub.add_parser("selftest", help="run the invariant suite")
    st.add_argument("--seeds", type=int, default=5)
    return parser


def merge_options(args):
    """defaults < JSON config < explicit flags."""
    opts = dict(RUN_DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            file_opts = json.load(fh)
        unknown = set(file_opts) - set(opts)
        if unknown:
            raise IgnError(f"unknown config keys: {', '.join(sorted(unknown))}")
        opts.update(file_opts)
    for key in RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    if isinstance(opts["method"], str):
        opts["method"] = [opts["method"]]
    return opts


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "sequence":
            return cmd_sequence(vars(args))
        if args.command == "selftest":
            return cmd_selftest(vars(args))
        opts = merge_options(args)
        if args.command == "run":
            return cmd_run(opts)
        return cmd_compare(opts)
    except (IgnError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
