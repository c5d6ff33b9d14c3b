"""Command-line front end.

Four subcommands: estimate (LRV of a CSV series), simulate (one size/power
experiment), tables (the full comparison bundle against the packaged
reference values), and fixedb-cache (regenerate the simulated critical
values). Machine-readable output goes to files, or to stdout only under
--stdout; progress and errors go to stderr.

Exit codes: 0 success, 2 usage or malformed input, 3 estimation failure,
4 critical-value cache failure.

A config file given with --config holds key=value lines whose keys are the
long flag names (hyphens or underscores); they are injected before the
explicit flags, so flags win. Unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import __version__
from .baselines import (
    andrews_hac,
    generate_fixed_b_cache,
    kvb_fixed_b,
    load_fixed_b_critical_values,
    nw_hac,
)
from .dkhac import BandwidthPlan, LrvEstimate, dk_hac, dk_hac_auto
from .kernels import lag_kernel, time_kernel
from .montecarlo import ESTIMATORS, MODELS, run_experiment

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ESTIMATION = 3
EXIT_CACHE = 4

_PSD_TOL = 1e-10


@dataclass(frozen=True)
class RunConfig:
    """Resolved options for one invocation, echoed into JSON outputs."""

    command: str
    input_path: str | None = None
    estimators: tuple = ()
    k1: str | None = None
    k2: str | None = None
    b1: float | None = None
    b2: float | None = None
    replications: int | None = None
    seed: int | None = None
    out_dir: str = "."
    fmt: str = "json"

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "input": self.input_path,
            "estimators": list(self.estimators),
            "k1": self.k1,
            "k2": self.k2,
            "b1": self.b1,
            "b2": self.b2,
            "replications": self.replications,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "format": self.fmt,
        }


def _eprint(*args):
    print(*args, file=sys.stderr)


def _read_csv_matrix(path):
    """Header row plus at least 32 finite numeric rows, one column per series."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise ValueError("empty CSV")
    header = [h.strip() for h in rows[0]]
    if not header or all(h == "" for h in header):
        raise ValueError("CSV has no columns")
    body = [r for r in rows[1:] if r and any(cell.strip() for cell in r)]
    if len(body) < 32:
        raise ValueError(f"need at least 32 data rows, found {len(body)}")
    data = np.empty((len(body), len(header)))
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise ValueError(f"row {i + 2} has {len(r)} fields, header has {len(header)}")
        try:
            data[i] = [float(cell) for cell in r]
        except ValueError:
            raise ValueError(f"row {i + 2} contains a non-numeric field") from None
    if not np.all(np.isfinite(data)):
        raise ValueError("CSV contains non-finite values")
    return data, header


def lrv_to_dict(est: LrvEstimate) -> dict:
    """JSON-ready image of an estimate; lrv_from_dict inverts it."""
    plan = est.plan
    b2 = plan.b2
    diagnostics = est.diagnostics
    if diagnostics is not None and hasattr(diagnostics, "to_dict"):
        diagnostics = diagnostics.to_dict()
    J = np.atleast_2d(est.J)
    return {
        "J": J.tolist(),
        "plan": {
            "b1": plan.b1,
            "b2": list(b2) if isinstance(b2, tuple) else b2,
            "n_T": plan.n_T,
            "source": plan.source,
            "b2_bar": plan.b2_bar,
        },
        "k1": est.k1.name,
        "k2": est.k2.name,
        "dof_adjusted": est.dof_adjusted,
        "min_eigenvalue": est.min_eigenvalue,
        "psd": bool(est.min_eigenvalue >= -_PSD_TOL * max(float(np.trace(J)), 0.0)),
        "diagnostics": diagnostics,
    }


def lrv_from_dict(payload: dict) -> LrvEstimate:
    p = payload["plan"]
    b2 = p["b2"]
    if isinstance(b2, list):
        b2 = tuple(b2)
    plan = BandwidthPlan(b1=p["b1"], b2=b2, n_T=p["n_T"], source=p["source"], b2_bar=p["b2_bar"])
    return LrvEstimate(
        np.asarray(payload["J"], dtype=np.float64),
        plan,
        lag_kernel(payload["k1"]),
        time_kernel(payload["k2"]),
        bool(payload["dof_adjusted"]),
        float(payload["min_eigenvalue"]),
        payload.get("diagnostics"),
    )


def _estimate_one(V, name: str, k1_name: str, k2_name: str, plan: BandwidthPlan | None):
    """Dispatch one estimator; returns (LrvEstimate, extra dict for the report)."""
    if plan is not None:
        if name != "dkhac":
            raise ValueError("--b1/--b2 overrides apply to the dkhac estimator only")
        est = dk_hac(V, lag_kernel(k1_name), time_kernel(k2_name), plan)
        return est, {}
    if name == "dkhac":
        return dk_hac_auto(V, lag_kernel(k1_name), time_kernel(k2_name)), {}
    if name == "nw":
        return nw_hac(V), {}
    if name == "nw-pw":
        return nw_hac(V, prewhiten=True), {}
    if name == "andrews":
        return andrews_hac(V), {}
    if name == "andrews-pw":
        return andrews_hac(V, prewhiten=True), {}
    if name == "kvb":
        est, cvs = kvb_fixed_b(V)
        extra = {"fixed_b_critical_values": {f"{q:.2f}": v for q, v in cvs.quantiles.items()}}
        return est, extra
    raise ValueError(f"unknown estimator {name!r}")


def _cmd_estimate(args, parser) -> int:
    if (args.b1 is None) != (args.b2 is None):
        parser.error("--b1 and --b2 must be given together")
    try:
        V, header = _read_csv_matrix(args.input)
    except ValueError as exc:
        _eprint(f"error: malformed CSV: {exc}")
        return EXIT_USAGE
    plan = None
    if args.b1 is not None:
        try:
            n_t = args.n_t if args.n_t is not None else V.shape[0]
            plan = BandwidthPlan(b1=args.b1, b2=args.b2, n_T=n_t, source="Predetermined")
        except ValueError as exc:
            parser.error(str(exc))
    try:
        est, extra = _estimate_one(V, args.estimator, args.k1, args.k2, plan)
    except ValueError as exc:
        stage = "bandwidth overrides" if plan is not None else f"{args.estimator} estimation"
        _eprint(f"error: estimation failed in {stage}: {exc}")
        return EXIT_ESTIMATION
    except np.linalg.LinAlgError as exc:
        _eprint(f"error: estimation failed in linear algebra: {exc}")
        return EXIT_ESTIMATION
    cfg = RunConfig(
        command="estimate",
        input_path=args.input,
        estimators=(args.estimator,),
        k1=args.k1,
        k2=args.k2,
        b1=args.b1,
        b2=args.b2,
        seed=args.seed,
        out_dir=args.out_dir,
    )
    report = {
        "version": __version__,
        "estimator": args.estimator,
        "columns": header,
        "T": int(V.shape[0]),
        "estimate": lrv_to_dict(est),
        "config": cfg.to_dict(),
    }
    report.update(extra)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.stdout:
        sys.stdout.write(text)
    else:
        os.makedirs(args.out_dir, exist_ok=True)
        out = args.out or os.path.join(args.out_dir, "lrv_estimate.json")
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        _eprint(f"wrote {out}")
    return EXIT_OK


def _parse_list(text, cast, what, parser):
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            out.append(cast(piece))
        except ValueError:
            parser.error(f"bad {what} entry {piece!r}")
    if not out:
        parser.error(f"empty {what} list")
    return out


def _check_estimators(names, parser):
    for n in names:
        if n not in ESTIMATORS:
            parser.error(f"unknown estimator {n!r}; choose from {', '.join(ESTIMATORS)}")
    return tuple(names)


def _cmd_simulate(args, parser) -> int:
    deltas = _parse_list(args.deltas, float, "delta", parser)
    estimators = _check_estimators(_parse_list(args.estimators, str, "estimator", parser), parser)
    t0 = time.perf_counter()
    try:
        report = run_experiment(
            args.model,
            args.T,
            deltas,
            estimators,
            R=args.R,
            base_seed=args.seed,
            workers=args.workers,
        )
    except ValueError as exc:
        parser.error(str(exc))
    _eprint(f"simulate {args.model} T={args.T} done in {time.perf_counter() - t0:.1f}s")
    if args.stdout:
        sys.stdout.write(report.to_json(include_timing=args.timing))
        return EXIT_OK
    os.makedirs(args.out_dir, exist_ok=True)
    stem = os.path.join(args.out_dir, f"sim_{args.model}_T{args.T}")
    report.to_csv(stem + ".csv")
    report.to_json(stem + ".json", include_timing=args.timing)
    _eprint(f"wrote {stem}.csv and {stem}.json")
    return EXIT_OK


def _load_reference_tables() -> dict:
    ref = resources.files("longrun").joinpath("data").joinpath("reference_tables.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def _ensure_fixedb_cache(out_dir) -> int:
    """Return 0 if critical values are loadable, regenerating if needed."""
    try:
        load_fixed_b_critical_values("t")
        load_fixed_b_critical_values("location")
        return EXIT_OK
    except Exception:
        pass
    path = os.path.join(out_dir, "fixedb_critical_values.json")
    _eprint(f"fixed-b cache missing; regenerating at {path}")
    try:
        generate_fixed_b_cache(path)
        os.environ["LONGRUN_FIXEDB_CACHE"] = path
        load_fixed_b_critical_values("t")
        load_fixed_b_critical_values("location")
        return EXIT_OK
    except Exception as exc:
        _eprint(f"error: cache generation failed: {exc}")
        return EXIT_CACHE


def _slug(name: str) -> str:
    return name.lower().replace(" ", "-")


def _cmd_tables(args, parser) -> int:
    estimators = _check_estimators(_parse_list(args.estimators, str, "estimator", parser), parser)
    payload = _load_reference_tables()
    tables = payload["tables"]
    if args.tables:
        wanted = [t.strip() for t in args.tables.split(",") if t.strip()]
        unknown = [t for t in wanted if t not in tables]
        if unknown:
            parser.error(f"unknown tables {unknown}; choose from {sorted(tables)}")
    else:
        wanted = sorted(tables)
    rc = _ensure_fixedb_cache(args.out_dir)
    if rc != EXIT_OK:
        return rc
    summary_cells = []
    os.makedirs(args.out_dir, exist_ok=True)
    for name in wanted:
        tbl = tables[name]
        columns = tbl["columns"]
        if args.T is not None:
            columns = [c for c in columns if c["T"] == args.T]
            if not columns:
                _eprint(f"table {name}: no columns at T={args.T}, skipped")
                continue
        # one experiment per (model, T) with that group's delta grid
        groups = {}
        for idx, col in enumerate(columns):
            groups.setdefault((col["model"], col["T"]), []).append((idx, col))
        rows = []
        for (model, T), cols_ in groups.items():
            deltas = [c["delta"] for _, c in cols_]
            t0 = time.perf_counter()
            report = run_experiment(
                model, T, deltas, estimators, R=args.R, base_seed=args.seed, workers=args.workers
            )
            _eprint(f"table {name}: {model} T={T} done in {time.perf_counter() - t0:.1f}s")
            for _, col in cols_:
                for est_name in estimators:
                    cell = next(
                        c
                        for c in report.cells
                        if c["estimator"] == est_name and c["delta"] == col["delta"]
                    )
                    ref_value = tbl["values"][est_name][tbl["columns"].index(col)]
                    rate = cell["rate"]
                    diff = None if rate is None else abs(rate - ref_value)
                    se = cell["mc_se"]
                    flagged = bool(
                        diff is not None and se is not None and diff > max(3.0 * se, 1e-12)
                    )
                    row = {
                        "table": name,
                        "label": col["label"],
                        "model": model,
                        "T": T,
                        "delta": col["delta"],
                        "estimator": est_name,
                        "rate": rate,
                        "mc_se": se,
                        "reference": ref_value,
                        "abs_diff": diff,
                        "flagged_3se": flagged,
                        "failures": cell["failures"],
                    }
                    rows.append(row)
                    summary_cells.append(row)
        out_csv = os.path.join(args.out_dir, f"table_{_slug(name)}.csv")
        with open(out_csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["table", "label", "model", "T", "delta", "estimator", "rate", "mc_se", "reference", "abs_diff", "flagged_3se", "failures"]
            )
            for r in rows:
                writer.writerow(
                    [
                        r["table"],
                        r["label"],
                        r["model"],
                        r["T"],
                        repr(float(r["delta"])),
                        r["estimator"],
                        "" if r["rate"] is None else f"{r['rate']:.6f}",
                        "" if r["mc_se"] is None else f"{r['mc_se']:.6f}",
                        f"{r['reference']:.3f}",
                        "" if r["abs_diff"] is None else f"{r['abs_diff']:.6f}",
                        int(r["flagged_3se"]),
                        r["failures"],
                    ]
                )
        _eprint(f"wrote {out_csv}")
    summary = {
        "version": __version__,
        "replications": args.R,
        "seed": args.seed,
        "estimators": list(estimators),
        "n_cells": len(summary_cells),
        "n_flagged": sum(1 for c in summary_cells if c["flagged_3se"]),
        "cells": summary_cells,
    }
    out_json = os.path.join(args.out_dir, "tables_summary.json")
    with open(out_json, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _eprint(f"wrote {out_json}")
    return EXIT_OK


def _cmd_fixedb_cache(args, parser) -> int:
    path = args.out or os.path.join(args.out_dir, "fixedb_critical_values.json")
    try:
        payload = generate_fixed_b_cache(path, grid_points=args.grid, replications=args.reps)
    except Exception as exc:
        _eprint(f"error: cache generation failed: {exc}")
        return EXIT_CACHE
    for family, entry in sorted(payload["families"].items()):
        _eprint(f"{family}: " + ", ".join(f"{k}->{v:.4f}" for k, v in sorted(entry["quantiles"].items())))
    _eprint(f"wrote {path}")
    return EXIT_OK


def _expand_config(argv):
    """Splice key=value pairs from --config FILE in as flags (flags win)."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise SystemExit(EXIT_USAGE)
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        _eprint(f"error: cannot read config {path}: {exc}")
        raise SystemExit(EXIT_USAGE) from None
    injected = []
    for ln, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            _eprint(f"error: config line {ln} is not key=value")
            raise SystemExit(EXIT_USAGE)
        key, value = line.split("=", 1)
        flag = "--" + key.strip().replace("_", "-")
        injected.extend([flag, value.strip()])
    # inject right after the subcommand so explicit flags override
    if not rest:
        return injected
    return rest[:1] + injected + rest[1:]


def _add_common(sub, with_workers=True):
    sub.add_argument("--out-dir", default=".", help="directory for output files")
    sub.add_argument("--seed", type=int, default=1)
    if with_workers:
        sub.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longrun", description="Long-run variance estimation and experiments"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    est = subs.add_parser("estimate", help="estimate an LRV from a CSV file")
    est.add_argument("input", help="CSV with a header row and one column per series")
    est.add_argument("--estimator", default="dkhac", choices=list(ESTIMATORS))
    est.add_argument("--k1", default="qs", choices=["qs", "bartlett", "parzen", "tukey-hanning"])
    est.add_argument("--k2", default="epanechnikov", choices=["epanechnikov", "uniform"])
    est.add_argument("--b1", type=float, default=None, help="lag bandwidth override")
    est.add_argument("--b2", type=float, default=None, help="time bandwidth override")
    est.add_argument("--n-t", type=int, default=None, help="block length for the override plan")
    est.add_argument("--out", default=None, help="output JSON path")
    est.add_argument("--stdout", action="store_true", help="write the report to stdout")
    _add_common(est, with_workers=False)

    sim = subs.add_parser("simulate", help="run one size/power experiment")
    sim.add_argument("--model", required=True, choices=list(MODELS))
    sim.add_argument("--T", required=True, type=int)
    sim.add_argument("--deltas", default="0", help="comma-separated alternative magnitudes")
    sim.add_argument("--estimators", default=",".join(ESTIMATORS))
    sim.add_argument("--R", type=int, default=5000)
    sim.add_argument("--timing", action="store_true", help="include wall-clock in the JSON")
    sim.add_argument("--stdout", action="store_true", help="write the JSON report to stdout")
    _add_common(sim)

    tab = subs.add_parser("tables", help="regenerate the comparison tables")
    tab.add_argument("--tables", default=None, help="comma-separated table names (default all)")
    tab.add_argument("--estimators", default=",".join(ESTIMATORS))
    tab.add_argument("--R", type=int, default=5000)
    tab.add_argument("--T", type=int, default=None, help="restrict to columns with this T")
    _add_common(tab)

    cache = subs.add_parser("fixedb-cache", help="regenerate fixed-b critical values")
    cache.add_argument("--out", default=None, help="output JSON path")
    cache.add_argument("--grid", type=int, default=2000)
    cache.add_argument("--reps", type=int, default=200000)
    _add_common(cache, with_workers=False)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    handlers = {
        "estimate": _cmd_estimate,
        "simulate": _cmd_simulate,
        "tables": _cmd_tables,
        "fixedb-cache": _cmd_fixedb_cache,
    }
    try:
        args = parser.parse_args(_expand_config(argv))
        return handlers[args.command](args, parser)
    except SystemExit as exc:
        # argparse (and parser.error in the handlers) exits 2 on usage
        # errors and 0 on --help; surface that as a return code
        return int(exc.code or 0)


if __name__ == "__main__":
    raise SystemExit(main())
