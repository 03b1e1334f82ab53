"""Command-line interface.

Subcommands: train-teacher | attack | compare | sweep | diagnose | report.
All take --config (JSON, deep-merged over the built-in defaults) and any
number of --set dotted.path=value overrides. Outputs land in --out-dir:
per-target rows CSV, per-attack summary CSV, trace JSON, and optional
gnuplot-ready .dat files. Runs are deterministic for a fixed config and
seed (timing columns stay 0 unless --timing is set, keeping outputs
byte-identical across repeats).
"""

import argparse
import json
import os
import sys

from .errors import ConfigError, DatasetError, MmaError
from .experiments import (load_config, prepare_task, run_capacity_sweep,
                          run_comparison, run_diagnose, run_tradeoff_sweep)
from .metrics import (SWEEP_COLUMNS, build_report, rows_from_trace_dicts,
                      write_dat, write_rows_csv, write_summary_csv,
                      write_sweep_csv)


def _add_common(p):
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE",
                   help="override a config key (JSON-parsed value)")
    p.add_argument("--out-dir", default="out")


def _build_parser():
    parser = argparse.ArgumentParser(prog="mmattack")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-teacher", help="train the teacher and save a checkpoint")
    _add_common(p)
    p.add_argument("--out", default=None, help="checkpoint path (default out-dir/teacher.json)")

    p = sub.add_parser("attack", help="run one attack over the configured targets")
    _add_common(p)
    p.add_argument("--attack", default="mmattack",
                   choices=["mmattack", "nes", "zoo", "square"])
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("compare", help="run every configured attack per target")
    _add_common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--emit-dat", action="store_true")

    p = sub.add_parser("sweep", help="query-budget trade-off or capacity sweep")
    _add_common(p)
    p.add_argument("--kind", default="tradeoff", choices=["tradeoff", "capacity"])
    p.add_argument("--total-budget", type=int, default=None)
    p.add_argument("--n-runs", type=int, default=None)
    p.add_argument("--emit-dat", action="store_true")

    p = sub.add_parser("diagnose", help="MMAttack with theorem diagnostics")
    _add_common(p)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("report", help="recompute CSV tables from a trace file")
    p.add_argument("--traces", required=True, help="traces JSON written by compare/attack")
    p.add_argument("--out-dir", default="out")

    return parser


def _load_cfg(args):
    cfg = load_config(args.config, args.set)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "timing", False):
        cfg["timing"] = True
    return cfg


def _write_report(report, entries, out_dir, emit_dat=False):
    os.makedirs(out_dir, exist_ok=True)
    rows_path = os.path.join(out_dir, "rows.csv")
    summary_path = os.path.join(out_dir, "summary.csv")
    traces_path = os.path.join(out_dir, "traces.json")
    write_rows_csv(report.rows, rows_path)
    write_summary_csv(report.summaries, summary_path)
    with open(traces_path, "w") as fh:
        json.dump({"metadata": report.metadata, "entries": entries}, fh, sort_keys=True)
    written = [rows_path, summary_path, traces_path]
    if emit_dat:
        dat_path = os.path.join(out_dir, "summary.dat")
        write_dat([s.to_dict() for s in report.summaries],
                  ("attack", "n_targets", "n_success", "asr", "aqn_total",
                   "aqn_attack_only"), dat_path)
        written.append(dat_path)
    return written


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports its own message
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 2
    except (ConfigError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MmaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "train-teacher":
        cfg = _load_cfg(args)
        os.makedirs(args.out_dir, exist_ok=True)
        task = prepare_task(cfg)
        out = args.out or os.path.join(args.out_dir, "teacher.json")
        task.teacher.save(out)
        print(f"teacher saved to {out}")
        print(f"train accuracy {task.teacher_train_acc:.4f}, "
              f"holdout accuracy {task.teacher_holdout_acc:.4f}")
        return 0

    if args.command == "attack":
        cfg = _load_cfg(args)
        cfg["attacks"] = [args.attack]
        report, entries = run_comparison(cfg)
        for path in _write_report(report, entries, args.out_dir):
            print(f"wrote {path}")
        return 0

    if args.command == "compare":
        cfg = _load_cfg(args)
        report, entries = run_comparison(cfg)
        for path in _write_report(report, entries, args.out_dir, args.emit_dat):
            print(f"wrote {path}")
        return 0

    if args.command == "sweep":
        cfg = _load_cfg(args)
        os.makedirs(args.out_dir, exist_ok=True)
        if args.kind == "tradeoff":
            rows = run_tradeoff_sweep(cfg, args.total_budget, args.n_runs)
            path = os.path.join(args.out_dir, "sweep.csv")
            write_sweep_csv(rows, path)
            print(f"wrote {path}")
            if args.emit_dat:
                dat = os.path.join(args.out_dir, "sweep.dat")
                write_dat(rows, SWEEP_COLUMNS, dat)
                print(f"wrote {dat}")
        else:
            rows = run_capacity_sweep(cfg, args.n_runs)
            path = os.path.join(args.out_dir, "capacity.csv")
            cols = ("capacity", "student", "initial_dataset_size",
                    "candidates_per_iter", "n_runs", "asr", "aqn_total",
                    "aqn_attack_only")
            import csv as _csv

            from .metrics import render_value
            with open(path, "w", newline="") as fh:
                w = _csv.writer(fh)
                w.writerow(cols)
                for row in rows:
                    w.writerow([render_value(row[c]) for c in cols])
            print(f"wrote {path}")
            if args.emit_dat:
                dat = os.path.join(args.out_dir, "capacity.dat")
                write_dat(rows, cols, dat)
                print(f"wrote {dat}")
        return 0

    if args.command == "diagnose":
        cfg = _load_cfg(args)
        os.makedirs(args.out_dir, exist_ok=True)
        rows, diags = run_diagnose(cfg)
        rows_path = os.path.join(args.out_dir, "rows.csv")
        diag_path = os.path.join(args.out_dir, "diagnostics.json")
        write_rows_csv(rows, rows_path)
        with open(diag_path, "w") as fh:
            json.dump(diags, fh, sort_keys=True)
        checked = [d for d in diags if d["diagnostics"]]
        eligible = [
            d for d in checked
            if d["diagnostics"]["hypothesis_flags"]["perfect_match_held"]
            and d["diagnostics"]["hypothesis_flags"]["margin_condition_held"]
        ]
        held = [d for d in eligible if d["diagnostics"]["final_bound_held"]]
        print(f"wrote {rows_path}")
        print(f"wrote {diag_path}")
        print(f"theorem bound held in {len(held)}/{len(eligible)} eligible runs")
        return 0

    if args.command == "report":
        with open(args.traces) as fh:
            blob = json.load(fh)
        rows = rows_from_trace_dicts(blob["entries"])
        report = build_report(rows, blob.get("metadata", {}))
        os.makedirs(args.out_dir, exist_ok=True)
        rows_path = os.path.join(args.out_dir, "rows.csv")
        summary_path = os.path.join(args.out_dir, "summary.csv")
        write_rows_csv(report.rows, rows_path)
        write_summary_csv(report.summaries, summary_path)
        print(f"wrote {rows_path}")
        print(f"wrote {summary_path}")
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
