"""Command-line surface.

Subcommands: `value` scores one dataset with one method, `benchmark` runs
the full suite, `ablate` compares the objective variants, `parity` checks
that weighted training does not hurt test performance, and `report`
renders tables and plot-ready CSVs from a saved report.

All file outputs are deterministic functions of (config, seed): floats are
written with shortest round-trip repr and no timestamps are embedded.
Run context (config, seed, versions) is logged to stderr instead. Exit
codes: 0 ok, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import ast
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, bench, core
from .data import SplitSpec, load_csv, split_standardize, synth_blobs, synth_friedman1
from .errors import ConfigError, LossValError, ParseError


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _log(msg):
    print(msg, file=sys.stderr)


def _config_hash(payload: dict):
    canon = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _read_config_file(path):
    """key = value lines; values parsed as Python literals when possible."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            try:
                out[key.replace("-", "_")] = ast.literal_eval(val)
            except (ValueError, SyntaxError):
                out[key.replace("-", "_")] = val
    return out


def _apply_config_file(args, parser_defaults):
    """Config file fills in options the command line left at default."""
    if not args.config:
        return
    file_vals = _read_config_file(args.config)
    for key, val in file_vals.items():
        if not hasattr(args, key):
            raise ConfigError(f"unknown config key {key!r} in {args.config}")
        if getattr(args, key) == parser_defaults.get(key):
            setattr(args, key, val)


def _default_jobs():
    env = os.environ.get("LOSSVAL_JOBS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _load_dataset(args):
    split = SplitSpec(args.n_train, args.n_val, args.n_test, seed=args.seed)
    total = split.n_train + split.n_val + split.n_test
    if args.csv:
        full = load_csv(args.csv, args.label_col, args.task)
        if full.n < total:
            raise ConfigError(
                f"{args.csv} has {full.n} rows but the split needs {total}; "
                "adjust --n-train/--n-val/--n-test"
            )
    elif args.dataset == "blobs":
        full = synth_blobs(total, dim=args.blob_dim, n_classes=args.blob_classes,
                           sep=args.blob_sep, seed=args.seed)
    elif args.dataset == "friedman1":
        full = synth_friedman1(total, noise=1.0, seed=args.seed)
    else:
        raise ConfigError(f"unknown dataset {args.dataset!r}")
    return split_standardize(full, split)


def write_scores(path, result: core.ValuationResult):
    """Two-column score file with a provenance header."""
    chash = _config_hash({"method": result.method, "seed": result.seed,
                          "config": result.config})
    with open(path, "w") as fh:
        fh.write(f"# method={result.method}\n")
        fh.write(f"# seed={result.seed}\n")
        fh.write(f"# config_hash={chash}\n")
        fh.write("index,score\n")
        for i, s in enumerate(result.scores):
            fh.write(f"{i},{_fmt(s)}\n")


def read_scores(path):
    meta, idx, scores = {}, [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line and not line.startswith("index"):
                i, s = line.split(",")
                idx.append(int(i))
                scores.append(float(s))
    return np.asarray(scores)[np.argsort(idx)], meta


def _cmd_value(args):
    train, val, _ = _load_dataset(args)
    cfg = bench.BenchmarkConfig(
        epochs=args.epochs, batch_size=args.batch_size,
        lossval_lr_model=args.lr_model, lossval_lr_weights=args.lr_weights,
        mlp_hidden=tuple(args.hidden), mlp_activation=args.activation,
        split=SplitSpec(args.n_train, args.n_val, args.n_test, seed=args.seed),
        evaluator_epochs=args.evaluator_epochs,
    )
    _log(f"value: method={args.method} dataset={args.dataset or args.csv} "
         f"seed={args.seed} epochs={args.epochs}")
    result = bench.compute_scores(args.method, train, val, cfg, args.seed)
    write_scores(args.out, result)
    _log(f"wrote {args.out} ({result.scores.size} scores, "
         f"{result.wall_time:.2f}s)")
    return 0


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _emit_report_files(report: bench.ExperimentReport, outdir):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")

    cell_metrics = ["f1", "detection_curve_mean", "removal_mean", "addition_mean"]
    present = [m for m in cell_metrics if any(m in c for c in report.cells)]
    rows = []
    for c in report.cells:
        rows.append([c["dataset"], c["method"], c["noise_kind"], c["rate"],
                     c["seed"]] + [c.get(m, "") for m in present]
                    + [c.get("error", "")])
    _write_csv(os.path.join(outdir, "cells.csv"),
               ["dataset", "method", "noise_kind", "rate", "seed"] + present + ["error"],
               rows)

    agg_keys = sorted({k for row in report.aggregates for k in row
                       if k.endswith("_mean") or k.endswith("_se")})
    rows = [[a["dataset"], a["method"], a["noise_kind"], a["rate"], a["n_cells"]]
            + [a.get(k, "") for k in agg_keys] for a in report.aggregates]
    _write_csv(os.path.join(outdir, "aggregates.csv"),
               ["dataset", "method", "noise_kind", "rate", "n_cells"] + agg_keys,
               rows)

    # one F1 column per noise rate (the headline table)
    rates = sorted({a["rate"] for a in report.aggregates})
    byrow = {}
    for a in report.aggregates:
        if "f1_mean" not in a:
            continue
        byrow.setdefault((a["dataset"], a["method"], a["noise_kind"]), {})[a["rate"]] = a
    rows = []
    for key in sorted(byrow):
        entry = [key[0], key[1], key[2]]
        vals = []
        for rate in rates:
            a = byrow[key].get(rate)
            entry.append(a["f1_mean"] if a else "")
            if a:
                vals.append(a["f1_mean"])
        entry.append(float(np.mean(vals)) if vals else "")
        rows.append(entry)
    _write_csv(os.path.join(outdir, "f1_table.csv"),
               ["dataset", "method", "noise_kind"]
               + [f"f1@{int(round(r * 100))}%" for r in rates] + ["f1_overall"],
               rows)

    # plot-ready curve data, exactly the stored curve points
    for kind, grid in (("removal", bench.REMOVAL_GRID), ("addition", bench.ADDITION_GRID)):
        key = f"{kind}_curve"
        cells = [c for c in report.cells if key in c]
        if not cells:
            continue
        rows = [[c["dataset"], c["method"], c["noise_kind"], c["rate"], c["seed"],
                 float(frac), val]
                for c in cells
                for frac, val in zip(grid, c[key])]
        _write_csv(os.path.join(outdir, f"{kind}_curves.csv"),
                   ["dataset", "method", "noise_kind", "rate", "seed",
                    "fraction", "metric"], rows)


def _cmd_benchmark(args):
    rates = tuple(float(r) / 100.0 for r in args.rates.split(","))
    cfg = bench.BenchmarkConfig(
        datasets=tuple(args.datasets.split(",")),
        methods=tuple(args.methods.split(",")),
        noise_kinds=tuple(args.kinds.split(",")),
        rates=rates,
        n_seeds=args.seeds,
        split=SplitSpec(args.n_train, args.n_val, args.n_test, seed=0),
        epochs=args.epochs,
        batch_size=args.batch_size,
        lossval_lr_model=args.lr_model,
        lossval_lr_weights=args.lr_weights,
        mlp_hidden=tuple(args.hidden),
        mlp_activation=args.activation,
        evaluator_epochs=args.evaluator_epochs,
        with_removal=args.with_removal,
        with_addition=args.with_addition,
        n_jobs=args.jobs,
    )
    _log(f"benchmark: {len(cfg.datasets)} datasets x {len(cfg.methods)} methods x "
         f"{len(cfg.noise_kinds)} kinds x {len(cfg.rates)} rates x {cfg.n_seeds} seeds, "
         f"jobs={cfg.n_jobs}")
    report = bench.run_benchmark(cfg)
    _emit_report_files(report, args.out)
    failures = [c for c in report.cells if "error" in c]
    _log(f"wrote {args.out}/report.json ({len(report.cells)} cells, "
         f"{len(failures)} failed)")
    for c in failures:
        _log(f"  cell {c['dataset']}/{c['method']}/{c['noise_kind']}"
             f"/{c['rate']}/{c['seed']}: {c['error']}")
    return 0


def _cmd_ablate(args):
    cfg = bench.BenchmarkConfig(
        datasets=("blobs",),
        methods=tuple(core.VARIANTS),
        noise_kinds=(args.kind,),
        rates=(args.rate / 100.0,),
        n_seeds=args.seeds,
        split=SplitSpec(args.n_train, args.n_val, args.n_test, seed=0),
        epochs=args.epochs,
        batch_size=args.batch_size,
        lossval_lr_model=args.lr_model,
        lossval_lr_weights=args.lr_weights,
        mlp_hidden=tuple(args.hidden),
        mlp_activation=args.activation,
        n_jobs=args.jobs,
    )
    _log(f"ablate: {len(core.VARIANTS)} variants x {cfg.n_seeds} seeds "
         f"(epochs={cfg.epochs})")
    report = bench.run_benchmark(cfg)
    rows = []
    for variant in core.VARIANTS:
        agg = [a for a in report.aggregates if a["method"] == variant]
        if agg and "f1_mean" in agg[0]:
            rows.append([variant, agg[0]["f1_mean"], agg[0]["f1_se"],
                         agg[0]["n_cells"]])
        else:
            rows.append([variant, "", "", 0])
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "ablation.csv"),
               ["variant", "f1_mean", "f1_se", "n_seeds"], rows)
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    for row in rows:
        _log(f"  {row[0]:<16} f1={row[1]}")
    _log(f"wrote {args.out}/ablation.csv")
    return 0


def _cmd_parity(args):
    rows = []
    for name in args.datasets.split(","):
        deltas, plains, weighteds = [], [], []
        for seed in range(args.seeds):
            split = SplitSpec(args.n_train, args.n_val, args.n_test, seed=seed)
            total = split.n_train + split.n_val + split.n_test
            if name == "blobs":
                full = synth_blobs(total, seed=seed)
            elif name == "friedman1":
                full = synth_friedman1(total, seed=seed)
            else:
                raise ConfigError(f"unknown dataset {name!r}")
            train, val, test = split_standardize(full, split)
            plain, weighted = core.downstream_parity(
                train, val, test, epochs=args.epochs, lr_model=args.lr_model,
                batch_size=args.batch_size, seed=seed,
            )
            plains.append(plain)
            weighteds.append(weighted)
            deltas.append(weighted - plain)
            _log(f"  {name} seed={seed}: plain={plain:.4f} weighted={weighted:.4f}")
        rows.append([name, float(np.mean(plains)), float(np.mean(weighteds)),
                     float(np.mean(deltas)), float(np.std(deltas, ddof=1) / np.sqrt(len(deltas)))
                     if len(deltas) > 1 else 0.0])
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "parity.csv"),
               ["dataset", "plain_mean", "weighted_mean", "delta_mean", "delta_se"],
               rows)
    _log(f"wrote {args.out}/parity.csv")
    return 0


def _cmd_report(args):
    with open(args.infile) as fh:
        report = bench.ExperimentReport.from_json(fh.read())
    _emit_report_files(report, args.out)
    _log(f"rendered {args.infile} into {args.out}/")
    return 0


def _add_model_flags(p):
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr-model", type=float, default=0.01)
    p.add_argument("--lr-weights", type=float, default=0.01)
    p.add_argument("--hidden", type=lambda s: tuple(int(v) for v in s.split(",")),
                   default=(100, 100, 100, 100, 100),
                   help="comma-separated hidden layer sizes")
    p.add_argument("--activation", default="relu",
                   choices=("relu", "tanh", "sigmoid"))
    p.add_argument("--evaluator-epochs", type=int, default=30)


def _add_split_flags(p):
    p.add_argument("--n-train", type=int, default=1000)
    p.add_argument("--n-val", type=int, default=100)
    p.add_argument("--n-test", type=int, default=3000)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lossval",
        description="Data valuation through self-weighting losses, with baselines "
                    "and a noisy-sample benchmark harness.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("value", help="score one dataset with one method")
    p.add_argument("--method", required=True,
                   help="lossval, lossval_5, a variant name, knn_shapley, loo, random")
    p.add_argument("--dataset", default="blobs", choices=("blobs", "friedman1"))
    p.add_argument("--csv", default=None, help="score a CSV file instead")
    p.add_argument("--label-col", default="label")
    p.add_argument("--task", default="classification",
                   choices=("classification", "regression"))
    p.add_argument("--blob-dim", type=int, default=10)
    p.add_argument("--blob-classes", type=int, default=3)
    p.add_argument("--blob-sep", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_split_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=_cmd_value)

    p = sub.add_parser("benchmark", help="run the full valuation benchmark")
    p.add_argument("--datasets", default="blobs")
    p.add_argument("--methods", default="lossval,knn_shapley,random")
    p.add_argument("--kinds", default="label")
    p.add_argument("--rates", default="5,10,15,20", help="noise rates in percent")
    p.add_argument("--seeds", type=int, default=15)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--with-removal", action="store_true")
    p.add_argument("--with-addition", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_split_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("ablate", help="compare the objective variants")
    p.add_argument("--kind", default="label", choices=bench.NOISE_KINDS)
    p.add_argument("--rate", type=float, default=20.0, help="noise rate in percent")
    p.add_argument("--seeds", type=int, default=15)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_split_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("parity", help="plain vs weighted training comparison")
    p.add_argument("--datasets", default="blobs,friedman1")
    p.add_argument("--seeds", type=int, default=15)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_split_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=_cmd_parity)

    p = sub.add_parser("report", help="render tables/plot data from a report")
    p.add_argument("--infile", required=True, help="report.json from a benchmark run")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def _subparser_defaults(parser, command):
    choices = parser._subparsers._group_actions[0].choices
    return {a.dest: a.default for a in choices[command]._actions}


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "config", None):
            _apply_config_file(args, _subparser_defaults(parser, args.command))
        _log(f"lossval {args.command} | python={sys.version.split()[0]} "
             f"numpy={np.__version__} lossval={__version__} "
             f"seed={getattr(args, 'seed', 'n/a')}")
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        _log(f"error: {exc}")
        return 2
    except LossValError as exc:
        _log(f"error: {exc}")
        return 1
    except OSError as exc:
        _log(f"error: {exc}")
        return 1


def main():
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
