"""Command-line harness: dataset ingestion, sweeps, scans, and reports.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .datasets import fetch_sklearn_digits, load_digits_csv, load_mnist_idx, write_digits_csv
from .encoding import save_encoder
from .errors import ConfigError, DataError, NumericalError
from .learning import save_params
from .sweep import (
    RESULT_COLUMNS,
    SweepEngine,
    aggregate_rows,
    read_rows,
    run_apr_scan,
    run_lt_scan,
    synthesize_reference,
    write_rows,
)


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit code 1, not 2)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="annealml",
                     description="Annealing-dynamics feature maps: sweeps and diagnostics")
    parser.add_argument("--version", action="version", version=f"annealml {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--subsample", nargs=2, type=int,
                        metavar=("N_TRAIN", "N_TEST"),
                        help="stratified subsample sizes (mnist)")
    common.add_argument("--threads", type=int, help="evolution worker threads")

    ingest = sub.add_parser("ingest", parents=[common],
                            help="fetch or validate dataset files")
    ingest.add_argument("source", choices=["digits", "mnist"])
    ingest.add_argument("--csv", help="existing digits CSV to validate instead of fetching")

    for name in ("sweep-time", "sweep-shots", "sweep-noise"):
        sub.add_parser(name, parents=[common],
                       help=f"run the {name.split('-')[1]} sweep from the config")

    sub.add_parser("apr-scan", parents=[common],
                   help="participation-ratio scan over the time grid")

    lt = sub.add_parser("lt-scan", parents=[common],
                        help="match reference distributions against simulated times")
    lt.add_argument("--reference", help="npz file with a 'dists' array")
    lt.add_argument("--synthesize", type=float, metavar="T_HIDDEN",
                    help="generate the reference from the simulator at this time")
    lt.add_argument("--synth-shots", type=int, default=10_000,
                    help="shot noise applied to the synthesized reference")
    lt.add_argument("--synth-scale", type=float, default=1.0,
                    help="Hamiltonian scale factor for the synthesized reference")
    lt.add_argument("--n-images", type=int, default=100,
                    help="number of training images to match")

    sub.add_parser("baseline", parents=[common],
                   help="train and score the linear model on PCA features")

    report = sub.add_parser("report", parents=[common],
                            help="aggregate a sweep CSV over repetitions")
    report.add_argument("results_csv")

    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    if args.subsample is not None:
        cfg.subsample = list(args.subsample)
    if args.threads is not None:
        cfg.threads = args.threads
    cfg.validate()
    return cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_models(engine: SweepEngine, out: Path, tag: str):
    for n_qubits, enc in engine.encoded.items():
        save_encoder(out / f"encoder_{tag}_n{n_qubits}.json", enc.pca,
                     enc.normalizer, seed=engine.cfg.seed)
    for (n_qubits, rep), result in engine._baseline_cache.items():
        if rep == 0:
            save_params(out / f"baseline_{tag}_n{n_qubits}.json",
                        result["params"], seed=engine.cfg.seed)


def _cmd_ingest(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    if args.source == "digits":
        if args.csv:
            images, labels = load_digits_csv(args.csv)
        else:
            images, labels = fetch_sklearn_digits()
        path = out / "digits.csv"
        write_digits_csv(path, images, labels)
        print(f"wrote {path}: {images.shape[0]} images, "
              f"{len(np.unique(labels))} classes")
        return 0
    paths = cfg.dataset_paths() if cfg.dataset == "mnist" else None
    if paths is None:
        raise ConfigError("ingest mnist requires a config with dataset='mnist' and IDX paths")
    train_x, train_y = load_mnist_idx(paths[0], paths[1])
    test_x, test_y = load_mnist_idx(paths[2], paths[3])
    print(f"train: {train_x.shape[0]} images of {train_x.shape[1]} pixels; "
          f"test: {test_x.shape[0]} images")
    print(f"label counts (train): {np.bincount(train_y, minlength=10).tolist()}")
    return 0


def _cmd_sweep(args, sweep_name: str) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    engine = SweepEngine(cfg)
    rows = engine.run(sweep_name)
    path = out / f"{sweep_name}_{cfg.config_hash()}.csv"
    write_rows(path, rows)
    _save_models(engine, out, sweep_name)
    failures = sum(1 for r in rows if r["error"])
    print(f"wrote {path}: {len(rows)} rows" + (f", {failures} failed" if failures else ""))
    return 0


def _cmd_apr_scan(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    samples, summary, collapse = run_apr_scan(cfg)
    tag = cfg.config_hash()
    sample_path = out / f"apr_samples_{tag}.csv"
    write_rows(sample_path, samples,
               columns=["n_qubits", "T", "gamma", "sample_index", "pr"])
    summary_path = out / f"apr_summary_{tag}.csv"
    write_rows(summary_path, summary, columns=["n_qubits", "T", "gamma", "apr"])
    print(f"wrote {sample_path} and {summary_path}")
    for gamma, result in collapse.items():
        print(f"gamma={gamma}: collapse score {result.score_unrescaled:.4f} -> "
              f"{result.score_rescaled:.4f} (alpha={result.alpha})")
        with open(out / f"apr_collapse_{tag}_g{gamma}.json", "w", encoding="utf-8") as fh:
            json.dump({"alpha": result.alpha,
                       "score_unrescaled": result.score_unrescaled,
                       "score_rescaled": result.score_rescaled,
                       "rows": result.rows}, fh, indent=1)
    return 0


def _cmd_lt_scan(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    if args.reference:
        try:
            with np.load(args.reference) as doc:
                if "dists" not in doc:
                    raise DataError(f"{args.reference}: missing 'dists' array")
                refs = doc["dists"]
        except OSError as exc:
            raise DataError(f"cannot read {args.reference}: {exc}") from None
    elif args.synthesize is not None:
        refs = synthesize_reference(cfg, args.synthesize,
                                    shots=args.synth_shots,
                                    scale_factor=args.synth_scale,
                                    n_images=args.n_images)
    else:
        raise ConfigError("lt-scan needs --reference or --synthesize")
    scan = run_lt_scan(cfg, refs, n_images=args.n_images)
    path = out / f"lt_scan_{cfg.config_hash()}.csv"
    write_rows(path, [{"T": float(t), "mean_L": float(l)}
                      for t, l in zip(scan.t_grid, scan.mean_l)],
               columns=["T", "mean_L"])
    print(f"wrote {path}; T* = {scan.t_star}")
    return 0


def _cmd_baseline(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    engine = SweepEngine(cfg)
    rows = []
    for n_qubits in cfg.resolved_qubit_counts():
        for rep in range(cfg.repetitions):
            result = engine.baseline(n_qubits, rep)
            rows.append({
                "config_hash": cfg.config_hash(), "dataset": cfg.dataset,
                "n_qubits": n_qubits, "repetition": rep,
                "train_accuracy": result["train_accuracy"],
                "test_accuracy": result["test_accuracy"],
            })
    path = out / f"baseline_{cfg.config_hash()}.csv"
    write_rows(path, rows, columns=["config_hash", "dataset", "n_qubits",
                                    "repetition", "train_accuracy", "test_accuracy"])
    _save_models(engine, out, "baseline")
    print(f"wrote {path}")
    for row in rows:
        print(f"  N={row['n_qubits']} rep={row['repetition']}: "
              f"train {row['train_accuracy']:.4f} test {row['test_accuracy']:.4f}")
    return 0


def _cmd_report(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    rows = read_rows(args.results_csv)
    if not rows:
        raise DataError(f"{args.results_csv}: no rows")
    summary = aggregate_rows(rows)
    columns = list(summary[0].keys()) if summary else []
    path = out / (Path(args.results_csv).stem + "_report.csv")
    write_rows(path, summary, columns=columns)
    print(f"wrote {path}")
    for row in summary:
        label = " ".join(f"{k}={row[k]}" for k in
                         ("n_qubits", "gamma", "T", "shots") if k in row)
        print(f"  {label}: test {row['test_accuracy_mean']:.4f} "
              f"± {row['test_accuracy_std']:.4f} "
              f"(baseline {row['baseline_test_accuracy_mean']:.4f})")
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command in ("sweep-time", "sweep-shots", "sweep-noise"):
            return _cmd_sweep(args, args.command)
        if args.command == "apr-scan":
            return _cmd_apr_scan(args)
        if args.command == "lt-scan":
            return _cmd_lt_scan(args)
        if args.command == "baseline":
            return _cmd_baseline(args)
        if args.command == "report":
            return _cmd_report(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
