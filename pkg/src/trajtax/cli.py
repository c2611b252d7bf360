"""Command-line driver: extract -> run -> report.

Exit status is 0 on success, 1 on a runtime failure and 2 on a usage,
configuration or input-schema error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from trajtax.config import ExperimentConfig, load_config
from trajtax.errors import ConfigurationError, EmptyInputError, ResampleError, SchemaError, TrajtaxError
from trajtax.evaluation import plan_experiment, read_results, run_experiment, write_results
from trajtax.features import FeatureMatrix, extract_features
from trajtax.reporting import format_median_table, write_reports
from trajtax.trajectory import parse_trajectory_csv, resample_set

logger = logging.getLogger("trajtax")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (YAML)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="trajtax", description="Taxonomy-guided feature selection for trajectory classification.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("extract", parents=[common], help="parse trajectories and write the feature matrix")

    run = sub.add_parser("run", parents=[common], help="run the full selection/evaluation experiment")
    run.add_argument("--threads", type=_positive, default=os.cpu_count() or 1, help="worker processes (default: CPU count)")
    run.add_argument("--dry-run", action="store_true", help="print the validated plan and expected fit counts only")
    run.add_argument("--seed-override", type=_seed_list, help="comma-separated outer seeds replacing the config's")

    rep = sub.add_parser("report", parents=[common], help="regenerate reports from a results file")
    rep.add_argument("results", nargs="?", help="results.jsonl (default: <out>/results.jsonl)")
    return p


def _config(args) -> ExperimentConfig:
    if not args.config:
        raise UsageError(f"{args.command} needs --config")
    cfg = load_config(args.config)
    if args.out:
        cfg.output = args.out
    if getattr(args, "seed_override", None):
        try:
            cfg.with_seeds(args.seed_override)
        except TrajtaxError as exc:
            raise ConfigurationError(str(exc)) from exc
    return cfg


def _missing_stats(fm: FeatureMatrix) -> str:
    per_col = fm.missing.sum(axis=0)
    rows_with = int(fm.missing.any(axis=1).sum())
    worst = ", ".join(f"{fm.columns[j]}={int(per_col[j])}" for j in np.argsort(-per_col, kind="stable")[:3] if per_col[j])
    return f"missing values: {int(per_col.sum())} cells in {rows_with} rows" + (f" (most: {worst})" if worst else "")


def load_features(cfg: ExperimentConfig, quiet: bool = False) -> FeatureMatrix:
    """Feature matrix from the config: a prepared CSV or inline extraction."""
    if cfg.features_path is not None:
        sidecar = os.path.splitext(cfg.features_path)[0] + ".json"
        fm = FeatureMatrix.read(cfg.features_path, sidecar if os.path.exists(sidecar) else None)
        if all(leaf is None for leaf in fm.leaves):
            fm = FeatureMatrix(fm.ids, fm.labels, fm.columns, fm.values, cfg.taxonomy.tag(fm.columns))
        return fm
    with open(cfg.dataset_path, "rb") as fh:
        try:
            data = parse_trajectory_csv(fh, cfg.columns)
        except (SchemaError, EmptyInputError) as exc:
            raise type(exc)(f"{cfg.dataset_path}: {exc}") from exc
    if data.report is not None and data.report.rows_rejected:
        logger.warning("%s: %d rows rejected %s", cfg.dataset_path, data.report.rows_rejected, data.report.rejections)
    if cfg.resample is not None:
        rs = cfg.resample
        data = resample_set(data, rs.per_class, rs.seed, top_k=rs.top_k, classes=rs.classes, replace=rs.replace)
    return extract_features(data, cfg.taxonomy)


def cmd_extract(args) -> int:
    cfg = _config(args)
    fm = load_features(cfg)
    os.makedirs(cfg.output, exist_ok=True)
    csv_path = os.path.join(cfg.output, "features.csv")
    fm.write(csv_path, os.path.join(cfg.output, "features.json"))
    print(f"wrote {csv_path}: {fm.shape[0]} rows x {fm.shape[1]} columns")
    print(_missing_stats(fm))
    return EXIT_OK


def _print_plan(plan: list[dict], fm: FeatureMatrix, cfg: ExperimentConfig) -> None:
    print(f"dataset {cfg.dataset_name}: {fm.shape[0]} rows x {fm.shape[1]} columns, classes {sorted(set(fm.labels))}")
    print(f"protocol: seeds {list(cfg.protocol.seeds)}, {cfg.protocol.folds} folds, "
          f"{cfg.protocol.iterations} iterations per cell")
    print(f"{'method':<10}{'model':<24}{'tuned':<7}{'iterations':>11}{'fits/iteration':>20}{'fits total':>22}")
    for row in plan:
        lo, hi = row["fits_per_iteration"]
        tlo, thi = row["fits_total"]
        per = str(lo) if row["exact"] else f"{lo}..{hi}"
        tot = str(tlo) if row["exact"] else f"{tlo}..{thi}"
        print(f"{row['method']:<10}{row['family']:<24}{str(row['tuned']).lower():<7}{row['iterations']:>11}{per:>20}{tot:>22}")


def _write_fit_log(results, path: str) -> list[list]:
    cells: dict[tuple, list[int]] = {}
    for r in results:
        acc = cells.setdefault((r.method, r.family, r.tuned), [0, 0, 0, 0])
        acc[0] += 1
        acc[1] += r.selection_fit_count
        acc[2] += r.tuning_fit_count
        acc[3] += r.fit_count
    rows = [[m, f, str(t).lower(), *v] for (m, f, t), v in cells.items()]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "model", "tuned", "iterations", "selection_fits", "tuning_fits", "total_fits"])
        w.writerows(rows)
    return rows


def cmd_run(args) -> int:
    cfg = _config(args)
    fm = load_features(cfg)
    plan = plan_experiment(fm.shape[1], cfg.methods, cfg.families, cfg.protocol, cfg.grids, cfg.taxonomy)
    if args.dry_run:
        _print_plan(plan, fm, cfg)
        return EXIT_OK

    results = run_experiment(
        fm, cfg.methods, cfg.families, cfg.protocol, cfg.grids,
        taxonomy=cfg.taxonomy, hyperparameters=cfg.hyperparameters, tolerance=cfg.tolerance,
        dataset=cfg.dataset_name, n_jobs=args.threads, on_error="record",
    )
    os.makedirs(cfg.output, exist_ok=True)
    write_results(results, os.path.join(cfg.output, "results.jsonl"), os.path.join(cfg.output, "timings.jsonl"))
    _write_fit_log(results, os.path.join(cfg.output, "fit_log.csv"))
    ok = [r for r in results if r.ok]
    if ok:
        write_reports(ok, cfg.output, cfg.taxonomy)
        print(format_median_table(ok))
    failed = len(results) - len(ok)
    if failed:
        print(f"{failed} of {len(results)} iterations failed; see results.jsonl", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = load_config(args.config) if args.config else None
    path = args.results or (os.path.join(args.out or cfg.output, "results.jsonl") if (args.out or cfg) else None)
    if path is None:
        raise UsageError("report needs a results path, --out or --config")
    if not os.path.exists(path):
        raise UsageError(f"results file not found: {path}")
    results, skipped = read_results(path)
    if skipped:
        print(f"warning: skipped {skipped} unreadable line(s) in {path}", file=sys.stderr)
    ok = [r for r in results if r.ok]
    if not ok:
        raise UsageError(f"{path}: no usable results")
    out = args.out or (cfg.output if cfg else os.path.dirname(os.path.abspath(path)))
    write_reports(ok, out, cfg.taxonomy if cfg else None)
    print(format_median_table(ok))
    return EXIT_OK


COMMANDS = {"extract": cmd_extract, "run": cmd_run, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigurationError, SchemaError, EmptyInputError, ResampleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrajtaxError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
