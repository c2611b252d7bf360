"""Seeded, stratified comparison of selection methods across model families."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from trajtax.cv import PI_SEEDS, CvProtocol, FitCounter, complement, stratified_kfold
from trajtax.errors import TrajtaxError
from trajtax.features import FeatureMatrix, ScaleState, impute_fit_transform
from trajtax.metrics import ConfusionCounts, f1_scores
from trajtax.models.api import FAMILIES, ClassifierSpec, TrainedModel, predict, train
from trajtax.models.grid import HyperGrid, default_grids, grid_candidates, grid_search
from trajtax.selection import DEFAULT_TOLERANCE, METHODS, select
from trajtax.taxonomy import Taxonomy, default_taxonomy

logger = logging.getLogger(__name__)

__all__ = [
    "PI_SEEDS",
    "CvProtocol",
    "ExperimentError",
    "IterationResult",
    "median_summary",
    "plan_experiment",
    "read_results",
    "run_experiment",
    "run_iteration",
    "stratified_kfold",
    "write_results",
]


class ExperimentError(TrajtaxError):
    """An iteration failed; the message carries its (seed, fold, method, family)."""


@dataclass
class IterationResult:
    dataset: str
    seed: int
    fold: int
    method: str
    family: str
    tuned: bool
    weighted_f1: float | None
    macro_f1: float | None
    micro_f1: float | None
    chosen_columns: list[str] = field(default_factory=list)
    chosen_label: str | None = None
    chosen_leaves: list[str] | None = None
    selection_score: float | None = None
    candidate_scores: dict[str, float] | None = None
    hyperparameters: dict | None = None
    fit_count: int = 0
    selection_fit_count: int = 0
    tuning_fit_count: int = 0
    durations: dict[str, float] = field(default_factory=dict, compare=False)
    error: str | None = None

    @property
    def cell(self) -> tuple[str, str, bool]:
        return (self.family, self.method, self.tuned)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self, timing: bool = False) -> dict:
        doc = asdict(self)
        if not timing:
            doc.pop("durations")
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "IterationResult":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in doc.items() if k in known})


def _order_key(r: IterationResult, seeds: Sequence[int], methods: Sequence[str], families: Sequence[str]):
    seed_pos = seeds.index(r.seed) if r.seed in seeds else len(seeds)
    return (seed_pos, r.fold, methods.index(r.method), families.index(r.family), r.tuned)


def run_iteration(
    data: FeatureMatrix,
    test_idx: np.ndarray,
    *,
    seed: int,
    fold: int,
    method: str,
    family: str,
    tuned: bool,
    folds: int = 5,
    taxonomy: Taxonomy | None = None,
    grids: HyperGrid | None = None,
    hyperparameters: Mapping[str, Mapping] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    dataset: str = "dataset",
) -> tuple[IterationResult, TrainedModel]:
    """One outer fold: impute, select, optionally tune, scale, train, score.

    Every statistic (imputation means, selection, tuning, scaling) comes from
    the training portion only.
    """
    taxonomy = taxonomy or default_taxonomy()
    grids = grids if grids is not None else default_grids()
    train_idx = complement(len(data), test_idx)
    train_m, test_m, _ = impute_fit_transform(data.take_rows(train_idx), data.take_rows(test_idx))
    inner = CvProtocol(seeds=(seed,), folds=folds)
    base = ClassifierSpec.default(family, seed=seed, **dict((hyperparameters or {}).get(family, {})))

    t0 = time.perf_counter()
    outcome = select(method, base, train_m, inner, taxonomy, tolerance)
    t1 = time.perf_counter()

    cols = list(outcome.chosen_columns)
    X_train, X_test = train_m.values[:, cols], test_m.values[:, cols]
    y_train, y_test = list(train_m.labels), list(test_m.labels)
    tuning = FitCounter()
    spec = grid_search(family, grids, X_train, y_train, inner, seed=seed, counter=tuning) if tuned else base
    t2 = time.perf_counter()

    scaler = ScaleState.fit(X_train)
    model = train(spec, scaler.transform(X_train), y_train)
    pred = predict(model, scaler.transform(X_test))
    macro, micro, weighted = f1_scores(ConfusionCounts.from_predictions(y_test, pred))
    t3 = time.perf_counter()

    result = IterationResult(
        dataset=dataset,
        seed=seed,
        fold=fold,
        method=method,
        family=family,
        tuned=tuned,
        weighted_f1=weighted,
        macro_f1=macro,
        micro_f1=micro,
        chosen_columns=list(outcome.column_names),
        chosen_label=outcome.chosen_label,
        chosen_leaves=list(outcome.chosen_leaves) if outcome.chosen_leaves is not None else None,
        selection_score=outcome.best_score,
        candidate_scores=dict(outcome.candidate_scores) if method == "taxonomy" else None,
        hyperparameters=spec.to_dict()["hyperparameters"],
        fit_count=outcome.fit_count + tuning.count + 1,
        selection_fit_count=outcome.fit_count,
        tuning_fit_count=tuning.count,
        durations={"selection": t1 - t0, "tuning": t2 - t1, "final": t3 - t2},
    )
    return result, model


def _run_task(task: dict) -> IterationResult:
    on_error = task.pop("on_error")
    data = task.pop("data")
    test_idx = task.pop("test_idx")
    try:
        result, _ = run_iteration(data, test_idx, **task)
        return result
    except Exception as exc:  # noqa: BLE001 - recorded or re-raised with context below
        context = f"seed={task['seed']} fold={task['fold']} method={task['method']} family={task['family']} tuned={task['tuned']}"
        if on_error == "raise":
            raise ExperimentError(f"{context}: {exc}") from exc
        logger.error("iteration failed (%s): %s", context, exc)
        return IterationResult(
            dataset=task["dataset"], seed=task["seed"], fold=task["fold"], method=task["method"],
            family=task["family"], tuned=task["tuned"], weighted_f1=None, macro_f1=None, micro_f1=None,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_experiment(
    data: FeatureMatrix,
    methods: Sequence[str] = METHODS,
    families: Sequence[str] = FAMILIES,
    protocol: CvProtocol | None = None,
    grids: HyperGrid | None = None,
    *,
    taxonomy: Taxonomy | None = None,
    hyperparameters: Mapping[str, Mapping] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    dataset: str = "dataset",
    n_jobs: int = 1,
    on_error: str = "raise",
) -> list[IterationResult]:
    """Run every (seed, fold, method, family, tuned) iteration.

    Results come back ordered by seed, fold, method, family and tuned flag
    regardless of ``n_jobs``.
    """
    protocol = protocol or CvProtocol()
    methods, families = list(methods), list(families)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    for f in families:
        if f not in FAMILIES:
            raise ValueError(f"unknown family {f!r}")
    tasks = []
    for seed in protocol.seeds:
        for fold, test_idx in enumerate(stratified_kfold(data.labels, protocol.folds, seed)):
            for method in methods:
                for family in families:
                    for tuned in protocol.tuned:
                        tasks.append(dict(
                            data=data, test_idx=test_idx, seed=seed, fold=fold, method=method,
                            family=family, tuned=tuned, folds=protocol.folds, taxonomy=taxonomy,
                            grids=grids, hyperparameters=hyperparameters, tolerance=tolerance,
                            dataset=dataset, on_error=on_error,
                        ))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        results = [_run_task(t) for t in tasks]
    results.sort(key=lambda r: _order_key(r, list(protocol.seeds), methods, families))
    return results


def plan_experiment(
    n_columns: int,
    methods: Sequence[str],
    families: Sequence[str],
    protocol: CvProtocol,
    grids: HyperGrid | None = None,
    taxonomy: Taxonomy | None = None,
) -> list[dict]:
    """Expected fit counts per cell, without running anything.

    Taxonomy search and grid search have exact counts; the greedy methods
    depend on when they stop, so they get a ``[min, max]`` range.
    """
    taxonomy = taxonomy or default_taxonomy()
    grids = grids if grids is not None else default_grids()
    k, d = protocol.folds, n_columns
    n_combos = len(taxonomy.enumerate_combinations())
    selection = {
        "taxonomy": (n_combos * k, n_combos * k),
        "forward": ((d + max(d - 1, 0)) * k, k * d * (d + 1) // 2),
        "backward": (k + (d * k if d > 1 else 0), k * d * (d + 1) // 2),
    }
    plan = []
    for method in methods:
        for family in families:
            for tuned in protocol.tuned:
                n_cand = len(grid_candidates(family, grids)) if tuned else 0
                tuning = n_cand * k if n_cand > 1 else 0
                lo, hi = selection[method]
                per_iter = (lo + tuning + 1, hi + tuning + 1)
                plan.append({
                    "method": method, "family": family, "tuned": tuned,
                    "iterations": protocol.iterations,
                    "fits_per_iteration": list(per_iter),
                    "fits_total": [per_iter[0] * protocol.iterations, per_iter[1] * protocol.iterations],
                    "exact": lo == hi,
                })
    return plan


def median_summary(results: Iterable[IterationResult]) -> dict[tuple[str, str, bool], float]:
    """Median weighted F1 per (family, method, tuned); failed iterations are ignored."""
    cells: dict[tuple[str, str, bool], list[float]] = {}
    for r in results:
        if r.ok and r.weighted_f1 is not None:
            cells.setdefault(r.cell, []).append(r.weighted_f1)
    return {cell: float(np.median(v)) for cell, v in sorted(cells.items()) if v}


def write_results(results: Iterable[IterationResult], path, timings_path=None) -> None:
    """One JSON object per line; timings go to a separate file so reruns are byte-identical."""
    results = list(results)
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(timing=False), sort_keys=True, allow_nan=False, default=_json_default))
            fh.write("\n")
    if timings_path is not None:
        with open(timings_path, "w", encoding="utf-8") as fh:
            for r in results:
                key = {k: getattr(r, k) for k in ("seed", "fold", "method", "family", "tuned")}
                fh.write(json.dumps({**key, "durations": r.durations}, sort_keys=True) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def read_results(path) -> tuple[list[IterationResult], int]:
    """Parse a results file; returns the results and the number of skipped lines."""
    results, skipped = [], 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                results.append(IterationResult.from_dict(json.loads(line)))
            except (ValueError, TypeError) as exc:
                skipped += 1
                logger.warning("%s:%d: skipped unreadable result (%s)", path, lineno, exc)
    return results, skipped

