"""Wrapper feature selection: forward, backward and taxonomy-combination search.

All three score candidates by mean stratified-CV weighted F1 on the data
they are given (callers pass the outer training portion only) and count
every model fit they perform.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from trajtax.cv import CvProtocol, FitCounter, cv_score, stratified_kfold
from trajtax.errors import ConfigurationError, DegenerateDataError, UndefinedMeritError
from trajtax.features import FeatureMatrix
from trajtax.models.api import ClassifierSpec
from trajtax.taxonomy import Taxonomy, columns_for

DEFAULT_TOLERANCE = 1e-4
METHODS = ("forward", "backward", "taxonomy")


@dataclass
class SelectionOutcome:
    method: str
    chosen_columns: tuple[int, ...]
    column_names: tuple[str, ...]
    best_score: float
    candidate_scores: dict[str, float]
    fit_count: int
    wall_time: float = field(default=0.0, compare=False)
    chosen_leaves: tuple[str, ...] | None = None
    chosen_label: str | None = None
    history: list[dict] = field(default_factory=list)

    def to_dict(self, timing: bool = True) -> dict:
        doc = {
            "method": self.method,
            "chosen_columns": list(self.chosen_columns),
            "column_names": list(self.column_names),
            "chosen_leaves": list(self.chosen_leaves) if self.chosen_leaves is not None else None,
            "chosen_label": self.chosen_label,
            "best_score": self.best_score,
            "candidate_scores": dict(self.candidate_scores),
            "fit_count": self.fit_count,
            "history": self.history,
        }
        if timing:
            doc["wall_time"] = self.wall_time
        return doc


def _prepare(data: FeatureMatrix, protocol: CvProtocol):
    X = np.asarray(data.values, dtype=float)
    if np.isnan(X).any():
        raise ValueError("selection needs an imputed feature matrix (NaN found)")
    y = np.asarray(data.labels)
    if np.unique(y).size < 2:
        raise DegenerateDataError("selection needs at least two classes")
    folds = stratified_kfold(y, protocol.folds, protocol.seeds[0])
    return X, y, folds


def forward_select(model: ClassifierSpec, data: FeatureMatrix, protocol: CvProtocol,
                   tolerance: float = DEFAULT_TOLERANCE) -> SelectionOutcome:
    """Greedy forward selection starting from the empty set.

    Each round adds the column whose addition scores best (lowest index on
    ties). The first round always adds; later rounds stop once the gain is
    below ``tolerance``.
    """
    start = time.perf_counter()
    X, y, folds = _prepare(data, protocol)
    counter = FitCounter()
    selected: list[int] = []
    remaining = list(range(X.shape[1]))
    current = -math.inf
    candidate_scores: dict[str, float] = {}
    history = []
    round_no = 0
    while remaining:
        round_no += 1
        best_col, best = -1, -math.inf
        for c in remaining:
            cols = sorted(selected + [c])
            score = cv_score(model, X[:, cols], y, folds, counter)
            candidate_scores[f"{round_no}:+{data.columns[c]}"] = score
            if score > best:
                best_col, best = c, score
        if best - current < tolerance:
            history.append({"round": round_no, "column": None, "score": best, "stopped": True})
            break
        selected.append(best_col)
        remaining.remove(best_col)
        current = best
        history.append({"round": round_no, "column": data.columns[best_col], "score": best})
    chosen = tuple(sorted(selected))
    return SelectionOutcome(
        method="forward",
        chosen_columns=chosen,
        column_names=tuple(data.columns[c] for c in chosen),
        best_score=current,
        candidate_scores=candidate_scores,
        fit_count=counter.count,
        wall_time=time.perf_counter() - start,
        history=history,
    )


def backward_select(model: ClassifierSpec, data: FeatureMatrix, protocol: CvProtocol,
                    tolerance: float = DEFAULT_TOLERANCE) -> SelectionOutcome:
    """Greedy backward elimination starting from every column.

    Each round drops the column whose removal scores best (lowest index on
    ties) while the change in score is at least ``tolerance``; at least one
    column is always kept.
    """
    start = time.perf_counter()
    X, y, folds = _prepare(data, protocol)
    counter = FitCounter()
    selected = list(range(X.shape[1]))
    current = cv_score(model, X, y, folds, counter)
    candidate_scores: dict[str, float] = {"0:all": current}
    history = [{"round": 0, "column": None, "score": current}]
    round_no = 0
    while len(selected) > 1:
        round_no += 1
        best_col, best = -1, -math.inf
        for c in selected:
            cols = [k for k in selected if k != c]
            score = cv_score(model, X[:, cols], y, folds, counter)
            candidate_scores[f"{round_no}:-{data.columns[c]}"] = score
            if score > best:
                best_col, best = c, score
        if best - current < tolerance:
            history.append({"round": round_no, "column": None, "score": best, "stopped": True,
                            "best_candidate": data.columns[best_col]})
            break
        selected.remove(best_col)
        current = best
        history.append({"round": round_no, "column": data.columns[best_col], "score": best})
    chosen = tuple(selected)
    return SelectionOutcome(
        method="backward",
        chosen_columns=chosen,
        column_names=tuple(data.columns[c] for c in chosen),
        best_score=current,
        candidate_scores=candidate_scores,
        fit_count=counter.count,
        wall_time=time.perf_counter() - start,
        history=history,
    )


def taxonomy_select(model: ClassifierSpec, data: FeatureMatrix, tax: Taxonomy,
                    protocol: CvProtocol) -> SelectionOutcome:
    """Score every non-empty union of taxonomy leaves; keep the best.

    Ties go to the combination with fewer columns, then to enumeration order.
    """
    start = time.perf_counter()
    X, y, folds = _prepare(data, protocol)
    counter = FitCounter()
    best = None
    candidate_scores: dict[str, float] = {}
    for combo in tax.enumerate_combinations():
        cols = columns_for(combo, data)
        if not cols:
            raise ConfigurationError(f"combination {combo.label} matches no feature columns")
        score = cv_score(model, X[:, cols], y, folds, counter)
        candidate_scores[combo.label] = score
        if best is None or score > best[0] or (score == best[0] and len(cols) < len(best[2])):
            best = (score, combo, cols)
    score, combo, cols = best
    return SelectionOutcome(
        method="taxonomy",
        chosen_columns=tuple(cols),
        column_names=tuple(data.columns[c] for c in cols),
        best_score=score,
        candidate_scores=candidate_scores,
        fit_count=counter.count,
        wall_time=time.perf_counter() - start,
        chosen_leaves=combo.names,
        chosen_label=combo.label,
    )


def select(method: str, model: ClassifierSpec, data: FeatureMatrix, protocol: CvProtocol,
           tax: Taxonomy | None = None, tolerance: float = DEFAULT_TOLERANCE) -> SelectionOutcome:
    if method == "forward":
        return forward_select(model, data, protocol, tolerance)
    if method == "backward":
        return backward_select(model, data, protocol, tolerance)
    if method == "taxonomy":
        if tax is None:
            raise ConfigurationError("taxonomy selection needs a taxonomy")
        return taxonomy_select(model, data, tax, protocol)
    raise ConfigurationError(f"unknown selection method {method!r}; expected one of {METHODS}")


# -- CFS merit ----------------------------------------------------------


@dataclass(frozen=True)
class MeritInputs:
    k: int
    r_cf_bar: float
    r_ff_bar: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for r in (self.r_cf_bar, self.r_ff_bar):
            if not -1.0 <= r <= 1.0:
                raise ValueError(f"correlation {r} outside [-1, 1]")


def cfs_merit(m: MeritInputs) -> float:
    """Correlation-based subset merit: ``k*r_cf / sqrt(k + k(k-1)*r_ff)``."""
    denom = m.k + m.k * (m.k - 1) * m.r_ff_bar
    if denom <= 0:
        raise UndefinedMeritError(f"non-positive merit denominator {denom}")
    return m.k * m.r_cf_bar / math.sqrt(denom)


def merit_inputs(X: np.ndarray, y: Sequence, columns: Sequence[int]) -> MeritInputs:
    """Average absolute Pearson correlations for a column subset.

    Feature-class correlation is taken against each one-hot class indicator
    and averaged; constant columns contribute zero correlation.
    """
    X = np.asarray(X, dtype=float)[:, list(columns)]
    y = np.asarray([str(v) for v in y])
    indicators = (y[:, None] == np.unique(y)[None, :]).astype(float)

    def corr(a, b):
        sa, sb = a.std(), b.std()
        if sa == 0 or sb == 0:
            return 0.0
        return float(np.clip(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb), -1, 1))

    k = X.shape[1]
    r_cf = np.mean([abs(corr(X[:, i], indicators[:, j])) for i in range(k) for j in range(indicators.shape[1])])
    pairs = [abs(corr(X[:, i], X[:, j])) for i in range(k) for j in range(i + 1, k)]
    r_ff = float(np.mean(pairs)) if pairs else 0.0
    return MeritInputs(k, float(r_cf), r_ff)
