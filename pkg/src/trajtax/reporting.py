"""Median tables, best taxonomy combinations, leaf frequencies and box plots."""

from __future__ import annotations

import csv
import logging
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from trajtax.evaluation import IterationResult, median_summary
from trajtax.models.api import FAMILIES
from trajtax.selection import METHODS
from trajtax.taxonomy import Taxonomy, default_taxonomy

logger = logging.getLogger(__name__)

FAMILY_TITLES = {
    "logistic_regression": "Logistic Regression",
    "random_forest": "Random Forest",
    "gradient_boosted_trees": "Gradient Boosted Trees",
    "mlp": "MLP",
}


def _tuned_name(tuned: bool) -> str:
    return "tuned" if tuned else "non_tuned"


# -- best sets and frequencies -----------------------------------------


@dataclass(frozen=True)
class BestSet:
    label: str
    leaves: tuple[str, ...]
    median_score: float


def best_feature_sets(results: Iterable[IterationResult], taxonomy: Taxonomy | None = None) -> dict[tuple[str, bool], BestSet]:
    """Per (family, tuned): the leaf combination with the highest median score.

    Scores are the per-iteration selection scores recorded for every
    combination by the taxonomy method. Ties go to fewer leaves, then to
    enumeration order.
    """
    taxonomy = taxonomy or default_taxonomy()
    order = {c.label: i for i, c in enumerate(taxonomy.enumerate_combinations())}
    per_cell: dict[tuple[str, bool], dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in results:
        if r.method != "taxonomy" or not r.ok or not r.candidate_scores:
            continue
        for label, score in r.candidate_scores.items():
            per_cell[(r.family, r.tuned)][label].append(score)
    out = {}
    for cell in sorted(per_cell):
        medians = {label: float(np.median(v)) for label, v in per_cell[cell].items()}
        best = max(medians, key=lambda lab: (medians[lab], -len(lab.split("+")), -order.get(lab, len(order))))
        out[cell] = BestSet(best, taxonomy.combination_from_label(best).names, medians[best])
    return out


def frequency_analysis(best_sets: Mapping[tuple[str, bool], BestSet | Sequence[str]],
                       taxonomy: Taxonomy | None = None) -> dict[str, int]:
    """How many cells include each leaf in their best combination."""
    taxonomy = taxonomy or default_taxonomy()
    counts = {leaf.name: 0 for leaf in taxonomy.leaves}
    for best in best_sets.values():
        leaves = best.leaves if isinstance(best, BestSet) else tuple(best)
        for leaf in leaves:
            counts[leaf] = counts.get(leaf, 0) + 1
    return counts


# -- box plots ----------------------------------------------------------


def box_stats(values: Sequence[float]) -> dict:
    """Five-number summary with 1.5*IQR whiskers (linear-interpolation quartiles)."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("box needs at least one value")
    q1, med, q3 = (float(q) for q in np.quantile(v, (0.25, 0.5, 0.75)))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "n": int(v.size),
        "whisker_low": float(inside.min()),
        "q1": q1,
        "median": med,
        "q3": q3,
        "whisker_high": float(inside.max()),
        "outliers": [float(x) for x in v[(v < lo_fence) | (v > hi_fence)]],
    }


@dataclass
class BoxplotDocument:
    svg: str
    rows: list[dict]


def _group_name(key: tuple) -> str:
    parts = []
    for k in key:
        if isinstance(k, bool):
            parts.append(_tuned_name(k))
        else:
            parts.append(str(k))
    return "/".join(parts)


def emit_boxplot(results: Iterable[IterationResult], group_keys: Sequence[str] = ("method", "tuned"),
                 title: str = "", value: str = "weighted_f1") -> BoxplotDocument:
    """Box per group of results; returns an SVG document and its summary rows."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    seen: list[tuple] = []
    for r in results:
        key = tuple(getattr(r, k) for k in group_keys)
        if key not in groups:
            seen.append(key)
        v = getattr(r, value)
        if r.ok and v is not None:
            groups[key].append(v)
        else:
            groups.setdefault(key, [])
    rows = []
    for key in seen:
        if not groups[key]:
            logger.warning("box group %s has no values; omitted", _group_name(key))
            continue
        rows.append({"group": _group_name(key), **dict(zip(group_keys, key)), **box_stats(groups[key])})
    return BoxplotDocument(svg=_render_svg(rows, title), rows=rows)


def _render_svg(rows: list[dict], title: str) -> str:
    width = max(200, 90 * len(rows) + 80)
    height = 320
    top, bottom, left = 40, 260, 60
    lo = min([0.0] + [min([r["whisker_low"], *r["outliers"]]) for r in rows])
    hi = max([1.0] + [max([r["whisker_high"], *r["outliers"]]) for r in rows])

    def y(v: float) -> float:
        return round(bottom - (v - lo) / (hi - lo) * (bottom - top), 3)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for tick in np.linspace(lo, hi, 6):
        out.append(f'<text x="{left - 6}" y="{y(tick) + 4}" text-anchor="end" font-family="sans-serif" font-size="10">{tick:.2f}</text>')
    for i, r in enumerate(rows):
        cx = left + 50 + 90 * i
        attrs = " ".join(
            f'data-{k.replace("_", "-")}="{r[k]!r}"' for k in ("n", "whisker_low", "q1", "median", "q3", "whisker_high")
        )
        outliers = ",".join(repr(v) for v in r["outliers"])
        out.append(f'<g class="box" data-group="{escape(r["group"])}" {attrs} data-outliers="{outliers}">')
        out.append(f'<line x1="{cx}" y1="{y(r["whisker_low"])}" x2="{cx}" y2="{y(r["q1"])}" stroke="black"/>')
        out.append(f'<line x1="{cx}" y1="{y(r["q3"])}" x2="{cx}" y2="{y(r["whisker_high"])}" stroke="black"/>')
        for w in (r["whisker_low"], r["whisker_high"]):
            out.append(f'<line x1="{cx - 12}" y1="{y(w)}" x2="{cx + 12}" y2="{y(w)}" stroke="black"/>')
        out.append(f'<rect x="{cx - 25}" y="{y(r["q3"])}" width="50" height="{round(y(r["q1"]) - y(r["q3"]), 3)}" fill="#9ecae1" stroke="black"/>')
        out.append(f'<line x1="{cx - 25}" y1="{y(r["median"])}" x2="{cx + 25}" y2="{y(r["median"])}" stroke="#d62728" stroke-width="2"/>')
        for v in r["outliers"]:
            out.append(f'<circle class="outlier" cx="{cx}" cy="{y(v)}" r="3" fill="none" stroke="black"/>')
        out.append(f'<text x="{cx}" y="{bottom + 16}" text-anchor="middle" font-family="sans-serif" font-size="10">{escape(r["group"])}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- artifact writers -----------------------------------------------------


def median_table_rows(results: Sequence[IterationResult]) -> list[dict]:
    """One row per (dataset, family) with a column per method and tuning branch."""
    rows = []
    for dataset in sorted({r.dataset for r in results}):
        medians = median_summary(r for r in results if r.dataset == dataset)
        families = [f for f in FAMILIES if any(cell[0] == f for cell in medians)]
        for family in families:
            row = {"dataset": dataset, "model": family}
            for method in METHODS:
                for tuned in (False, True):
                    row[f"{method}_{_tuned_name(tuned)}"] = medians.get((family, method, tuned))
            rows.append(row)
    return rows


def format_median_table(results: Sequence[IterationResult]) -> str:
    rows = median_table_rows(results)
    cols = [f"{m}_{_tuned_name(t)}" for m in METHODS for t in (False, True)]
    header = f"{'dataset':<14}{'model':<24}" + "".join(f"{c:>22}" for c in cols)
    lines = [header]
    for r in rows:
        cells = "".join(f"{'-' if r[c] is None else format(r[c], '.4f'):>22}" for c in cols)
        lines.append(f"{r['dataset']:<14}{r['model']:<24}{cells}")
    return "\n".join(lines)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def write_reports(results: Sequence[IterationResult], out_dir, taxonomy: Taxonomy | None = None) -> list[str]:
    """Write every report artifact for ``results`` into ``out_dir``; returns the paths."""
    taxonomy = taxonomy or default_taxonomy()
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    rows = median_table_rows(results)
    cols = ["dataset", "model"] + [f"{m}_{_tuned_name(t)}" for m in METHODS for t in (False, True)]
    with open(path("summary_medians.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])

    datasets = sorted({r.dataset for r in results})
    with open(path("best_feature_sets.csv"), "w", newline="", encoding="utf-8") as fb, \
            open(path("frequency.csv"), "w", newline="", encoding="utf-8") as ff:
        wb = csv.writer(fb, lineterminator="\n")
        wf = csv.writer(ff, lineterminator="\n")
        wb.writerow(["dataset", "model", "tuned", "combination", "leaves", "median_score"])
        wf.writerow(["dataset", "leaf", "parent", "count"])
        for dataset in datasets:
            best = best_feature_sets([r for r in results if r.dataset == dataset], taxonomy)
            for (family, tuned), b in sorted(best.items(), key=lambda kv: (FAMILIES.index(kv[0][0]), kv[0][1])):
                wb.writerow([dataset, family, _tuned_name(tuned), b.label, "+".join(b.leaves), _fmt(b.median_score)])
            if best:
                for leaf, count in frequency_analysis(best, taxonomy).items():
                    wf.writerow([dataset, leaf, taxonomy.leaf(leaf).parent, count])

    stat_cols = ["dataset", "model", "method", "tuned", "n", "whisker_low", "q1", "median", "q3", "whisker_high", "outliers"]
    with open(path("boxplot_stats.csv"), "w", newline="", encoding="utf-8") as fs:
        ws = csv.writer(fs, lineterminator="\n")
        ws.writerow(stat_cols)
        for dataset in datasets:
            for family in FAMILIES:
                subset = [r for r in results if r.dataset == dataset and r.family == family]
                if not subset:
                    continue
                doc = emit_boxplot(subset, ("method", "tuned"), title=f"{dataset}: {FAMILY_TITLES[family]}")
                with open(path(f"boxplot_{dataset}_{family}.svg"), "w", encoding="utf-8") as fh:
                    fh.write(doc.svg)
                for row in doc.rows:
                    ws.writerow([dataset, family, row["method"], _tuned_name(row["tuned"]), row["n"],
                                 repr(row["whisker_low"]), repr(row["q1"]), repr(row["median"]), repr(row["q3"]),
                                 repr(row["whisker_high"]), ";".join(repr(v) for v in row["outliers"])])
    return written
