"""Labeled datasets, splits, and macro-averaged evaluation metrics.

Every metric is macro-averaged over the two classes of each binary activity
problem, then averaged (unweighted) over the eight activities. Empty
denominators count as zero so reported scores are worst-case.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field, replace

from .labels import TAXONOMY_ORDER, ActivityLabel, sort_labels
from .pipeline import ClassificationTable, PipelineConfig, classify_record


class EvalError(Exception):
    pass


class DegenerateSplit(EvalError):
    """A split left one side empty."""


class LengthMismatch(EvalError):
    """Prediction and gold sequences differ in length."""


@dataclass(frozen=True)
class CellRecord:
    source: str
    output_types: tuple[str, ...]
    output_text: str
    labels: frozenset[ActivityLabel]
    notebook_id: str


@dataclass(frozen=True)
class LabeledCellDataset:
    name: str
    records: tuple[CellRecord, ...]

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for rec in self.records:
            doc = [rec.source, list(rec.output_types), rec.output_text,
                   [lab.value for lab in sort_labels(rec.labels)], rec.notebook_id]
            digest.update(json.dumps(doc, ensure_ascii=False).encode("utf-8"))
            digest.update(b"\x00")
        return digest.hexdigest()

    def notebook_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for rec in self.records:
            seen.setdefault(rec.notebook_id, None)
        return list(seen)


def _record_to_doc(rec: CellRecord) -> dict:
    return {
        "source": rec.source,
        "output_types": list(rec.output_types),
        "output_text": rec.output_text,
        "labels": [lab.value for lab in sort_labels(rec.labels)],
        "notebook_id": rec.notebook_id,
    }


def _record_from_doc(doc: dict) -> CellRecord:
    return CellRecord(
        source=doc["source"],
        output_types=tuple(doc.get("output_types", [])),
        output_text=doc.get("output_text", ""),
        labels=frozenset(ActivityLabel.from_text(t) for t in doc.get("labels", [])),
        notebook_id=str(doc.get("notebook_id", "")),
    )


def dataset_to_json(ds: LabeledCellDataset) -> str:
    return json.dumps([_record_to_doc(rec) for rec in ds.records],
                      ensure_ascii=False, indent=1)


def dataset_from_json(text: str, name: str = "dataset") -> LabeledCellDataset:
    doc = json.loads(text)
    if not isinstance(doc, list):
        raise EvalError("labeled dataset JSON must be a top-level array of records")
    return LabeledCellDataset(name=name, records=tuple(_record_from_doc(d) for d in doc))


def load_dataset(path) -> LabeledCellDataset:
    with open(path, encoding="utf-8") as fh:
        return dataset_from_json(fh.read(), name=str(path))


def save_dataset(ds: LabeledCellDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dataset_to_json(ds))
        fh.write("\n")


# --- splitting and cleanup ----------------------------------------------

UNIT_CELL = "cell"
UNIT_NOTEBOOK = "notebook"


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    unit: str = UNIT_NOTEBOOK

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.unit not in (UNIT_CELL, UNIT_NOTEBOOK):
            raise ValueError(f"unknown split unit: {self.unit!r}")


def split(ds: LabeledCellDataset, spec: SplitSpec):
    """Seeded, disjoint, exhaustive partition. unit=notebook keeps all cells
    of a notebook on one side so no content leaks across the split."""
    if not ds.records:
        raise DegenerateSplit("dataset is empty")
    rng = random.Random(spec.seed)
    if spec.unit == UNIT_NOTEBOOK:
        ids = sorted(set(ds.notebook_ids()))
        rng.shuffle(ids)
        k = int(len(ids) * spec.train_fraction)
        if k == 0 or k == len(ids):
            raise DegenerateSplit(f"{len(ids)} notebooks cannot be split {spec.train_fraction:.0%}")
        train_ids = set(ids[:k])
        train = [rec for rec in ds.records if rec.notebook_id in train_ids]
        val = [rec for rec in ds.records if rec.notebook_id not in train_ids]
    else:
        order = list(range(len(ds.records)))
        rng.shuffle(order)
        k = int(len(order) * spec.train_fraction)
        if k == 0 or k == len(order):
            raise DegenerateSplit(f"{len(order)} records cannot be split {spec.train_fraction:.0%}")
        chosen = set(order[:k])
        train = [rec for i, rec in enumerate(ds.records) if i in chosen]
        val = [rec for i, rec in enumerate(ds.records) if i not in chosen]
    if not train or not val:
        raise DegenerateSplit("one side of the split is empty")
    return (
        replace(ds, name=f"{ds.name}/train", records=tuple(train)),
        replace(ds, name=f"{ds.name}/val", records=tuple(val)),
    )


def _normalized(source: str) -> str:
    return " ".join(source.split())


def dedupe(ds: LabeledCellDataset) -> LabeledCellDataset:
    """Drop records whose whitespace-collapsed source already occurred."""
    seen: set[str] = set()
    kept = []
    for rec in ds.records:
        key = _normalized(rec.source)
        if key in seen:
            continue
        seen.add(key)
        kept.append(rec)
    return replace(ds, records=tuple(kept))


# Cells talking to the Kaggle learn environment are excluded from scoring.
DEFAULT_BLOCKLIST = (
    r"\bq\d+\.(?:hint|check|solution)\s*\(",
    r"\bs\d+\.(?:step|check)\s*\(",
)


def apply_blocklist(ds: LabeledCellDataset, patterns=DEFAULT_BLOCKLIST) -> LabeledCellDataset:
    compiled = [re.compile(p) for p in patterns]
    kept = tuple(rec for rec in ds.records
                 if not any(rx.search(rec.source) for rx in compiled))
    return replace(ds, records=kept)


# --- distribution and metrics --------------------------------------------

def label_distribution(ds: LabeledCellDataset) -> dict[str, float]:
    """Per-notebook fraction of cells carrying each label, averaged over
    notebooks, in percent; plus the share of unlabeled cells."""
    by_notebook: dict[str, list[CellRecord]] = {}
    for rec in ds.records:
        by_notebook.setdefault(rec.notebook_id, []).append(rec)
    out: dict[str, float] = {}
    n_nb = len(by_notebook)
    for label in TAXONOMY_ORDER:
        if n_nb == 0:
            out[label.value] = 0.0
            continue
        total = 0.0
        for recs in by_notebook.values():
            total += 100.0 * sum(1 for r in recs if label in r.labels) / len(recs)
        out[label.value] = total / n_nb
    if n_nb == 0:
        out["not_labeled"] = 0.0
    else:
        total = 0.0
        for recs in by_notebook.values():
            total += 100.0 * sum(1 for r in recs if not r.labels) / len(recs)
        out["not_labeled"] = total / n_nb
    return out


def confusion(pred, gold, activity: ActivityLabel):
    """Binary confusion counts (tp, fp, tn, fn) for one activity's membership
    across aligned prediction/gold label-set sequences."""
    pred = list(pred)
    gold = list(gold)
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(gold)} gold sets")
    tp = fp = tn = fn = 0
    for p, g in zip(pred, gold):
        hit = activity in p
        truth = activity in g
        if hit and truth:
            tp += 1
        elif hit and not truth:
            fp += 1
        elif not hit and not truth:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    return _ratio(2.0 * precision * recall, precision + recall)


@dataclass(frozen=True)
class ActivityMetrics:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    pos_precision: float
    pos_recall: float
    pos_f1: float

    COLUMNS = ("accuracy", "macro_precision", "macro_recall", "macro_f1",
               "pos_precision", "pos_recall", "pos_f1")


@dataclass(frozen=True)
class MetricsReport:
    per_activity: dict[ActivityLabel, ActivityMetrics]
    overall: ActivityMetrics


def activity_metrics(tp: int, fp: int, tn: int, fn: int) -> ActivityMetrics:
    total = tp + fp + tn + fn
    pos_precision = _ratio(tp, tp + fp)
    pos_recall = _ratio(tp, tp + fn)
    neg_precision = _ratio(tn, tn + fn)
    neg_recall = _ratio(tn, tn + fp)
    pos_f1 = _f1(pos_precision, pos_recall)
    neg_f1 = _f1(neg_precision, neg_recall)
    return ActivityMetrics(
        accuracy=_ratio(tp + tn, total),
        macro_precision=(pos_precision + neg_precision) / 2.0,
        macro_recall=(pos_recall + neg_recall) / 2.0,
        macro_f1=(pos_f1 + neg_f1) / 2.0,
        pos_precision=pos_precision,
        pos_recall=pos_recall,
        pos_f1=pos_f1,
    )


def metrics(conf_by_activity: dict[ActivityLabel, tuple]) -> MetricsReport:
    per_activity = {}
    for label in TAXONOMY_ORDER:
        tp, fp, tn, fn = conf_by_activity[label]
        if min(tp, fp, tn, fn) < 0:
            raise ValueError("confusion counts must be non-negative")
        per_activity[label] = activity_metrics(tp, fp, tn, fn)
    n = len(per_activity)
    overall = ActivityMetrics(*(
        sum(getattr(m, col) for m in per_activity.values()) / n
        for col in ActivityMetrics.COLUMNS
    ))
    return MetricsReport(per_activity=per_activity, overall=overall)


def score_predictions(pred, gold) -> MetricsReport:
    conf = {label: confusion(pred, gold, label) for label in TAXONOMY_ORDER}
    return metrics(conf)


# --- running the pipeline over a dataset ----------------------------------

@dataclass(frozen=True)
class EvalRun:
    report: MetricsReport
    predictions: tuple[frozenset[ActivityLabel], ...]
    gold: tuple[frozenset[ActivityLabel], ...]
    table: ClassificationTable
    dataset: LabeledCellDataset  # after dedupe/blocklist


def evaluate_dataset(ds: LabeledCellDataset, models, cfg: PipelineConfig = PipelineConfig(),
                     *, drop_duplicates: bool = True, blocklist=DEFAULT_BLOCKLIST) -> EvalRun:
    """Label every record with the pipeline and score against gold labels.
    Duplicated cells and Kaggle-interface cells are excluded first."""
    cleaned = dedupe(ds) if drop_duplicates else ds
    if blocklist:
        cleaned = apply_blocklist(cleaned, blocklist)
    rows = [
        classify_record(rec.source, rec.output_types, rec.output_text,
                        models, cfg, stable_index=i)
        for i, rec in enumerate(cleaned.records)
    ]
    predictions = tuple(frozenset(row.labels) for row in rows)
    gold = tuple(rec.labels for rec in cleaned.records)
    return EvalRun(
        report=score_predictions(predictions, gold),
        predictions=predictions,
        gold=gold,
        table=ClassificationTable(rows=tuple(rows)),
        dataset=cleaned,
    )


# --- rendering ------------------------------------------------------------

def render_metrics_table(report: MetricsReport) -> str:
    headers = ("Activity", "Accuracy", "Macro P", "Macro R", "Macro F1",
               "Pos P", "Pos R", "Pos F1")
    rows = []
    for label in TAXONOMY_ORDER:
        m = report.per_activity[label]
        rows.append((label.value,) + tuple(
            f"{getattr(m, col):.4f}" for col in ActivityMetrics.COLUMNS))
    rows.append(("average",) + tuple(
        f"{getattr(report.overall, col):.4f}" for col in ActivityMetrics.COLUMNS))
    widths = [max(len(str(r[i])) for r in rows + [headers]) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def report_to_json(report: MetricsReport) -> str:
    doc = {
        "per_activity": {
            label.value: {col: getattr(report.per_activity[label], col)
                          for col in ActivityMetrics.COLUMNS}
            for label in TAXONOMY_ORDER
        },
        "overall": {col: getattr(report.overall, col) for col in ActivityMetrics.COLUMNS},
    }
    return json.dumps(doc, ensure_ascii=False, indent=1)
