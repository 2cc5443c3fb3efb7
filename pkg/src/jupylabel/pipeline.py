"""The four-filter pipe: preprocess -> rules -> models -> post-process.

Rules are positive-only, so under per-activity routing every activity lacking
a rule positive is decided by its model; `cell_level` routing reproduces the
coarser behavior of skipping all models whenever any rule fired, for
ablation. The post-processor annotates notebooks with markdown headers or
cell tags and can strip its own annotations again.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .gbdt import ActivityModelSet, predict_proba
from .labels import TAXONOMY_ORDER, ActivityLabel, sort_labels
from .notebook import CODE, MARKDOWN, Cell, Notebook
from .preprocess import PreprocessedCell, preprocess_cell, preprocess_text
from .rules import RuleHit, classify_by_rules, rule_labels
from .vectorize import vectorize

ROUTING_PER_ACTIVITY = "per_activity"
ROUTING_CELL_LEVEL = "cell_level"

TAG_PREFIX = "jupylabel:"
GENERATOR_KEY = "jupylabel"

PROVENANCE_RULE = "rule"
PROVENANCE_MODEL = "model"


class TableMismatch(Exception):
    """The classification table does not describe this notebook."""


@dataclass(frozen=True)
class PipelineConfig:
    routing: str = ROUTING_PER_ACTIVITY
    use_rules: bool = True
    threshold: float = 0.5

    def __post_init__(self):
        if self.routing not in (ROUTING_PER_ACTIVITY, ROUTING_CELL_LEVEL):
            raise ValueError(f"unknown routing mode: {self.routing!r}")


@dataclass(frozen=True)
class CellClassification:
    """One row of the cell classification table."""

    stable_index: int
    output_types: tuple[str, ...]
    rule_hits: tuple[RuleHit, ...]
    model_probs: dict[ActivityLabel, float]
    labels: frozenset[ActivityLabel]
    provenance: dict[ActivityLabel, str]

    @property
    def unlabeled(self) -> bool:
        return not self.labels


@dataclass(frozen=True)
class ClassificationTable:
    rows: tuple[CellClassification, ...]

    def by_index(self) -> dict[int, CellClassification]:
        return {row.stable_index: row for row in self.rows}


def classify_preprocessed(pc: PreprocessedCell, models: ActivityModelSet,
                          cfg: PipelineConfig = PipelineConfig()) -> CellClassification:
    hits = classify_by_rules(pc) if cfg.use_rules else set()
    rule_positive = rule_labels(hits)

    if cfg.routing == ROUTING_CELL_LEVEL and hits:
        to_evaluate: list[ActivityLabel] = []
    else:
        to_evaluate = [lab for lab in TAXONOMY_ORDER if lab not in rule_positive]

    probs: dict[ActivityLabel, float] = {}
    labels = set(rule_positive)
    provenance = {lab: PROVENANCE_RULE for lab in rule_positive}
    for lab in to_evaluate:
        model = models.models[lab]
        vec = vectorize(pc.processed_source, model.vocabulary, models.tokenizer)
        proba = predict_proba(model, vec)
        probs[lab] = proba
        if proba >= cfg.threshold:
            labels.add(lab)
            provenance[lab] = PROVENANCE_MODEL

    return CellClassification(
        stable_index=pc.stable_index,
        output_types=tuple(sorted(pc.output_types)),
        rule_hits=tuple(sorted(hits, key=lambda h: h.rule_id)),
        model_probs=probs,
        labels=frozenset(labels),
        provenance=provenance,
    )


def classify_notebook(nb: Notebook, models: ActivityModelSet,
                      cfg: PipelineConfig = PipelineConfig()) -> ClassificationTable:
    """Classify every code cell; markdown/raw cells never enter the table."""
    rows = [
        classify_preprocessed(preprocess_cell(cell), models, cfg)
        for cell in nb.cells if cell.kind == CODE
    ]
    return ClassificationTable(rows=tuple(rows))


def classify_record(source: str, output_types, output_text: str,
                    models: ActivityModelSet,
                    cfg: PipelineConfig = PipelineConfig(),
                    stable_index: int = 0) -> CellClassification:
    """Classify bare cell content (labeled-dataset records)."""
    pc = preprocess_text(source, output_types=output_types,
                         output_text=output_text, stable_index=stable_index)
    return classify_preprocessed(pc, models, cfg)


# --- post-processor -----------------------------------------------------

MODE_HEADERS = "headers"
MODE_TAGS = "tags"


def _is_generated_markdown(cell: Cell) -> bool:
    marker = cell.metadata.get(GENERATOR_KEY)
    return cell.kind == MARKDOWN and isinstance(marker, dict) and marker.get("generated") is True


def _header_cell(labels) -> Cell:
    text = "## " + " | ".join(lab.value for lab in sort_labels(labels))
    return Cell(
        kind=MARKDOWN,
        source=text,
        outputs=(),
        execution_count=None,
        metadata={GENERATOR_KEY: {"generated": True}},
        stable_index=0,
    )


def _with_tags(cell: Cell, labels) -> Cell:
    metadata = dict(cell.metadata)
    tags = [t for t in cell.tags() if not str(t).startswith(TAG_PREFIX)]
    tags.extend(TAG_PREFIX + lab.value for lab in sort_labels(labels))
    if tags:
        metadata["tags"] = tags
    else:
        metadata.pop("tags", None)
    return replace(cell, metadata=metadata)


def _check_table(nb: Notebook, table: ClassificationTable) -> None:
    code_indexes = {cell.stable_index for cell in nb.cells if cell.kind == CODE}
    table_indexes = {row.stable_index for row in table.rows}
    if code_indexes != table_indexes:
        raise TableMismatch(
            f"table covers cells {sorted(table_indexes)} but the notebook's "
            f"code cells are {sorted(code_indexes)}"
        )


def _renumber(cells) -> tuple[Cell, ...]:
    return tuple(replace(cell, stable_index=i) for i, cell in enumerate(cells))


def annotate_notebook(nb: Notebook, table: ClassificationTable, mode: str) -> Notebook:
    """Insert generated markdown headers above labeled code cells, or attach
    jupylabel tags to them. Re-annotating replaces earlier generated output
    instead of stacking it; unlabeled cells are left untouched."""
    if mode not in (MODE_HEADERS, MODE_TAGS):
        raise ValueError(f"unknown annotation mode: {mode!r}")
    _check_table(nb, table)
    rows = table.by_index()
    out: list[Cell] = []
    for cell in nb.cells:
        if _is_generated_markdown(cell):
            continue
        if cell.kind != CODE:
            out.append(cell)
            continue
        row = rows[cell.stable_index]
        if mode == MODE_HEADERS:
            if row.labels:
                out.append(_header_cell(row.labels))
            out.append(cell)
        else:
            out.append(_with_tags(cell, row.labels) if row.labels else cell)
    return replace(nb, cells=_renumber(out))


def strip_annotations(nb: Notebook) -> Notebook:
    """Remove every generated markdown cell and every jupylabel tag.
    Hand-written markdown is never touched."""
    out: list[Cell] = []
    for cell in nb.cells:
        if _is_generated_markdown(cell):
            continue
        if cell.kind == CODE and any(str(t).startswith(TAG_PREFIX) for t in cell.tags()):
            metadata = dict(cell.metadata)
            tags = [t for t in cell.tags() if not str(t).startswith(TAG_PREFIX)]
            if tags:
                metadata["tags"] = tags
            else:
                metadata.pop("tags", None)
            cell = replace(cell, metadata=metadata)
        out.append(cell)
    return replace(nb, cells=_renumber(out))


# --- table export -------------------------------------------------------

def table_to_json(table: ClassificationTable) -> str:
    """Debug/interchange export: one JSON document per notebook."""
    cells = []
    for row in table.rows:
        cells.append({
            "stable_index": row.stable_index,
            "output_types": list(row.output_types),
            "rule_hits": [
                {"rule_id": hit.rule_id, "label": hit.label.value, "evidence": hit.evidence}
                for hit in row.rule_hits
            ],
            "model_probs": {
                lab.value: round(row.model_probs[lab], 6)
                for lab in TAXONOMY_ORDER if lab in row.model_probs
            },
            "labels": [lab.value for lab in sort_labels(row.labels)],
            "provenance": {
                lab.value: row.provenance[lab]
                for lab in TAXONOMY_ORDER if lab in row.provenance
            },
            "unlabeled": row.unlabeled,
        })
    return json.dumps({"cells": cells}, ensure_ascii=False, indent=1)
