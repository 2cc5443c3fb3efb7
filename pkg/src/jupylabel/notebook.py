"""Lossless in-memory model of nbformat-4 notebooks.

Parsing normalizes the handful of fields the classifier reads (cell type,
source text, output types) and keeps every other JSON field verbatim so that
parse -> serialize -> parse is structurally the identity. Nothing here ever
mutates a parsed notebook; pipeline stages build new ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class NotebookError(Exception):
    """Base class for notebook parsing failures."""


class MalformedJson(NotebookError):
    """The input is not JSON at all."""


class UnsupportedFormat(NotebookError):
    """The notebook is not nbformat major version 4."""


class SchemaViolation(NotebookError):
    """JSON parsed but required notebook structure is missing."""


CODE = "code"
MARKDOWN = "markdown"
RAW = "raw"

# The four output types nbformat 4 defines. Anything else is kept verbatim
# but exposed as "unknown" so no rule can match it.
KNOWN_OUTPUT_TYPES = ("stream", "display_data", "execute_result", "error")
UNKNOWN_OUTPUT = "unknown"


def _join_source(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        return "".join(str(part) for part in value)
    return "" if value is None else str(value)


def _split_source(text: str) -> list[str]:
    # nbformat convention: a list of physical lines, each keeping its newline.
    return text.splitlines(keepends=True)


def _output_text(raw: dict) -> str:
    kind = raw.get("output_type")
    if kind == "stream":
        return _join_source(raw.get("text", ""))
    if kind in ("display_data", "execute_result"):
        data = raw.get("data")
        if isinstance(data, dict):
            return _join_source(data.get("text/plain", ""))
        return ""
    if kind == "error":
        parts = [str(raw.get("ename", "")), str(raw.get("evalue", ""))]
        trace = raw.get("traceback")
        if isinstance(trace, list):
            parts.extend(str(t) for t in trace)
        return "\n".join(p for p in parts if p)
    return ""


@dataclass(frozen=True)
class CellOutput:
    """One entry of a code cell's ``outputs`` array."""

    output_type: str          # one of KNOWN_OUTPUT_TYPES or "unknown"
    text_payload: str         # concatenated textual content, "" for binary
    raw_payload: dict         # the original JSON object, re-emitted verbatim

    @classmethod
    def from_raw(cls, raw: dict) -> "CellOutput":
        declared = raw.get("output_type")
        kind = declared if declared in KNOWN_OUTPUT_TYPES else UNKNOWN_OUTPUT
        return cls(output_type=kind, text_payload=_output_text(raw), raw_payload=raw)


@dataclass(frozen=True)
class Cell:
    kind: str                 # code | markdown | raw
    source: str               # logical text, "\n"-separated
    outputs: tuple[CellOutput, ...]
    execution_count: int | None
    metadata: dict
    stable_index: int         # 0-based position within the notebook
    extra: dict = field(default_factory=dict)  # unrecognized cell fields

    def tags(self) -> list[str]:
        tags = self.metadata.get("tags")
        return list(tags) if isinstance(tags, list) else []

    def to_raw(self) -> dict:
        raw = dict(self.extra)
        raw["cell_type"] = self.kind
        raw["metadata"] = self.metadata
        raw["source"] = _split_source(self.source)
        if self.kind == CODE:
            raw["execution_count"] = self.execution_count
            raw["outputs"] = [out.raw_payload for out in self.outputs]
        return raw


@dataclass(frozen=True)
class Notebook:
    format_major: int
    format_minor: int
    metadata: dict
    cells: tuple[Cell, ...]
    extra: dict = field(default_factory=dict)  # unrecognized top-level fields

    def to_raw(self) -> dict:
        raw = dict(self.extra)
        raw["nbformat"] = self.format_major
        raw["nbformat_minor"] = self.format_minor
        raw["metadata"] = self.metadata
        raw["cells"] = [cell.to_raw() for cell in self.cells]
        return raw


_CELL_KEYS = ("cell_type", "metadata", "source", "execution_count", "outputs")
_NB_KEYS = ("nbformat", "nbformat_minor", "metadata", "cells")


def _parse_cell(raw, index: int) -> Cell:
    if not isinstance(raw, dict) or "cell_type" not in raw:
        raise SchemaViolation(f"cell {index} has no cell_type")
    kind = raw["cell_type"]
    outputs: tuple[CellOutput, ...] = ()
    execution_count = None
    if kind == CODE:
        raw_outputs = raw.get("outputs", [])
        if isinstance(raw_outputs, list):
            outputs = tuple(CellOutput.from_raw(o) for o in raw_outputs if isinstance(o, dict))
        execution_count = raw.get("execution_count")
    metadata = raw.get("metadata")
    if not isinstance(metadata, dict):
        metadata = {}
    extra = {k: v for k, v in raw.items() if k not in _CELL_KEYS}
    return Cell(
        kind=kind,
        source=_join_source(raw.get("source", "")),
        outputs=outputs,
        execution_count=execution_count,
        metadata=metadata,
        stable_index=index,
        extra=extra,
    )


def parse_notebook(text: str) -> Notebook:
    """Parse nbformat-4 JSON text into a Notebook.

    Raises MalformedJson, UnsupportedFormat, or SchemaViolation.
    """
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(doc, dict):
        raise SchemaViolation("notebook JSON is not an object")
    if doc.get("nbformat") != 4:
        raise UnsupportedFormat(f"nbformat {doc.get('nbformat')!r} is not supported (need 4)")
    if "cells" not in doc or not isinstance(doc["cells"], list):
        raise SchemaViolation("notebook has no cells array")
    metadata = doc.get("metadata")
    if not isinstance(metadata, dict):
        metadata = {}
    cells = tuple(_parse_cell(raw, i) for i, raw in enumerate(doc["cells"]))
    extra = {k: v for k, v in doc.items() if k not in _NB_KEYS}
    return Notebook(
        format_major=4,
        format_minor=int(doc.get("nbformat_minor", 0)),
        metadata=metadata,
        cells=cells,
        extra=extra,
    )


def serialize_notebook(nb: Notebook) -> str:
    """Serialize a Notebook back to nbformat-4 JSON text."""
    return json.dumps(nb.to_raw(), ensure_ascii=False, indent=1)


def code_cells(nb: Notebook) -> list[Cell]:
    """The notebook's code cells in order."""
    return [cell for cell in nb.cells if cell.kind == CODE]


def read_notebook(path) -> Notebook:
    with open(path, encoding="utf-8") as fh:
        return parse_notebook(fh.read())


def write_notebook(nb: Notebook, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_notebook(nb))
        fh.write("\n")
