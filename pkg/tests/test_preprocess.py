"""Preprocessor golden suite, idempotence, and the oracle-backed properties."""

import json
import re
from pathlib import Path

import pytest

from jupylabel.preprocess import (
    PATH_SUFFIXES,
    detect_implicit_return,
    preprocess_cell,
    preprocess_text,
)
from jupylabel.notebook import Cell

GOLDEN = json.loads((Path(__file__).parent / "data" / "preprocess_golden.json").read_text())

FLAG_FIELDS = {
    "setup": "has_setup_token",
    "validation": "has_validation_token",
    "print": "has_print_call",
    "magic": "has_magic",
    "constant": "has_constant_decl",
}


def test_golden_suite_is_large_enough():
    assert len(GOLDEN) >= 50


@pytest.mark.parametrize("case", GOLDEN, ids=[c["name"] for c in GOLDEN])
def test_golden_rewrite(case):
    pc = preprocess_text(case["source"])
    assert pc.processed_source == case["expected"]
    for short, attr in FLAG_FIELDS.items():
        assert getattr(pc, attr) == case["flags"][short], f"flag {attr} mismatch"


@pytest.mark.parametrize("case", GOLDEN, ids=[c["name"] for c in GOLDEN])
def test_golden_idempotent(case):
    once = preprocess_text(case["source"]).processed_source
    twice = preprocess_text(once).processed_source
    assert twice == once


def test_processed_never_has_blank_lines_or_double_newlines(labeled_dataset):
    for rec in labeled_dataset.records:
        processed = preprocess_text(rec.source).processed_source
        assert "\n\n" not in processed
        if processed:
            for line in processed.split("\n"):
                assert line.strip(), repr(processed)


def test_idempotent_on_fixture_corpus(labeled_dataset):
    for rec in labeled_dataset.records:
        once = preprocess_text(rec.source).processed_source
        assert preprocess_text(once).processed_source == once


def test_mean_size_reduction_on_corpus(labeled_dataset):
    original = sum(len(rec.source) for rec in labeled_dataset.records)
    processed = sum(len(preprocess_text(rec.source).processed_source)
                    for rec in labeled_dataset.records)
    assert processed < original


# --- independent oracles ---------------------------------------------------

_QUOTE = re.compile(r"""("|')""")


def _oracle_string_literals(line: str):
    """Minimal independent string finder: yields (body, start, end) spans."""
    out = []
    i = 0
    while i < len(line):
        ch = line[i]
        if ch in "\"'":
            j = i + 1
            while j < len(line):
                if line[j] == "\\":
                    j += 2
                    continue
                if line[j] == ch:
                    break
                j += 1
            out.append((line[i + 1:j], i, min(j + 1, len(line))))
            i = j + 1
        else:
            i += 1
    return out


def test_no_string_literal_survives_inside_print(labeled_dataset):
    """Tokenizer-level oracle: processed print(...) regions contain no quotes."""
    sources = [rec.source for rec in labeled_dataset.records]
    sources += [case["source"] for case in GOLDEN]
    checked = 0
    for src in sources:
        pc = preprocess_text(src)
        if not pc.has_print_call:
            continue
        for line in pc.processed_source.split("\n"):
            for m in re.finditer(r"(?<![\w.])print\s*\(", line):
                rest = line[m.end():]
                closing = rest.rfind(")")
                region = rest if closing < 0 else rest[:closing]
                assert '"' not in region and "'" not in region, (src, line)
                checked += 1
    assert checked > 0


def test_masked_path_bodies_never_reach_output(labeled_dataset):
    """Path-literal oracle: every path-looking literal body disappears."""
    masked = 0
    for rec in labeled_dataset.records:
        pc = preprocess_text(rec.source)
        for line in rec.source.split("\n"):
            for body, _, _ in _oracle_string_literals(line):
                is_path = "/" in body or "\\" in body or body.lower().endswith(PATH_SUFFIXES)
                if is_path and len(body) > 1:
                    assert body not in pc.processed_source, (rec.source, body)
                    masked += 1
    assert masked >= 20


# --- implicit-return detector ----------------------------------------------

@pytest.mark.parametrize("line,expected", [
    ("df", True),
    ("df.columns", True),
    ("df['age']", True),
    ("df.head()", False),
    ("x = df.columns", False),
    ("df[df.age > 10]", True),
    ("df[foo(x)]", False),
    ("return df", False),
    ("pass", False),
    ("del df", False),
    ("  df.iloc[0]  ", True),
    ("df.a.b.c", True),
    ("3 + 4", False),
    ("'text'", False),
    ("df,other", False),
])
def test_detect_implicit_return(line, expected):
    assert detect_implicit_return(line) is expected


def test_preprocess_cell_rejects_markdown():
    cell = Cell(kind="markdown", source="# t", outputs=(), execution_count=None,
                metadata={}, stable_index=0)
    with pytest.raises(ValueError):
        preprocess_cell(cell)


def test_preprocess_cell_collects_output_types_and_text(notebook_dir):
    from jupylabel.notebook import read_notebook, code_cells
    nb = read_notebook(notebook_dir / "edge_unknown_fields.ipynb")
    pc = preprocess_cell(code_cells(nb)[0])
    # unknown output type is present as "unknown" and stream text is kept
    assert "unknown" in pc.output_types
    assert "stream" in pc.output_types
    assert "hello" in pc.output_text
