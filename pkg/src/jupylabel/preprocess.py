"""Rewrite code-cell source into the reduced form the classifiers consume.

Rewrites run in a fixed order on physical lines:

  1. import / magic lines        -> SETUP
  2. comments                    -> deleted
  3. string literals in print()  -> deleted (f-string expressions kept)
  4. path-like string literals   -> PATH
  5. bare value access on the last line -> VALIDATION
  6. blank lines / repeated newlines -> collapsed

Everything is string-aware line lexing, never a full Python parse: beginner
notebooks frequently do not parse, and a rewrite must never fail.
"""

from __future__ import annotations

import keyword
import re
from dataclasses import dataclass

SETUP_TOKEN = "SETUP"
PATH_TOKEN = "PATH"
VALIDATION_TOKEN = "VALIDATION"

# Extensions that make a bare file name count as a path literal.
PATH_SUFFIXES = (
    ".csv", ".json", ".txt", ".parquet", ".xlsx", ".zip",
    ".h5", ".pkl", ".png", ".jpg",
)

_STRING_PREFIX_CHARS = set("rRbBuUfF")
_IDENT_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")

_SETUP_TOKEN_RE = re.compile(r"\bSETUP\b")
_VALIDATION_TOKEN_RE = re.compile(r"\bVALIDATION\b")
# Top-level assignment to an UPPER_SNAKE (or single capital letter) target.
_CONSTANT_RE = re.compile(r"(?:[A-Z_][A-Z0-9_]+|[A-Z])\s*=(?![=])")
_PRINT_RE = re.compile(r"print\s*\(")


@dataclass(frozen=True)
class StringSpan:
    """A string literal inside one physical line."""

    start: int       # index of the first prefix char (or the quote)
    body_start: int  # index just past the opening quote(s)
    body_end: int    # index of the closing quote(s), == len(line) if unterminated
    end: int         # index just past the closing quote(s)
    prefix: str      # lowercased prefix letters ("", "f", "rb", ...)


def string_spans(line: str) -> list[StringSpan]:
    """Locate string literals in one line, handling prefixes, escapes and
    same-line triple quotes. An unterminated literal runs to end of line."""
    spans: list[StringSpan] = []
    i, n = 0, len(line)
    while i < n:
        c = line[i]
        if c not in "\"'":
            i += 1
            continue
        # prefix letters directly before the quote (r, b, u, f combinations)
        p = i
        while p > 0 and line[p - 1] in _STRING_PREFIX_CHARS and p > i - 2:
            p -= 1
        if p > 0 and line[p - 1] in _IDENT_CHARS:
            p = i  # letters belong to an identifier, not a string prefix
        prefix = line[p:i].lower()
        triple = line[i:i + 3] in ('"""', "'''")
        quote = line[i:i + 3] if triple else c
        j = i + len(quote)
        body_end = n
        end = n
        while j < n:
            if line[j] == "\\":
                j += 2
                continue
            if line.startswith(quote, j):
                body_end = j
                end = j + len(quote)
                break
            j += 1
        spans.append(StringSpan(start=p, body_start=i + len(quote),
                                body_end=body_end, end=end, prefix=prefix))
        i = end
    return spans


def _in_span(pos: int, spans: list[StringSpan]) -> bool:
    return any(s.start <= pos < s.end for s in spans)


def _is_magic(line: str) -> bool:
    stripped = line.lstrip()
    return stripped.startswith("%") or stripped.startswith("!")


def _is_import(line: str) -> bool:
    first = line.split(maxsplit=1)
    return bool(first) and first[0] in ("import", "from")


def _delete_comment(line: str) -> str:
    spans = string_spans(line)
    for pos, ch in enumerate(line):
        if ch == "#" and not _in_span(pos, spans):
            return line[:pos].rstrip()
    return line


def _fstring_expressions(body: str) -> list[str]:
    """Extract the {placeholder} expressions of an f-string body."""
    exprs: list[str] = []
    i, n = 0, len(body)
    while i < n:
        c = body[i]
        if c == "{":
            if body.startswith("{{", i):
                i += 2
                continue
            depth = 1
            j = i + 1
            expr_end = None
            while j < n and depth:
                cj = body[j]
                if cj in "{[(":
                    depth += 1
                elif cj in "}])":
                    depth -= 1
                elif depth == 1 and cj == ":" and expr_end is None:
                    expr_end = j  # format spec starts
                elif depth == 1 and cj == "!" and j + 1 < n and body[j + 1] in "rsa" and expr_end is None:
                    expr_end = j  # conversion
                j += 1
            if expr_end is None:
                expr_end = j - 1 if depth == 0 else j
            expr = body[i + 1:expr_end].strip()
            if expr:
                exprs.append(expr)
            i = j
        elif body.startswith("}}", i):
            i += 2
        else:
            i += 1
    return exprs


def _strip_literals(text: str) -> str:
    """Delete plain string literals from an expression; f-string literals are
    replaced by their placeholder expressions."""
    spans = string_spans(text)
    out = text
    for span in reversed(spans):
        if "f" in span.prefix:
            replacement = ", ".join(_fstring_expressions(text[span.body_start:span.body_end]))
        else:
            replacement = ""
        out = out[:span.start] + replacement + out[span.end:]
    return out


def _split_top_level_args(args: str) -> list[str]:
    spans = string_spans(args)
    parts: list[str] = []
    depth = 0
    last = 0
    for pos, ch in enumerate(args):
        if _in_span(pos, spans):
            continue
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(args[last:pos])
            last = pos + 1
    parts.append(args[last:])
    return parts


_KWARG_EMPTY_RE = re.compile(r"^[A-Za-z_]\w*\s*=\s*$")


def _clean_arg(arg: str) -> str:
    cleaned = _strip_literals(arg)
    if _KWARG_EMPTY_RE.match(cleaned.strip()):
        return ""  # kwarg whose value was a pure literal: drop it entirely
    before = None
    while before != cleaned:
        before = cleaned
        cleaned = cleaned.strip().strip(",+%").strip()
    return cleaned


def _clear_print_strings(line: str) -> tuple[str, bool]:
    """Delete string-literal arguments inside print(...) calls on this line."""
    found = False
    out = line
    search_from = 0
    while True:
        spans = string_spans(out)
        match = None
        for m in _PRINT_RE.finditer(out, search_from):
            if _in_span(m.start(), spans):
                continue
            prev = out[m.start() - 1] if m.start() > 0 else ""
            if prev in _IDENT_CHARS or prev == ".":
                continue  # sprint( / obj.print( are not the builtin
            match = m
            break
        if match is None:
            return out, found
        found = True
        open_paren = match.end() - 1
        depth = 0
        close_paren = None
        for pos in range(open_paren, len(out)):
            if _in_span(pos, spans):
                continue
            ch = out[pos]
            if ch in "([{":
                depth += 1
            elif ch in ")]}":
                depth -= 1
                if depth == 0:
                    close_paren = pos
                    break
        args_end = close_paren if close_paren is not None else len(out)
        args = out[open_paren + 1:args_end]
        kept = [c for c in (_clean_arg(a) for a in _split_top_level_args(args)) if c]
        rebuilt = ", ".join(kept)
        tail = out[args_end:] if close_paren is not None else ""
        out = out[:open_paren + 1] + rebuilt + tail
        search_from = open_paren + 1 + len(rebuilt) + 1
    return out, found


def _mask_paths(line: str) -> str:
    out = line
    for span in reversed(string_spans(line)):
        body = line[span.body_start:span.body_end]
        if "/" in body or "\\" in body or body.lower().endswith(PATH_SUFFIXES):
            out = out[:span.start] + PATH_TOKEN + out[span.end:]
    return out


def detect_implicit_return(last_line: str) -> bool:
    """True iff the line is a bare value access: an identifier followed by any
    chain of attribute accesses and/or subscripts, with no call parentheses,
    no assignment and no statement keyword."""
    s = last_line.strip()
    if not s:
        return False
    ident = re.match(r"[A-Za-z_]\w*", s)
    if not ident or keyword.iskeyword(ident.group(0)):
        return False
    i = ident.end()
    n = len(s)
    spans = string_spans(s)
    while i < n:
        while i < n and s[i] in " \t":
            i += 1
        if i >= n:
            break
        ch = s[i]
        if ch == ".":
            i += 1
            while i < n and s[i] in " \t":
                i += 1
            attr = re.match(r"[A-Za-z_]\w*", s[i:])
            if not attr:
                return False
            i += attr.end()
        elif ch == "[":
            depth = 1
            i += 1
            while i < n and depth:
                if _in_span(i, spans):
                    i += 1
                    continue
                if s[i] == "(":
                    return False  # call inside subscript
                if s[i] == "[":
                    depth += 1
                elif s[i] == "]":
                    depth -= 1
                i += 1
            if depth:
                return False
        else:
            return False
    return i >= n


@dataclass(frozen=True)
class PreprocessedCell:
    stable_index: int
    original_source: str
    processed_source: str
    output_types: frozenset[str]
    output_text: str
    has_setup_token: bool
    has_validation_token: bool
    has_print_call: bool
    has_magic: bool
    has_constant_decl: bool


def preprocess_source(source: str) -> tuple[str, bool, bool]:
    """Apply the source rewrites; returns (processed, has_magic, has_print_call)."""
    has_magic = False
    has_print = False
    lines = source.split("\n")

    masked: list[str] = []
    for line in lines:
        if _is_magic(line):
            has_magic = True
            masked.append(SETUP_TOKEN)
        elif _is_import(line):
            masked.append(SETUP_TOKEN)
        else:
            masked.append(line)

    rewritten: list[str] = []
    for line in masked:
        if line == SETUP_TOKEN:
            rewritten.append(line)
            continue
        line = _delete_comment(line)
        line, printed = _clear_print_strings(line)
        has_print = has_print or printed
        line = _mask_paths(line)
        rewritten.append(line.rstrip())

    for idx in range(len(rewritten) - 1, -1, -1):
        line = rewritten[idx]
        if not line.strip():
            continue
        if line.strip() != SETUP_TOKEN and detect_implicit_return(line):
            rewritten[idx] = VALIDATION_TOKEN
        break

    processed = "\n".join(line for line in rewritten if line.strip())
    return processed, has_magic, has_print


def preprocess_text(source: str, output_types=(), output_text: str = "",
                    stable_index: int = 0) -> PreprocessedCell:
    """Preprocess bare cell content (used both for Cell objects and for
    labeled-dataset records)."""
    processed, has_magic, has_print = preprocess_source(source)
    return PreprocessedCell(
        stable_index=stable_index,
        original_source=source,
        processed_source=processed,
        output_types=frozenset(output_types),
        output_text=output_text,
        has_setup_token=bool(_SETUP_TOKEN_RE.search(processed)),
        has_validation_token=bool(_VALIDATION_TOKEN_RE.search(processed)),
        has_print_call=has_print,
        has_magic=has_magic,
        has_constant_decl=any(
            _CONSTANT_RE.match(line) is not None for line in processed.split("\n")
        ),
    )


def preprocess_cell(cell) -> PreprocessedCell:
    """Preprocess a code Cell (see notebook module)."""
    if cell.kind != "code":
        raise ValueError(f"cell {cell.stable_index} is not a code cell")
    # Rule matching consults stream and execute_result text only; display_data
    # participates via its output type, error output text is never matched.
    texts = [out.text_payload for out in cell.outputs
             if out.output_type in ("stream", "execute_result") and out.text_payload]
    return preprocess_text(
        cell.source,
        output_types=frozenset(out.output_type for out in cell.outputs),
        output_text="\n".join(texts),
        stable_index=cell.stable_index,
    )
