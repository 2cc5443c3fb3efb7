"""Deterministic, positive-only heuristics for three of the eight activities.

Rules only ever assert a label; an empty hit set means "undecided", never
"no activity". The rule identifiers are a stable public contract: they appear
in exported classification tables and in debug output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .labels import ActivityLabel
from .preprocess import PreprocessedCell

R1_SETUP = "R1_SETUP"
R2_DISPLAY_DATA = "R2_DISPLAY_DATA"
R3_VALIDATE = "R3_VALIDATE"

RULE_IDS = (R1_SETUP, R2_DISPLAY_DATA, R3_VALIDATE)

# Keywords that signal data validation, matched on token boundaries so that
# e.g. `checkpoint` or `checked_df` never fire.
_VALIDATE_KEYWORD_RE = re.compile(r"\b(assert|verify|check)\b", re.IGNORECASE)


@dataclass(frozen=True)
class RuleHit:
    label: ActivityLabel
    rule_id: str
    evidence: str


def classify_by_rules(pc: PreprocessedCell) -> set[RuleHit]:
    """Apply all rules to one preprocessed cell; returns every hit."""
    hits: set[RuleHit] = set()

    setup_evidence = [
        name for name, flag in (
            ("setup_token", pc.has_setup_token),
            ("magic", pc.has_magic),
            ("constant_decl", pc.has_constant_decl),
        ) if flag
    ]
    if setup_evidence:
        hits.add(RuleHit(ActivityLabel.SETUP_NOTEBOOK, R1_SETUP, ",".join(setup_evidence)))

    if "display_data" in pc.output_types:
        hits.add(RuleHit(ActivityLabel.VISUALIZE_DATA, R2_DISPLAY_DATA, "output_type:display_data"))

    validate_evidence = []
    kw_source = _VALIDATE_KEYWORD_RE.search(pc.processed_source)
    if kw_source:
        validate_evidence.append(f"keyword:{kw_source.group(0).lower()}@source")
    else:
        kw_output = _VALIDATE_KEYWORD_RE.search(pc.output_text)
        if kw_output:
            validate_evidence.append(f"keyword:{kw_output.group(0).lower()}@output")
    if pc.has_validation_token:
        validate_evidence.append("implicit_return")
    if pc.has_print_call:
        validate_evidence.append("print_call")
    if validate_evidence:
        hits.add(RuleHit(ActivityLabel.VALIDATE_DATA, R3_VALIDATE, ",".join(validate_evidence)))

    return hits


def rule_labels(hits) -> set[ActivityLabel]:
    """Project a hit set onto its labels."""
    return {hit.label for hit in hits}
