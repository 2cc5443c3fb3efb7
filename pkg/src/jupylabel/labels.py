"""The closed set of ML activity labels a cell can carry."""

from __future__ import annotations

import enum


class ActivityLabel(str, enum.Enum):
    """One conceptual ML activity. Cells may carry any subset of the eight."""

    SETUP_NOTEBOOK = "setup_notebook"
    INGEST_DATA = "ingest_data"
    VALIDATE_DATA = "validate_data"
    PROCESS_DATA = "process_data"
    TRAIN_MODEL = "train_model"
    EVALUATE_MODEL = "evaluate_model"
    TRANSFER_RESULTS = "transfer_results"
    VISUALIZE_DATA = "visualize_data"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def from_text(cls, text: str) -> "ActivityLabel":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown activity label: {text!r}") from None


# Canonical ordering used everywhere labels are listed (headers, tags,
# reports, model artifacts).
TAXONOMY_ORDER: tuple[ActivityLabel, ...] = (
    ActivityLabel.SETUP_NOTEBOOK,
    ActivityLabel.INGEST_DATA,
    ActivityLabel.VALIDATE_DATA,
    ActivityLabel.PROCESS_DATA,
    ActivityLabel.TRAIN_MODEL,
    ActivityLabel.EVALUATE_MODEL,
    ActivityLabel.TRANSFER_RESULTS,
    ActivityLabel.VISUALIZE_DATA,
)


def sort_labels(labels) -> list[ActivityLabel]:
    """Return ``labels`` in fixed taxonomy order."""
    wanted = set(labels)
    return [lab for lab in TAXONOMY_ORDER if lab in wanted]
