"""End-to-end training of the eight activity models from a labeled dataset.

Per activity: preprocess -> fit vocabulary -> vectorize -> oversample to
class parity -> grid-search the learning rate on the held-out validation
split -> train the final model on the resampled training split. Validation
data is never resampled.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .evalkit import LabeledCellDataset, SplitSpec, split
from .gbdt import (
    DEFAULT_LEARNING_RATE_GRID,
    ActivityModelSet,
    Hyperparams,
    SingleClass,
    grid_search_learning_rate,
    predict,
    resample,
    train,
)
from .labels import TAXONOMY_ORDER
from .preprocess import preprocess_text
from .vectorize import TokenizerConfig, fit_vocabulary, vectorize
from dataclasses import replace


@dataclass(frozen=True)
class TrainConfig:
    split: SplitSpec = SplitSpec()
    hyperparams: Hyperparams = Hyperparams()
    learning_rate_grid: tuple[float, ...] = DEFAULT_LEARNING_RATE_GRID
    tokenizer: TokenizerConfig = TokenizerConfig()


def _processed_sources(records) -> list[str]:
    return [
        preprocess_text(rec.source, rec.output_types, rec.output_text).processed_source
        for rec in records
    ]


def _config_fingerprint(ds: LabeledCellDataset, cfg: TrainConfig) -> str:
    doc = {
        "dataset": ds.fingerprint,
        "split": [cfg.split.train_fraction, cfg.split.seed, cfg.split.unit],
        "hyperparams": [cfg.hyperparams.rounds, cfg.hyperparams.max_depth,
                        cfg.hyperparams.l2_lambda, cfg.hyperparams.min_child_weight,
                        cfg.hyperparams.gamma, cfg.hyperparams.seed],
        "grid": sorted(cfg.learning_rate_grid),
        "tokenizer": [cfg.tokenizer.mode, cfg.tokenizer.lowercase],
    }
    return hashlib.sha256(json.dumps(doc).encode()).hexdigest()


def train_model_set(ds: LabeledCellDataset, cfg: TrainConfig = TrainConfig()):
    """Train all eight models; returns (ActivityModelSet, training report dict)."""
    train_ds, val_ds = split(ds, cfg.split)
    train_texts = _processed_sources(train_ds.records)
    val_texts = _processed_sources(val_ds.records)

    models = {}
    rows = {}
    for idx, label in enumerate(TAXONOMY_ORDER):
        y_train = [label in rec.labels for rec in train_ds.records]
        if all(y_train) or not any(y_train):
            raise SingleClass(
                f"training split has a single class for {label.value}; "
                "the dataset or split seed needs more variety"
            )
        vocab = fit_vocabulary(train_texts, cfg.tokenizer)
        pairs = list(zip((vectorize(t, vocab, cfg.tokenizer) for t in train_texts), y_train))
        resampled = resample(pairs, seed=cfg.hyperparams.seed * 8 + idx)
        val_pairs = [
            (vectorize(t, vocab, cfg.tokenizer), label in rec.labels)
            for t, rec in zip(val_texts, val_ds.records)
        ]
        rate, val_f1 = grid_search_learning_rate(
            resampled, val_pairs, cfg.learning_rate_grid, cfg.hyperparams)
        model = train(resampled, replace(cfg.hyperparams, learning_rate=rate),
                      activity=label, vocabulary=vocab)
        models[label] = model
        train_hits = sum(1 for vec, y in resampled if predict(model, vec) == y)
        rows[label.value] = {
            "learning_rate": rate,
            "val_pos_f1": val_f1,
            "train_accuracy": train_hits / len(resampled),
            "train_examples": len(resampled),
            "positives": sum(y_train),
            "vocabulary_size": len(vocab),
            "final_train_log_loss": model.loss_curve[-1],
        }

    fingerprint = _config_fingerprint(ds, cfg)
    model_set = ActivityModelSet(
        models=models,
        tokenizer=cfg.tokenizer,
        hyperparams=cfg.hyperparams,
        learning_rate_grid=tuple(sorted(cfg.learning_rate_grid)),
        fingerprint=fingerprint,
    )
    report = {
        "dataset": {"name": ds.name, "records": len(ds.records),
                    "fingerprint": ds.fingerprint},
        "split": {"train_fraction": cfg.split.train_fraction, "seed": cfg.split.seed,
                  "unit": cfg.split.unit, "train_records": len(train_ds.records),
                  "val_records": len(val_ds.records)},
        "hyperparams": {"rounds": cfg.hyperparams.rounds, "max_depth": cfg.hyperparams.max_depth,
                        "l2_lambda": cfg.hyperparams.l2_lambda,
                        "min_child_weight": cfg.hyperparams.min_child_weight,
                        "gamma": cfg.hyperparams.gamma, "seed": cfg.hyperparams.seed},
        "learning_rate_grid": sorted(cfg.learning_rate_grid),
        "activities": rows,
        "training_fingerprint": fingerprint,
    }
    return model_set, report
