"""Per-activity binary gradient-boosted tree models.

Second-order boosting with binary logistic loss: per round the kernel grows
one regression tree on the current gradients/hessians, choosing splits by the
regularized gain and assigning Newton-step leaf weights. The split search
runs in a compiled kernel when available (see _kernels); the training driver
here computes gradients, margins and the loss curve in plain Python so the
numbers are identical under either kernel backend.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .labels import TAXONOMY_ORDER, ActivityLabel
from .vectorize import CountVector, TokenizerConfig, Vocabulary

ARTIFACT_FORMAT = "jupylabel-model-set"
ARTIFACT_FORMAT_VERSION = 1

DEFAULT_LEARNING_RATE_GRID = (0.05, 0.1, 0.2, 0.3)

# Probabilities are clamped strictly inside (0,1); log-loss uses the
# conventional 1e-15 clamp.
_ALMOST_ONE = math.nextafter(1.0, 0.0)
_TINY = 5e-324
_LOSS_EPS = 1e-15


class GbdtError(Exception):
    pass


class SingleClass(GbdtError):
    """Training or resampling needs both classes present."""


class DimensionMismatch(GbdtError):
    """Count vectors disagree on dimensionality."""


class VersionMismatch(GbdtError):
    """Model artifact was written by an incompatible format version."""


class ArtifactError(GbdtError):
    """Model artifact is structurally broken."""


@dataclass(frozen=True)
class Hyperparams:
    rounds: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    l2_lambda: float = 1.0
    min_child_weight: float = 1.0
    gamma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.l2_lambda < 0.0 or self.min_child_weight < 0.0 or self.gamma < 0.0:
            raise ValueError("l2_lambda, min_child_weight and gamma must be >= 0")


@dataclass(frozen=True)
class TreeNode:
    """Either an internal split (left/right set) or a leaf (weight set).

    Routing: go left iff feature value < threshold; absent (zero) counts
    therefore always follow the left branch.
    """

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.weight}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeNode":
        if "leaf" in doc:
            return cls(weight=float(doc["leaf"]))
        return cls(
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            left=cls.from_dict(doc["left"]),
            right=cls.from_dict(doc["right"]),
        )


def _tree_from_flat(feat, thr, left, right, weight, nid: int) -> TreeNode:
    if left[nid] == -1:
        return TreeNode(weight=weight[nid])
    return TreeNode(
        feature=feat[nid],
        threshold=thr[nid],
        left=_tree_from_flat(feat, thr, left, right, weight, left[nid]),
        right=_tree_from_flat(feat, thr, left, right, weight, right[nid]),
    )


def _flatten_trees(trees):
    feat, thr, left, right, weight, roots = [], [], [], [], [], []

    def emit(node: TreeNode) -> int:
        nid = len(feat)
        feat.append(node.feature)
        thr.append(node.threshold)
        left.append(-1)
        right.append(-1)
        weight.append(node.weight)
        if not node.is_leaf:
            left[nid] = emit(node.left)
            right[nid] = emit(node.right)
        return nid

    for tree in trees:
        roots.append(emit(tree))
    return feat, thr, left, right, weight, roots


@dataclass
class GbdtModel:
    activity: ActivityLabel | None
    trees: tuple[TreeNode, ...]
    base_score: float
    learning_rate: float
    vocabulary: Vocabulary | None
    dimension: int
    loss_curve: tuple[float, ...] = ()
    _forest: object = field(default=None, compare=False, repr=False)

    def prepared_forest(self):
        if self._forest is None:
            self._forest = _kernels.prepare_forest(*_flatten_trees(self.trees))
        return self._forest


def _sigmoid(margin: float) -> float:
    if margin >= 0.0:
        return 1.0 / (1.0 + math.exp(-margin))
    e = math.exp(margin)
    return e / (1.0 + e)


def _clamp_proba(p: float) -> float:
    if p <= 0.0:
        return _TINY
    if p >= 1.0:
        return _ALMOST_ONE
    return p


def log_loss(probas, targets) -> float:
    """Mean binary log-loss with the standard 1e-15 probability clamp."""
    if len(probas) != len(targets):
        raise ValueError("probas and targets differ in length")
    total = 0.0
    for p, y in zip(probas, targets):
        p = min(max(p, _LOSS_EPS), 1.0 - _LOSS_EPS)
        total += -(math.log(p) if y else math.log1p(-p))
    return total / len(probas)


def _check_dimensions(examples) -> int:
    dim = examples[0][0].dimension
    for vec, _ in examples:
        if vec.dimension != dim:
            raise DimensionMismatch(f"vector dimension {vec.dimension} != {dim}")
    return dim


def _build_csc(vectors, dimension):
    n_rows = len(vectors)
    counts = [0] * dimension
    nnz = 0
    for vec in vectors:
        for col in vec.counts:
            counts[col] += 1
            nnz += 1
    col_ptr = np.zeros(dimension + 1, dtype=np.int32)
    for j in range(dimension):
        col_ptr[j + 1] = col_ptr[j] + counts[j]
    col_row = np.zeros(nnz, dtype=np.int32)
    col_val = np.zeros(nnz, dtype=np.float64)
    fill = col_ptr[:-1].copy()
    for i, vec in enumerate(vectors):
        for col, cnt in vec.sorted_items():
            if cnt <= 0:
                raise ValueError("count vectors must store strictly positive counts")
            pos = fill[col]
            col_row[pos] = i
            col_val[pos] = float(cnt)
            fill[col] = pos + 1
    return n_rows, col_ptr, col_row, col_val


def resample(examples, seed: int):
    """Random oversampling with replacement of the minority class to parity,
    then a seeded shuffle. Deterministic for a fixed seed."""
    examples = list(examples)
    positives = [ex for ex in examples if ex[1]]
    negatives = [ex for ex in examples if not ex[1]]
    if not positives or not negatives:
        raise SingleClass("resampling needs both classes present")
    minority = positives if len(positives) < len(negatives) else negatives
    deficit = abs(len(positives) - len(negatives))
    rng = random.Random(seed)
    out = examples + [minority[rng.randrange(len(minority))] for _ in range(deficit)]
    rng.shuffle(out)
    return out


def train(examples, hp: Hyperparams, *, activity: ActivityLabel | None = None,
          vocabulary: Vocabulary | None = None) -> GbdtModel:
    """Fit one boosted ensemble. The loss curve records the training log-loss
    before any round and after every round."""
    examples = list(examples)
    if not examples:
        raise ValueError("no training examples")
    dim = _check_dimensions(examples)
    if vocabulary is not None and len(vocabulary) != dim:
        raise DimensionMismatch(f"vocabulary size {len(vocabulary)} != vector dimension {dim}")
    targets = [bool(y) for _, y in examples]
    if all(targets) or not any(targets):
        raise SingleClass("training needs both classes present")

    n = len(examples)
    n_rows, col_ptr, col_row, col_val = _build_csc([vec for vec, _ in examples], dim)
    base_score = 0.0
    margins = [base_score] * n
    grad = np.zeros(n, dtype=np.float64)
    hess = np.zeros(n, dtype=np.float64)

    trees: list[TreeNode] = []
    curve = [log_loss([_sigmoid(m) for m in margins], targets)]
    for _ in range(hp.rounds):
        for i in range(n):
            p = _sigmoid(margins[i])
            grad[i] = p - (1.0 if targets[i] else 0.0)
            hess[i] = p * (1.0 - p)
        feat, thr, left, right, weight, row_weight = _kernels.grow_tree(
            n_rows, dim, col_ptr, col_row, col_val, grad, hess,
            hp.max_depth, hp.l2_lambda, hp.gamma, hp.min_child_weight,
        )
        trees.append(_tree_from_flat(feat, thr, left, right, weight, 0))
        for i in range(n):
            margins[i] += hp.learning_rate * row_weight[i]
        curve.append(log_loss([_sigmoid(m) for m in margins], targets))

    return GbdtModel(
        activity=activity,
        trees=tuple(trees),
        base_score=base_score,
        learning_rate=hp.learning_rate,
        vocabulary=vocabulary,
        dimension=dim,
        loss_curve=tuple(curve),
    )


def predict_proba(model: GbdtModel, v: CountVector) -> float:
    """Probability in (0, 1) that the cell performs the model's activity."""
    if v.dimension != model.dimension:
        raise DimensionMismatch(f"vector dimension {v.dimension} != model dimension {model.dimension}")
    items = v.sorted_items()
    cols = [col for col, _ in items]
    vals = [float(cnt) for _, cnt in items]
    margin = _kernels.predict_margin(
        model.prepared_forest(), model.base_score, model.learning_rate, cols, vals,
    )
    return _clamp_proba(_sigmoid(margin))


def predict(model: GbdtModel, v: CountVector, threshold: float = 0.5) -> bool:
    return predict_proba(model, v) >= threshold


def _positive_f1(model: GbdtModel, pairs) -> float:
    tp = fp = fn = 0
    for vec, y in pairs:
        pred = predict(model, vec)
        if pred and y:
            tp += 1
        elif pred and not y:
            fp += 1
        elif not pred and y:
            fn += 1
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def grid_search_learning_rate(train_split, val_split, grid, hp_base: Hyperparams):
    """Train one model per learning rate, return the rate maximizing
    positive-class F1 on the validation split; ties go to the smaller rate."""
    rates = sorted(set(grid))
    if not rates:
        raise ValueError("learning-rate grid is empty")
    best_rate = None
    best_f1 = -1.0
    for rate in rates:
        model = train(train_split, replace(hp_base, learning_rate=rate))
        f1 = _positive_f1(model, val_split)
        if f1 > best_f1:
            best_rate, best_f1 = rate, f1
    return best_rate, best_f1


@dataclass
class ActivityModelSet:
    """One trained model per activity plus everything needed to reuse them."""

    models: dict[ActivityLabel, GbdtModel]
    tokenizer: TokenizerConfig
    hyperparams: Hyperparams
    learning_rate_grid: tuple[float, ...]
    fingerprint: str
    format_version: int = ARTIFACT_FORMAT_VERSION

    def __post_init__(self):
        missing = [lab.value for lab in TAXONOMY_ORDER if lab not in self.models]
        if missing:
            raise ArtifactError(f"model set is missing activities: {missing}")
        if len(self.models) != len(TAXONOMY_ORDER):
            raise ArtifactError("model set must hold exactly one model per activity")


def model_set_to_json(model_set: ActivityModelSet) -> str:
    models_doc = {}
    for label in TAXONOMY_ORDER:
        model = model_set.models[label]
        if model.vocabulary is None:
            raise ArtifactError(f"model for {label} has no vocabulary")
        models_doc[label.value] = {
            "learning_rate": model.learning_rate,
            "base_score": model.base_score,
            "vocabulary": {
                "tokens": model.vocabulary.tokens_sorted(),
                "fitted_on": model.vocabulary.fitted_on,
            },
            "trees": [tree.to_dict() for tree in model.trees],
        }
    hp = model_set.hyperparams
    doc = {
        "format": ARTIFACT_FORMAT,
        "format_version": model_set.format_version,
        "tokenizer": {"mode": model_set.tokenizer.mode, "lowercase": model_set.tokenizer.lowercase},
        "hyperparams": {
            "rounds": hp.rounds,
            "max_depth": hp.max_depth,
            "l2_lambda": hp.l2_lambda,
            "min_child_weight": hp.min_child_weight,
            "gamma": hp.gamma,
        },
        "seed": hp.seed,
        "learning_rate_grid": list(model_set.learning_rate_grid),
        "training_fingerprint": model_set.fingerprint,
        "models": models_doc,
    }
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))


def model_set_from_json(text: str) -> ActivityModelSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"model artifact is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != ARTIFACT_FORMAT:
        raise ArtifactError("not a jupylabel model artifact")
    if doc.get("format_version") != ARTIFACT_FORMAT_VERSION:
        raise VersionMismatch(
            f"artifact format version {doc.get('format_version')!r}, "
            f"this build reads version {ARTIFACT_FORMAT_VERSION}"
        )
    hp_doc = doc.get("hyperparams", {})
    hp = Hyperparams(
        rounds=int(hp_doc.get("rounds", 100)),
        max_depth=int(hp_doc.get("max_depth", 6)),
        l2_lambda=float(hp_doc.get("l2_lambda", 1.0)),
        min_child_weight=float(hp_doc.get("min_child_weight", 1.0)),
        gamma=float(hp_doc.get("gamma", 0.0)),
        seed=int(doc.get("seed", 0)),
    )
    tok_doc = doc.get("tokenizer", {})
    tokenizer = TokenizerConfig(mode=tok_doc.get("mode", "improved"),
                                lowercase=bool(tok_doc.get("lowercase", True)))
    models: dict[ActivityLabel, GbdtModel] = {}
    for key, entry in doc.get("models", {}).items():
        label = ActivityLabel.from_text(key)
        vocab = Vocabulary.from_tokens(entry["vocabulary"]["tokens"],
                                       fitted_on=entry["vocabulary"].get("fitted_on", ""))
        models[label] = GbdtModel(
            activity=label,
            trees=tuple(TreeNode.from_dict(t) for t in entry["trees"]),
            base_score=float(entry.get("base_score", 0.0)),
            learning_rate=float(entry["learning_rate"]),
            vocabulary=vocab,
            dimension=len(vocab),
        )
    return ActivityModelSet(
        models=models,
        tokenizer=tokenizer,
        hyperparams=hp,
        learning_rate_grid=tuple(doc.get("learning_rate_grid", DEFAULT_LEARNING_RATE_GRID)),
        fingerprint=doc.get("training_fingerprint", ""),
    )


def save_model_set(model_set: ActivityModelSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_set_to_json(model_set))


def load_model_set(path) -> ActivityModelSet:
    with open(path, encoding="utf-8") as fh:
        return model_set_from_json(fh.read())
