"""jupylabel: classify Jupyter notebook code cells by the ML activity they
perform, with a hybrid of deterministic rules and per-activity boosted-tree
models."""

from .labels import TAXONOMY_ORDER, ActivityLabel
from .notebook import Notebook, Cell, CellOutput, code_cells, parse_notebook, serialize_notebook
from .preprocess import PreprocessedCell, detect_implicit_return, preprocess_cell
from .rules import RuleHit, classify_by_rules, rule_labels
from .vectorize import CountVector, TokenizerConfig, Vocabulary, fit_vocabulary, tokenize, vectorize
from .gbdt import (
    ActivityModelSet,
    GbdtModel,
    Hyperparams,
    TreeNode,
    grid_search_learning_rate,
    load_model_set,
    predict,
    predict_proba,
    resample,
    save_model_set,
    train,
)
from .pipeline import (
    ClassificationTable,
    PipelineConfig,
    annotate_notebook,
    classify_notebook,
    strip_annotations,
)
from .evalkit import LabeledCellDataset, MetricsReport, SplitSpec, confusion, dedupe, label_distribution, metrics, split
from .training import TrainConfig, train_model_set

__version__ = "0.1.0"
