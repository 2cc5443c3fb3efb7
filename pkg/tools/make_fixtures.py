"""Generate the committed fixture corpus and the hand-labeled cell dataset.

Every generated code cell comes from a template with a known label set, and
the label sets are consistent with the rule heuristics by construction
(cells that print are validate cells, cells with display_data output are
visualize cells, and so on). Regenerate with:

    python3 -m tools.make_fixtures

The module doubles as the synthetic-corpus factory for tests and benchmarks.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

SEED = 20240601

DF_NAMES = ("df", "data", "sales", "housing", "trips", "orders", "patients")
COLS = ("age", "fare", "price", "income", "height", "weight", "rating", "qty", "area")
TARGETS = ("target", "label", "churn", "survived", "outcome")
CSVS = ("train", "input", "raw", "measurements", "records", "listings")


@dataclass
class CellSpec:
    source: str
    labels: set[str] = field(default_factory=set)
    outputs: list[dict] = field(default_factory=list)


def stream(text: str) -> dict:
    return {"output_type": "stream", "name": "stdout",
            "text": [line + "\n" for line in text.split("\n")]}


def execute_result(text: str) -> dict:
    return {"output_type": "execute_result", "execution_count": 1,
            "data": {"text/plain": [text]}, "metadata": {}}


def display_data(desc: str = "Figure size 640x480 with 1 Axes") -> dict:
    return {"output_type": "display_data",
            "data": {"image/png": "iVBORw0KGgoAAAANSUhEUg==",
                     "text/plain": [f"<{desc}>"]},
            "metadata": {}}


# --- cell template pools ---------------------------------------------------

def setup_imports(rng) -> CellSpec:
    blocks = [
        ["import numpy as np", "import pandas as pd"],
        ["import matplotlib.pyplot as plt", "import seaborn as sns"],
        ["from sklearn.model_selection import train_test_split",
         "from sklearn.ensemble import RandomForestClassifier"],
        ["from sklearn.preprocessing import StandardScaler, LabelEncoder"],
        ["import torch", "import torch.nn as nn"],
        ["import xgboost as xgb"],
        ["import joblib", "import pickle"],
    ]
    lines = []
    for block in rng.sample(blocks, rng.randint(1, 3)):
        lines.extend(block)
    if rng.random() < 0.4:
        lines.append("%matplotlib inline")
    return CellSpec("\n".join(lines), {"setup_notebook"})


def setup_constants(rng) -> CellSpec:
    pool = [
        "RANDOM_STATE = 42",
        "N_FOLDS = 5",
        "EPOCHS = %d" % rng.choice([10, 20, 30]),
        "BATCH_SIZE = %d" % rng.choice([32, 64, 128]),
        'DATA_DIR = "../input/%s"' % rng.choice(CSVS),
        "LR = 0.01",
    ]
    lines = rng.sample(pool, rng.randint(2, 3))
    if rng.random() < 0.5:
        lines.insert(0, "import os")
    return CellSpec("\n".join(lines), {"setup_notebook"})


def setup_magic(rng) -> CellSpec:
    line = rng.choice([
        "!pip install xgboost --quiet",
        "!pip install lightgbm",
        "%load_ext autoreload\n%autoreload 2",
        "%config InlineBackend.figure_format = 'retina'",
    ])
    return CellSpec(line, {"setup_notebook"})


def ingest_csv(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    name = rng.choice(CSVS)
    reader = rng.choice(["read_csv", "read_csv", "read_json", "read_excel", "read_parquet"])
    ext = {"read_csv": "csv", "read_json": "json", "read_excel": "xlsx",
           "read_parquet": "parquet"}[reader]
    src = f'{df} = pd.{reader}("data/{name}.{ext}")'
    if rng.random() < 0.35:
        # displaying the freshly loaded frame is informal validation
        src += f"\n{df}"
        return CellSpec(src, {"ingest_data", "validate_data"},
                        [execute_result("   age  fare\n0   22  7.25\n1   38  71.28")])
    return CellSpec(src, {"ingest_data"})


def ingest_misc(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    variant = rng.randrange(3)
    if variant == 0:
        src = f'arr = np.loadtxt("data/{rng.choice(CSVS)}.txt", delimiter=",")'
    elif variant == 1:
        src = (f'with open("data/{rng.choice(CSVS)}.json") as fh:\n'
               f"    payload = json.load(fh)\n{df} = pd.DataFrame(payload)")
    else:
        src = (f'url = "https://example.com/{rng.choice(CSVS)}.zip"\n'
               f"{df} = pd.read_csv(url, compression=\"zip\")")
    return CellSpec(src, {"ingest_data"})


def validate_assert(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    col = rng.choice(COLS)
    src = rng.choice([
        f"assert {df}.shape[0] > 0",
        f'assert "{col}" in {df}.columns',
        f"assert {df}[\"{col}\"].notnull().all()",
        f"assert not {df}.duplicated().any()",
    ])
    return CellSpec(src, {"validate_data"})


def validate_inspect(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    variant = rng.randrange(4)
    if variant == 0:
        src = f"{df}.head()"
        out = [execute_result("   age  fare  qty\n0   22  7.25    3")]
    elif variant == 1:
        src = f"{df}.dtypes"
        out = [execute_result("age      int64\nfare   float64\ndtype: object")]
    elif variant == 2:
        src = f"{df}.describe()"
        out = [execute_result("              age        fare\ncount  891.000000  891.000000")]
    else:
        src = f"{df}.isnull().sum()"
        out = [execute_result("age     177\nfare      0\ndtype: int64")]
    return CellSpec(src, {"validate_data"}, out)


def validate_print(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    col = rng.choice(COLS)
    variant = rng.randrange(3)
    if variant == 0:
        src = f"print({df}.shape)"
        out = [stream("(891, 12)")]
    elif variant == 1:
        src = f'print("rows:", len({df}))\nprint("columns:", {df}.shape[1])'
        out = [stream("rows: 891\ncolumns: 12")]
    else:
        src = f'print("unique {col}:", {df}["{col}"].nunique())'
        out = [stream(f"unique {col}: 88")]
    return CellSpec(src, {"validate_data"}, out)


def process_clean(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    col = rng.choice(COLS)
    src = rng.choice([
        f'{df} = {df}.dropna(subset=["{col}"])',
        f'{df}["{col}"] = {df}["{col}"].fillna({df}["{col}"].median())',
        f'{df} = {df}.drop_duplicates().reset_index(drop=True)',
        f'{df}["{col}_log"] = np.log1p({df}["{col}"])',
    ])
    return CellSpec(src, {"process_data"})


def process_features(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    target = rng.choice(TARGETS)
    variant = rng.randrange(4)
    if variant == 0:
        # note: an uppercase single-letter target like `X = ...` would fire the
        # constant-declaration heuristic, so the feature frame is lowercase
        src = (f'features = {df}.drop(columns=["{target}"])\n'
               f'y = {df}["{target}"]\n'
               "X_train, X_test, y_train, y_test = train_test_split(features, y, test_size=0.2)")
    elif variant == 1:
        src = ("scaler = StandardScaler()\n"
               "X_train = scaler.fit_transform(X_train)\n"
               "X_test = scaler.transform(X_test)")
    elif variant == 2:
        col = rng.choice(COLS)
        src = f'{df}["{col}_enc"] = LabelEncoder().fit_transform({df}["{col}"])'
    else:
        col, col2 = rng.sample(COLS, 2)
        src = f'grouped = {df}.groupby("{col}")["{col2}"].mean().reset_index()'
    return CellSpec(src, {"process_data"})


def process_merge(rng) -> CellSpec:
    a, b = rng.sample(DF_NAMES, 2)
    key = rng.choice(("id", "user_id", "key"))
    src = f'{a} = {a}.merge({b}, on="{key}", how="left")'
    return CellSpec(src, {"process_data"})


def visualize_plot(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    col = rng.choice(COLS)
    variant = rng.randrange(4)
    if variant == 0:
        src = (f'plt.figure(figsize=(8, 4))\nplt.hist({df}["{col}"], bins=30)\n'
               f'plt.xlabel("{col}")\nplt.show()')
    elif variant == 1:
        src = f"sns.heatmap({df}.corr(), annot=True, cmap=\"viridis\")\nplt.show()"
    elif variant == 2:
        c1, c2 = rng.sample(COLS, 2)
        src = (f"fig, ax = plt.subplots()\nax.scatter({df}[\"{c1}\"], {df}[\"{c2}\"], alpha=0.3)\n"
               f"ax.set_ylabel(\"{c2}\")")
    else:
        src = f'{df}["{col}"].value_counts().plot(kind="bar")'
    return CellSpec(src, {"visualize_data"}, [display_data()])


def visualize_after_group(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    col, col2 = rng.sample(COLS, 2)
    src = (f'by_{col} = {df}.groupby("{col}")["{col2}"].sum()\n'
           f"by_{col}.plot(kind=\"line\")\nplt.show()")
    return CellSpec(src, {"process_data", "visualize_data"}, [display_data()])


def train_sklearn(rng) -> CellSpec:
    variant = rng.randrange(3)
    if variant == 0:
        src = ("model = RandomForestClassifier(n_estimators=200, max_depth=8)\n"
               "model.fit(X_train, y_train)")
        out = [execute_result("RandomForestClassifier(max_depth=8, n_estimators=200)")]
    elif variant == 1:
        src = ("clf = xgb.XGBClassifier(learning_rate=0.1, n_estimators=300)\n"
               "clf.fit(X_train, y_train)")
        out = [execute_result("XGBClassifier(learning_rate=0.1, n_estimators=300)")]
    else:
        src = "reg = LinearRegression()\nreg.fit(X_train, y_train)"
        out = [execute_result("LinearRegression()")]
    return CellSpec(src, {"train_model"}, out)


def train_torch_loop(rng) -> CellSpec:
    src = ("net = nn.Sequential(nn.Linear(16, 32), nn.ReLU(), nn.Linear(32, 1))\n"
           "optimizer = torch.optim.Adam(net.parameters(), lr=LR)\n"
           "for epoch in range(EPOCHS):\n"
           "    optimizer.zero_grad()\n"
           "    loss = criterion(net(xb), yb)\n"
           "    loss.backward()\n"
           "    optimizer.step()\n"
           "    print(epoch, loss.item())")
    # printing the loss is informal inspection, hence also validate_data
    return CellSpec(src, {"train_model", "validate_data"},
                    [stream("0 0.6931\n1 0.5214\n2 0.4418")])


def train_config(rng) -> CellSpec:
    src = rng.choice([
        "model = GradientBoostingRegressor(n_estimators=500, learning_rate=0.05)\nmodel.fit(X_train, y_train)",
        "knn = KNeighborsClassifier(n_neighbors=7)\nknn.fit(X_train, y_train)",
        "history = net.fit(X_train, y_train, epochs=EPOCHS, batch_size=BATCH_SIZE)",
    ])
    return CellSpec(src, {"train_model"})


def evaluate_metrics(rng) -> CellSpec:
    variant = rng.randrange(3)
    if variant == 0:
        src = ("preds = model.predict(X_test)\n"
               "acc = accuracy_score(y_test, preds)\n"
               'print("accuracy:", acc)')
        return CellSpec(src, {"evaluate_model", "validate_data"}, [stream("accuracy: 0.8123")])
    if variant == 1:
        src = ("preds = model.predict(X_test)\n"
               "rmse = mean_squared_error(y_test, preds, squared=False)\n"
               "rmse")
        return CellSpec(src, {"evaluate_model", "validate_data"}, [execute_result("3.8421")])
    src = ("scores = cross_val_score(model, X, y, cv=N_FOLDS)\n"
           "mean_score = scores.mean()")
    return CellSpec(src, {"evaluate_model"})


def evaluate_report(rng) -> CellSpec:
    variant = rng.randrange(2)
    if variant == 0:
        src = ("preds = clf.predict(X_test)\n"
               "print(classification_report(y_test, preds))")
        out = [stream("              precision    recall  f1-score\n"
                      "           0       0.84      0.87      0.85")]
        return CellSpec(src, {"evaluate_model", "validate_data"}, out)
    src = ("probs = clf.predict_proba(X_test)[:, 1]\n"
           "auc = roc_auc_score(y_test, probs)")
    return CellSpec(src, {"evaluate_model"})


def transfer_save(rng) -> CellSpec:
    variant = rng.randrange(4)
    if variant == 0:
        src = f'joblib.dump(model, "models/{rng.choice(CSVS)}.pkl")'
    elif variant == 1:
        src = 'submission.to_csv("submission.csv", index=False)'
    elif variant == 2:
        src = ('with open("models/final.pkl", "wb") as fh:\n'
               "    pickle.dump(model, fh)")
    else:
        src = 'torch.save(net.state_dict(), "models/net.pt")'
    return CellSpec(src, {"transfer_results"})


def transfer_export(rng) -> CellSpec:
    df = rng.choice(DF_NAMES)
    src = rng.choice([
        f'{df}.to_parquet("data/processed.parquet")',
        f'{df}.to_csv("output/{rng.choice(CSVS)}_clean.csv", index=False)',
        'np.save("output/embeddings.npy", embeddings)',
    ])
    return CellSpec(src, {"transfer_results"})


def plain_helper(rng) -> CellSpec:
    variant = rng.randrange(3)
    if variant == 0:
        src = "def to_title(value):\n    return value.title()"
    elif variant == 1:
        src = "x = 1\ny = 2\nz = x + y"
    else:
        src = "pass"
    return CellSpec(src, set())


# Loose narrative order of a typical ML notebook; each entry is
# (maker pool, min occurrences, max occurrences).
FLOW = (
    ((setup_imports,), 1, 1),
    ((setup_constants, setup_magic), 1, 2),
    ((ingest_csv, ingest_misc), 1, 2),
    ((validate_assert, validate_inspect, validate_print), 2, 3),
    ((process_clean, process_features, process_merge), 2, 4),
    ((visualize_plot, visualize_after_group), 1, 3),
    ((train_sklearn, train_torch_loop, train_config), 1, 2),
    ((evaluate_metrics, evaluate_report), 1, 2),
    ((transfer_save, transfer_export), 1, 1),
)

MARKDOWN_SNIPPETS = (
    "# Exploring the dataset",
    "## Feature engineering",
    "Let's look at the distributions first.",
    "### Model training\nWe start with a simple baseline.",
    "The scores look reasonable, exporting the results below.",
)


def content_cells(rng, min_cells: int = 0) -> list[CellSpec]:
    cells: list[CellSpec] = []
    for makers, lo, hi in FLOW:
        for _ in range(rng.randint(lo, hi)):
            cells.append(rng.choice(makers)(rng))
    if rng.random() < 0.35:
        cells.append(plain_helper(rng))
    while len(cells) < min_cells:
        section = rng.choice(FLOW)
        cells.append(rng.choice(section[0])(rng))
    return cells


def notebook_json(cells: list[CellSpec], rng, with_markdown: bool = True) -> dict:
    raw_cells = []
    counter = 1
    for spec in cells:
        if with_markdown and rng.random() < 0.25:
            raw_cells.append({
                "cell_type": "markdown",
                "metadata": {},
                "source": [line + "\n" for line in rng.choice(MARKDOWN_SNIPPETS).split("\n")],
            })
        # vary the two legal source encodings
        if rng.random() < 0.2:
            source = spec.source
        else:
            source = [line + "\n" for line in spec.source.split("\n")]
            if source:
                source[-1] = source[-1].rstrip("\n")
        raw_cells.append({
            "cell_type": "code",
            "execution_count": counter,
            "metadata": {},
            "outputs": spec.outputs,
            "source": source,
        })
        counter += 1
    return {
        "nbformat": 4,
        "nbformat_minor": rng.choice([4, 5]),
        "metadata": {
            "kernelspec": {"display_name": "Python 3", "language": "python", "name": "python3"},
            "language_info": {"name": "python", "version": "3.10.12"},
        },
        "cells": raw_cells,
    }


def _record_output_text(outputs: list[dict]) -> str:
    texts = []
    for out in outputs:
        if out.get("output_type") == "stream":
            texts.append("".join(out.get("text", [])))
        elif out.get("output_type") == "execute_result":
            texts.append("".join(out.get("data", {}).get("text/plain", [])))
    return "\n".join(t for t in texts if t)


def records_for(cells: list[CellSpec], notebook_id: str) -> list[dict]:
    records = []
    for spec in cells:
        records.append({
            "source": spec.source,
            "output_types": sorted({out["output_type"] for out in spec.outputs}),
            "output_text": _record_output_text(spec.outputs),
            "labels": sorted(spec.labels),
            "notebook_id": notebook_id,
        })
    return records


# --- handcrafted edge-case notebooks --------------------------------------

def edge_notebooks() -> dict[str, dict]:
    meta = {"kernelspec": {"display_name": "Python 3", "language": "python", "name": "python3"}}
    return {
        "edge_empty.ipynb": {
            "nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": [],
        },
        "edge_all_markdown.ipynb": {
            "nbformat": 4, "nbformat_minor": 5, "metadata": meta,
            "cells": [
                {"cell_type": "markdown", "metadata": {}, "source": ["# Only prose\n", "No code here.\n"]},
                {"cell_type": "markdown", "metadata": {}, "source": "Second block."},
            ],
        },
        "edge_unknown_fields.ipynb": {
            "nbformat": 4, "nbformat_minor": 5,
            "metadata": {"widgets": {"state": {"abc": {"value": 3}}}},
            "future_field": {"nested": [1, 2, {"deep": True}]},
            "cells": [
                {"cell_type": "code", "execution_count": 1, "metadata": {"collapsed": False},
                 "my_extension": {"pinned": True},
                 "outputs": [
                     {"output_type": "weird_custom", "payload": {"x": 1}},
                     stream("hello"),
                 ],
                 "source": ["print(\"hello\")\n"]},
            ],
        },
        "edge_unexecuted.ipynb": {
            "nbformat": 4, "nbformat_minor": 4, "metadata": meta,
            "cells": [
                {"cell_type": "code", "execution_count": None, "metadata": {}, "outputs": [],
                 "source": ["import pandas as pd\n"]},
                {"cell_type": "code", "execution_count": None, "metadata": {}, "outputs": [],
                 "source": ["df = pd.read_csv(\"data/train.csv\")\n", "df.head()"]},
            ],
        },
        "edge_pretagged.ipynb": {
            "nbformat": 4, "nbformat_minor": 5, "metadata": meta,
            "cells": [
                {"cell_type": "code", "execution_count": 1,
                 "metadata": {"tags": ["keep-me", "reviewed"]}, "outputs": [],
                 "source": ["x = 1\n"]},
                {"cell_type": "markdown", "metadata": {"tags": ["prose"]},
                 "source": ["Hand-written header\n"]},
            ],
        },
        "edge_raw_cell.ipynb": {
            "nbformat": 4, "nbformat_minor": 5, "metadata": meta,
            "cells": [
                {"cell_type": "raw", "metadata": {}, "source": ["raw content, not code\n"]},
                {"cell_type": "code", "execution_count": 1, "metadata": {}, "outputs": [],
                 "source": ["y = 2\n"]},
            ],
        },
        "edge_error_output.ipynb": {
            "nbformat": 4, "nbformat_minor": 5, "metadata": meta,
            "cells": [
                {"cell_type": "code", "execution_count": 1, "metadata": {},
                 "outputs": [{"output_type": "error", "ename": "ValueError",
                              "evalue": "bad shape",
                              "traceback": ["Traceback (most recent call last)",
                                            "ValueError: bad shape"]}],
                 "source": ["raise ValueError(\"bad shape\")\n"]},
            ],
        },
        "edge_string_source.ipynb": {
            "nbformat": 4, "nbformat_minor": 5, "metadata": meta,
            "cells": [
                {"cell_type": "code", "execution_count": 2, "metadata": {}, "outputs": [],
                 "source": "a = 1\na"},
            ],
        },
    }


# --- top-level builders ----------------------------------------------------

N_CONTENT = 16
N_EXTRA = 8
BENCH_CELLS = 32


def build_all():
    """Returns (notebooks: dict name -> raw json, dataset records list)."""
    rng = random.Random(SEED)
    notebooks: dict[str, dict] = {}
    records: list[dict] = []

    for i in range(N_CONTENT):
        nb_id = f"nb{i:02d}"
        cells = content_cells(rng, min_cells=14)
        notebooks[f"{nb_id}.ipynb"] = notebook_json(cells, rng)
        records.extend(records_for(cells, nb_id))

    # smaller assorted notebooks: corpus variety, not in the dataset
    for i in range(N_EXTRA):
        cells = content_cells(rng)[: rng.randint(5, 9)]
        notebooks[f"extra{i:02d}.ipynb"] = notebook_json(cells, rng)

    # the 32-cell notebook used by round-trip and bench reference tests
    bench_cells = content_cells(rng, min_cells=BENCH_CELLS)[:BENCH_CELLS]
    notebooks["bench32.ipynb"] = notebook_json(bench_cells, rng, with_markdown=False)

    notebooks.update(edge_notebooks())

    # two exact duplicates exercise dedupe in the eval path
    if records:
        records.append(dict(records[0]))
        records.append(dict(records[len(records) // 2]))
    return notebooks, records


def synth_corpus(directory: Path, n_notebooks: int, n_cells: int, seed: int) -> list[Path]:
    """Deterministic synthetic corpus for benchmarks and counting oracles."""
    rng = random.Random(seed)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_notebooks):
        cells = content_cells(rng, min_cells=n_cells)[:n_cells]
        doc = notebook_json(cells, rng, with_markdown=False)
        path = directory / f"synth{i:04d}.ipynb"
        path.write_text(json.dumps(doc, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def main() -> None:
    root = Path(__file__).resolve().parent.parent / "fixtures"
    nb_dir = root / "notebooks"
    nb_dir.mkdir(parents=True, exist_ok=True)
    notebooks, records = build_all()
    for name in sorted(notebooks):
        path = nb_dir / name
        path.write_text(json.dumps(notebooks[name], ensure_ascii=False, indent=1) + "\n",
                        encoding="utf-8")
    (root / "labeled_cells.json").write_text(
        json.dumps(records, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    n_cells = sum(1 for _ in records)
    print(f"wrote {len(notebooks)} notebooks and {n_cells} labeled cells under {root}")


if __name__ == "__main__":
    main()
