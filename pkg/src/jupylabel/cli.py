"""Command-line interface: label, train, eval, bench, strip.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 model/format-version
mismatch, 4 partial failure (some notebooks in a batch failed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .evalkit import DEFAULT_BLOCKLIST, evaluate_dataset, load_dataset, render_metrics_table, report_to_json
from .gbdt import ArtifactError, VersionMismatch, load_model_set, save_model_set, model_set_to_json
from .labels import sort_labels
from .notebook import NotebookError, parse_notebook, serialize_notebook
from .pipeline import (
    MODE_HEADERS,
    MODE_TAGS,
    PipelineConfig,
    ROUTING_CELL_LEVEL,
    ROUTING_PER_ACTIVITY,
    annotate_notebook,
    classify_notebook,
    strip_annotations,
    table_to_json,
)
from .training import TrainConfig, train_model_set
from .evalkit import SplitSpec
from .gbdt import Hyperparams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VERSION = 3
EXIT_PARTIAL = 4

MODEL_ENV_VAR = "JUPYLABEL_MODEL"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; the contract is 1
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="jupylabel",
                     description="Classify Jupyter notebook code cells by ML activity.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, model=False):
        p.add_argument("--input", action="append", required=True,
                       help="notebook file/directory (repeatable; directories are searched recursively)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--debug", action="store_true",
                       help="stream per-cell rule hits and model probabilities to stderr")
        if model:
            p.add_argument("--model", default=None,
                           help=f"model artifact path (falls back to ${MODEL_ENV_VAR})")

    label = sub.add_parser("label", help="annotate notebooks with activity labels")
    add_common(label, model=True)
    label.add_argument("--output-dir", default=None)
    label.add_argument("--in-place", action="store_true")
    label.add_argument("--mode", choices=(MODE_HEADERS, MODE_TAGS), default=MODE_HEADERS)
    label.add_argument("--routing", choices=(ROUTING_PER_ACTIVITY, ROUTING_CELL_LEVEL),
                       default=ROUTING_PER_ACTIVITY)
    label.add_argument("--export-table", action="store_true",
                       help="write a classification-table JSON next to each output")
    label.add_argument("--jobs", type=int, default=1)

    strip = sub.add_parser("strip", help="remove generated annotations")
    add_common(strip)
    strip.add_argument("--output-dir", default=None)
    strip.add_argument("--in-place", action="store_true")
    strip.add_argument("--jobs", type=int, default=1)

    train = sub.add_parser("train", help="train the eight activity models")
    add_common(train, model=True)

    ev = sub.add_parser("eval", help="score the pipeline against a gold dataset")
    add_common(ev, model=True)
    ev.add_argument("--routing", choices=(ROUTING_PER_ACTIVITY, ROUTING_CELL_LEVEL),
                    default=ROUTING_PER_ACTIVITY)
    ev.add_argument("--blocklist", default=None,
                    help="file with one exclusion regex per line (default: Kaggle-interface patterns)")
    ev.add_argument("--output-dir", default=None,
                    help="also write the metrics report as JSON here")

    bench = sub.add_parser("bench", help="measure labeling throughput")
    add_common(bench, model=True)
    bench.add_argument("--repeat", type=int, default=10)
    bench.add_argument("--jobs", type=int, default=1)

    return parser


def _discover_notebooks(inputs) -> list[Path]:
    found: list[Path] = []
    for raw in inputs:
        path = Path(raw)
        if path.is_dir():
            found.extend(sorted(path.rglob("*.ipynb")))
        elif path.is_file():
            found.append(path)
        else:
            raise FileNotFoundError(f"input not found: {path}")
    # outputs are keyed by path, so ordering never changes results
    return sorted(set(found))


def _model_path(args) -> Path:
    raw = getattr(args, "model", None) or os.environ.get(MODEL_ENV_VAR)
    if not raw:
        raise UsageError(f"--model is required (or set ${MODEL_ENV_VAR})")
    return Path(raw)


def _load_models(args):
    path = _model_path(args)
    if not path.is_file():
        raise FileNotFoundError(f"model artifact not found: {path}")
    models = load_model_set(path)
    for model in models.models.values():
        model.prepared_forest()  # build routing tables before any threading
    return models


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _output_path(nb_path: Path, args, suffix: str, roots: dict[Path, Path]) -> Path:
    if args.in_place:
        return nb_path
    name = nb_path.name[:-len(".ipynb")] + suffix
    if args.output_dir:
        out_root = Path(args.output_dir)
        for root, base in roots.items():
            if nb_path.is_relative_to(root):
                return out_root / nb_path.parent.relative_to(root) / name
        return out_root / name
    return nb_path.with_name(name)


def _input_roots(inputs) -> dict[Path, Path]:
    return {Path(raw): Path(raw) for raw in inputs if Path(raw).is_dir()}


def _debug_table(nb_path, table, stream) -> None:
    for row in table.rows:
        hits = " ".join(f"{h.rule_id}({h.evidence})" for h in row.rule_hits) or "-"
        probs = " ".join(f"{lab.value}={p:.6f}" for lab, p in sorted(
            row.model_probs.items(), key=lambda kv: kv[0].value)) or "-"
        labels = ",".join(lab.value for lab in sort_labels(row.labels)) or "<unlabeled>"
        print(f"[debug] {nb_path} cell {row.stable_index} rules: {hits} "
              f"probs: {probs} labels: {labels}", file=stream)


def _run_batch(paths, worker, jobs: int):
    failures = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda p: _safe(worker, p), paths))
    else:
        results = [_safe(worker, p) for p in paths]
    for path, err in zip(paths, results):
        if err is not None:
            failures.append((path, err))
            print(f"error: {path}: {err}", file=sys.stderr)
    if failures and len(failures) == len(paths):
        return EXIT_IO
    if failures:
        return EXIT_PARTIAL
    return EXIT_OK


def _safe(worker, path):
    try:
        worker(path)
        return None
    except (NotebookError, OSError, ValueError) as exc:
        return exc


def _cmd_label(args) -> int:
    models = _load_models(args)
    cfg = PipelineConfig(routing=args.routing)
    paths = _discover_notebooks(args.input)
    roots = _input_roots(args.input)

    def worker(nb_path: Path) -> None:
        nb = parse_notebook(nb_path.read_text(encoding="utf-8"))
        table = classify_notebook(nb, models, cfg)
        annotated = annotate_notebook(nb, table, args.mode)
        out_path = _output_path(nb_path, args, ".labeled.ipynb", roots)
        _atomic_write(out_path, serialize_notebook(annotated))
        if args.export_table:
            table_path = out_path.with_name(out_path.name[:-len(".ipynb")] + ".table.json")
            _atomic_write(table_path, table_to_json(table))
        if args.debug:
            _debug_table(nb_path, table, sys.stderr)

    return _run_batch(paths, worker, args.jobs)


def _cmd_strip(args) -> int:
    paths = _discover_notebooks(args.input)
    roots = _input_roots(args.input)

    def worker(nb_path: Path) -> None:
        nb = parse_notebook(nb_path.read_text(encoding="utf-8"))
        out_path = _output_path(nb_path, args, ".stripped.ipynb", roots)
        _atomic_write(out_path, serialize_notebook(strip_annotations(nb)))

    return _run_batch(paths, worker, args.jobs)


def _cmd_train(args) -> int:
    if len(args.input) != 1:
        raise UsageError("train takes exactly one --input labeled-dataset JSON")
    out_path = _model_path(args)
    ds = load_dataset(args.input[0])
    cfg = TrainConfig(split=SplitSpec(seed=args.seed), hyperparams=Hyperparams(seed=args.seed))
    model_set, report = train_model_set(ds, cfg)
    _atomic_write(out_path, model_set_to_json(model_set))
    _atomic_write(Path(str(out_path) + ".report.json"),
                  json.dumps(report, ensure_ascii=False, indent=1))
    if args.debug:
        print(json.dumps(report["activities"], indent=1), file=sys.stderr)
    print(f"wrote {out_path} ({len(model_set.models)} models)")
    return EXIT_OK


def _read_blocklist(path) -> tuple[str, ...]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return tuple(line.strip() for line in lines if line.strip() and not line.startswith("#"))


def _cmd_eval(args) -> int:
    if len(args.input) != 1:
        raise UsageError("eval takes exactly one --input labeled-dataset JSON")
    models = _load_models(args)
    ds = load_dataset(args.input[0])
    blocklist = _read_blocklist(args.blocklist) if args.blocklist else DEFAULT_BLOCKLIST
    run = evaluate_dataset(ds, models, PipelineConfig(routing=args.routing), blocklist=blocklist)
    if args.debug:
        _debug_table(args.input[0], run.table, sys.stderr)
    print(render_metrics_table(run.report))
    if args.output_dir:
        _atomic_write(Path(args.output_dir) / "metrics.json", report_to_json(run.report))
    return EXIT_OK


def _cmd_bench(args) -> int:
    models = None
    load_start = time.perf_counter()
    models = _load_models(args)
    load_seconds = time.perf_counter() - load_start
    paths = _discover_notebooks(args.input)
    if not paths:
        raise UsageError("bench needs at least one notebook")
    texts = [p.read_text(encoding="utf-8") for p in paths]
    cfg = PipelineConfig()

    def label_once(text: str) -> None:
        nb = parse_notebook(text)
        table = classify_notebook(nb, models, cfg)
        serialize_notebook(annotate_notebook(nb, table, MODE_HEADERS))

    start = time.perf_counter()
    for _ in range(args.repeat):
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                list(pool.map(label_once, texts))
        else:
            for text in texts:
                label_once(text)
    total = time.perf_counter() - start
    result = {
        "notebooks": len(paths),
        "repeats": args.repeat,
        "artifact_load_s": round(load_seconds, 6),
        "total_s": round(total, 6),
        "mean_s_per_notebook": round(total / (len(paths) * args.repeat), 6),
    }
    print(json.dumps(result, indent=1))
    return EXIT_OK


_COMMANDS = {
    "label": _cmd_label,
    "strip": _cmd_strip,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VersionMismatch, ArtifactError) as exc:
        print(f"model artifact error: {exc}", file=sys.stderr)
        return EXIT_VERSION
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NotebookError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
