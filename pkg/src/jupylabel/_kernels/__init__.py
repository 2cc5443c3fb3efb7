"""Tree-kernel backend selection.

The compiled Cython kernel is preferred; the pure-Python twin is the fallback.
Set JUPYLABEL_KERNEL=python (or =c) to force a backend, e.g. for the
benchmark in benchmarks/kernel_benchmark.py or for debugging.
"""

from __future__ import annotations

import os

from . import pytree

_forced = os.environ.get("JUPYLABEL_KERNEL", "").strip().lower()

_impl = None
if _forced in ("", "c"):
    try:
        from . import _ctree as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "c":
            raise ImportError(
                "JUPYLABEL_KERNEL=c but the compiled kernel is not built; "
                "reinstall the package or unset the variable"
            ) from None
elif _forced in ("python", "py", "pure"):
    _impl = pytree
else:
    raise ValueError(f"JUPYLABEL_KERNEL={_forced!r} (expected 'c' or 'python')")

if _impl is None:
    _impl = pytree

BACKEND_NAME: str = _impl.BACKEND_NAME
grow_tree = _impl.grow_tree
prepare_forest = _impl.prepare_forest
predict_margin = _impl.predict_margin


def get_backend(name: str):
    """Fetch a specific backend module ('c' or 'python'); used by tests and
    the kernel benchmark to compare both in one process."""
    if name == "python":
        return pytree
    if name == "c":
        from . import _ctree
        return _ctree
    raise ValueError(f"unknown kernel backend: {name!r}")
