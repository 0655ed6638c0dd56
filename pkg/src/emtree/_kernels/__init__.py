"""Kernel backend selection.

Prefers the compiled extension; falls back to the pure NumPy twin when the
extension is absent or when ``EMTREE_PURE_PYTHON`` is set (any non-empty
value). ``BACKEND`` reports which one is active.
"""

import os

if os.environ.get("EMTREE_PURE_PYTHON"):
    from . import _pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _pure as _impl

BACKEND = _impl.BACKEND
score_rows = _impl.score_rows
project = _impl.project
project_rows = _impl.project_rows
oja_pass = _impl.oja_pass
hashed_dot = _impl.hashed_dot
hashed_adagrad_update = _impl.hashed_adagrad_update

__all__ = [
    "BACKEND",
    "score_rows",
    "project",
    "project_rows",
    "oja_pass",
    "hashed_dot",
    "hashed_adagrad_update",
]
