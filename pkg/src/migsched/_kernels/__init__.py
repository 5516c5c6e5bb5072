"""Numerical kernels with a compiled core and a pure-Python fallback.

``_core`` (Cython) is preferred; ``_plain`` (numpy) is selected when the
extension is missing or ``MIGSCHED_PURE=1`` is set.  Both expose the same
three functions; ``BACKEND`` names the one in use.
"""

import os

if os.environ.get("MIGSCHED_PURE"):
    from . import _plain as _impl

    BACKEND = "plain"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _plain as _impl

        BACKEND = "plain"

seg_eval = _impl.seg_eval
seg_eval_grad = _impl.seg_eval_grad
grid_min = _impl.grid_min

__all__ = ["BACKEND", "seg_eval", "seg_eval_grad", "grid_min"]
