"""Backend selection for the inner-loop primitives.

The compiled extension is preferred when it imported cleanly; the NumPy
module is the fallback. Set LONGRUN_BACKEND=numpy or =extension to force a
choice (forcing the extension raises if it is unavailable, which makes CI
failures loud instead of silently slow).
"""
from __future__ import annotations

import os

_forced = os.environ.get("LONGRUN_BACKEND", "").strip().lower()
if _forced not in ("", "extension", "numpy"):
    raise ImportError(
        f"LONGRUN_BACKEND={_forced!r} not recognized; use 'extension' or 'numpy'"
    )

HAS_EXTENSION = False
if _forced != "numpy":
    try:
        from . import _recursions_cy as _impl  # type: ignore[attr-defined]

        HAS_EXTENSION = True
    except ImportError:
        if _forced == "extension":
            raise
        from . import _recursions as _impl
else:
    from . import _recursions as _impl

BACKEND = "extension" if HAS_EXTENSION else "numpy"

kernel_weighted_quadratic = _impl.kernel_weighted_quadratic
window_ar1_stats = _impl.window_ar1_stats
tvar_recursion = _impl.tvar_recursion

__all__ = [
    "BACKEND",
    "HAS_EXTENSION",
    "kernel_weighted_quadratic",
    "window_ar1_stats",
    "tvar_recursion",
]
