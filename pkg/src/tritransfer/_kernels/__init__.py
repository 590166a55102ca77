"""Kernel backend selection.

The compiled Cython extension is preferred; the numpy/pure-Python fallback is
used when the extension is missing or ``TRITRANSFER_PURE_PYTHON=1`` is set.
Both backends expose ``clip_tri_tri``, ``locate_many``, and
``find_intersections`` with identical contracts.
"""

import os

from . import _pure

if os.environ.get("TRITRANSFER_PURE_PYTHON"):
    _backend = _pure
    BACKEND = "pure"
else:
    try:
        from . import _compiled as _backend
        BACKEND = "compiled"
    except ImportError:
        _backend = _pure
        BACKEND = "pure"

clip_tri_tri = _backend.clip_tri_tri
locate_many = _backend.locate_many
find_intersections = _backend.find_intersections

pure = _pure


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('compiled', 'pure', or None for
    the active backend); used by the parity tests and benchmarks."""
    if name is None or name == BACKEND:
        return _backend
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _compiled
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")
