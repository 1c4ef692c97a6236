"""Sparse factorization kernels with a compiled fast path.

The Cython extension ``_csparse`` is used when it was built; otherwise the
pure-Python twins in ``_fallback`` are used.  Set ``DCTRECOVER_BACKEND``
to ``python`` to force the fallback (``compiled`` to require the
extension).
"""

import os

from . import _fallback

try:
    from . import _csparse
except ImportError:  # extension not built
    _csparse = None

BACKENDS = {"python": _fallback}
if _csparse is not None:
    BACKENDS["compiled"] = _csparse


def _select():
    wanted = os.environ.get("DCTRECOVER_BACKEND", "").strip().lower()
    if wanted == "python":
        return "python"
    if wanted == "compiled":
        if _csparse is None:
            raise ImportError("DCTRECOVER_BACKEND=compiled but the extension is not built")
        return "compiled"
    return "compiled" if _csparse is not None else "python"


DEFAULT_BACKEND = _select()


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the import-time choice)."""
    if name is None:
        name = DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}") from None
