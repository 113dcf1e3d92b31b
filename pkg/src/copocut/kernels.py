"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``COPOCUT_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from copocut import _fallback

try:
    from copocut import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and not os.environ.get("COPOCUT_PURE_PYTHON"):
    BACKEND = "compiled"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def anneal(q, betas, seed, reads, read_offset=0):
    return _impl.anneal(q, betas, seed, reads, read_offset)


def enumerate_min(q, tol):
    return _impl.enumerate_min(q, tol)
