"""Hot kernels: Blocksworld distance search, importance scan, UCT argmax.

The compiled ``_fast`` extension is used when it was built; otherwise the
pure-Python ``_pure`` module is loaded. Set ``ROTREE_PURE_PYTHON=1`` to force
the fallback.
"""
import os

from . import _pure

if os.environ.get("ROTREE_PURE_PYTHON"):
    _impl = _pure
else:
    try:
        from . import _fast as _impl
    except ImportError:  # extension not built
        _impl = _pure

BACKEND = _impl.BACKEND
plan_distance = _impl.plan_distance
importance_scores = _impl.importance_scores
uct_argmax = _impl.uct_argmax


def implementations():
    """All importable kernel modules keyed by backend name."""
    found = {"python": _pure}
    try:
        from . import _fast
    except ImportError:
        pass
    else:
        found["cython"] = _fast
    return found
