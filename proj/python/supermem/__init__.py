"""Supermarket model with memory: fluid limits, fast-chain analysis, simulation."""

import os
import sys

try:
    from supermem._core import *  # noqa: F401,F403
    from supermem import _core as core
except ImportError:
    # In-tree testing: the compiled module lives in the build directory.
    _dir = os.environ.get("SUPERMEM_CORE_DIR")
    if not _dir:
        raise
    sys.path.insert(0, _dir)
    import _core as core  # noqa: F401

    _names = [n for n in dir(core) if not n.startswith("_")]
    globals().update({n: getattr(core, n) for n in _names})
    del _names

__version__ = "0.1.0"
