"""Select the block-matching kernel implementation at import time.

The compiled extension is used when it imports; setting the environment
variable ``MOTIONSHOT_PURE=1`` forces the numpy fallback.
"""

import os

from . import _pure

if os.environ.get("MOTIONSHOT_PURE", "").strip() not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

kernels = _compiled if _compiled is not None else _pure
BACKEND = "cython" if _compiled is not None else "python"


def get_kernels(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for the default)."""
    if name is None:
        return kernels
    if name == "python":
        return _pure
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])
