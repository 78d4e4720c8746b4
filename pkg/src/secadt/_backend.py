"""Selects the trace-checking kernel at import time.

The compiled ``secadt._checker`` extension is used when it was built;
otherwise, or when ``SECADT_PURE_PYTHON`` is set to a non-empty value, the
pure-Python ``secadt._checker_py`` is used. Both honour the same contract.
"""

import os

from secadt import _checker_py

try:
    from secadt import _checker as _compiled
except ImportError:  # extension not built
    _compiled = None

KERNELS = {"python": _checker_py}
if _compiled is not None:
    KERNELS["cython"] = _compiled

if _compiled is not None and not os.environ.get("SECADT_PURE_PYTHON"):
    DEFAULT = "cython"
else:
    DEFAULT = "python"


def get(name=None):
    """Kernel module by name; None selects the import-time default."""
    name = name or DEFAULT
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel {name!r}; have {sorted(KERNELS)}") from None


def available():
    return sorted(KERNELS)
