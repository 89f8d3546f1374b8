"""Kernel backend selection.

The compiled extension (_core, built from _core.pyx) and the pure-numpy
module (_kernels_pure) expose the same three kernels. RYDMIMO_BACKEND
controls the choice: "ext", "pure", or "auto" (default: extension if it
built, numpy otherwise).
"""

import os

from . import _kernels_pure

_requested = os.environ.get("RYDMIMO_BACKEND", "auto").lower()

if _requested not in ("auto", "ext", "pure"):
    raise ValueError(f"RYDMIMO_BACKEND must be auto, ext, or pure; "
                     f"got {_requested!r}")

_ext = None
if _requested in ("auto", "ext"):
    try:
        from . import _core as _ext
    except ImportError:
        if _requested == "ext":
            raise ImportError(
                "RYDMIMO_BACKEND=ext but the compiled extension is not "
                "available; rebuild with `pip install -e .`"
            )

kernels = _ext if _ext is not None else _kernels_pure
BACKEND = kernels.BACKEND_NAME


def available_backends():
    names = ["pure"]
    try:
        from . import _core  # noqa: F401
        names.insert(0, "ext")
    except ImportError:
        pass
    return names


def get_kernels(name=None):
    """Kernel module by name ("ext"/"pure"); default is the active one."""
    if name is None or name == BACKEND:
        return kernels
    if name == "pure":
        return _kernels_pure
    if name == "ext":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
