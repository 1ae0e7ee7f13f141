"""Backend selection for the Cartan kernel.

The compiled extension is used when importable; setting the environment
variable ``FINSLERAREA_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
cartan_batch = _kernels_py.cartan_batch

if os.environ.get("FINSLERAREA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    else:
        cartan_batch = _compiled.cartan_batch
        BACKEND = "cython"
else:
    _compiled = None


def get_backend(name=None):
    """Return the ``cartan_batch`` implementation called ``name``.

    ``None`` gives the active one; ``"python"`` or ``"cython"`` pick
    explicitly (the latter raises if the extension is missing).
    """
    if name is None:
        return cartan_batch
    if name == "python":
        return _kernels_py.cartan_batch
    if name == "cython":
        if _compiled is None:
            from . import _kernels as mod
            return mod.cartan_batch
        return _compiled.cartan_batch
    raise ValueError(f"unknown backend {name!r}")
