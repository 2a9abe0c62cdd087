"""Kernel backend selection.

The compiled Cython module is used when it is importable; otherwise the
numpy fallback is used. Setting ``SCHWARZDD_BACKEND=python`` forces the
fallback (handy for benchmarks and for checking that both agree).
"""
import logging
import os

from . import _pykernels

logger = logging.getLogger(__name__)

kernels = _pykernels
BACKEND = "python"

if os.environ.get("SCHWARZDD_BACKEND", "").lower() not in ("python", "py", "numpy"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        logger.debug("compiled kernels unavailable, using numpy fallback")
    else:
        kernels = _ckernels
        BACKEND = "cython"


def get_kernels(name=None):
    """Return the kernel module called ``name`` ("cython" or "python").

    ``None`` gives the module selected at import.
    """
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
