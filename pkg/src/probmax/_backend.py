"""Kernel backend selection.

The compiled extension is used when it imports; ``PROBMAX_BACKEND=python``
forces the numpy fallback and ``PROBMAX_BACKEND=cython`` makes a missing
extension an error.
"""

import importlib
import os

_CHOICE = os.environ.get("PROBMAX_BACKEND", "").strip().lower()


def load(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "cython":
        return importlib.import_module("probmax._kernels")
    if name == "python":
        return importlib.import_module("probmax._kernels_py")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


if _CHOICE == "python":
    kernels = load("python")
else:
    try:
        kernels = load("cython")
    except ImportError:
        if _CHOICE == "cython":
            raise
        kernels = load("python")

BACKEND = kernels.NAME
