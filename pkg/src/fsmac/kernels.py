"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting ``FSMAC_PURE_PYTHON=1``
forces the numpy implementation. Both expose ``di_terms``, ``pair_likelihoods``
and ``ml_decode`` with identical semantics.
"""
from __future__ import annotations

import os

from . import _kernels_py

_compiled = None
if os.environ.get("FSMAC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND: str = _impl.BACKEND

di_terms = _impl.di_terms
pair_likelihoods = _impl.pair_likelihoods
ml_decode = _impl.ml_decode
bank_offsets = _kernels_py.bank_offsets


def compiled_available() -> bool:
    return _compiled is not None


def backend(name: str):
    """Return the kernel module named ``"cython"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
