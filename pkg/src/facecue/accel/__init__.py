"""Backend selection for the hot batch kernels.

Set FACECUE_BACKEND=numpy to force the pure-numpy fallback, or
FACECUE_BACKEND=numba to require the compiled kernels (import error if numba
is unavailable). Default: numba when importable, numpy otherwise.

Both backends expose the same four kernels (normalize_batch, features_batch,
ema_batch, segment_batch) with identical semantics.
"""

from __future__ import annotations

import os
from types import ModuleType

ENV_VAR = "FACECUE_BACKEND"

_active: ModuleType | None = None
_active_name = ""


def _load(name: str) -> ModuleType:
    if name == "numpy":
        from . import kernels_np

        return kernels_np
    if name == "numba":
        from . import kernels_nb

        return kernels_nb
    raise ValueError(f"unknown kernel backend {name!r} (expected 'numba' or 'numpy')")


def use_backend(name: str) -> str:
    """Explicitly select a backend (used by tests and the benchmark)."""
    global _active, _active_name
    _active = _load(name)
    _active_name = name
    return name


def backend_name() -> str:
    if _active is None:
        _init_from_env()
    return _active_name


def kernels() -> ModuleType:
    if _active is None:
        _init_from_env()
    return _active


def _init_from_env() -> None:
    requested = os.environ.get(ENV_VAR, "").strip().lower()
    if requested:
        use_backend(requested)
        return
    try:
        use_backend("numba")
    except ImportError:
        use_backend("numpy")
