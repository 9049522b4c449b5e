"""Backend switch for the compiled kernels.

Hot loops (maze rollouts, pairwise distances, Kendall pair counts) exist twice:
a numba ``@njit`` kernel and a pure-numpy path.  The numba path is used when
numba imports and ``PHENOSURR_NUMBA`` is not set to a false value
(``0``, ``false``, ``no``, ``off``).
"""
from __future__ import annotations

import os
from contextlib import contextmanager

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

ENV_FLAG = "PHENOSURR_NUMBA"


def _env_enabled() -> bool:
    return os.environ.get(ENV_FLAG, "1").strip().lower() not in {"0", "false", "no", "off"}


_enabled = HAVE_NUMBA and _env_enabled()


def numba_enabled() -> bool:
    return _enabled


def set_numba(flag: bool) -> None:
    global _enabled
    if flag and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _enabled = bool(flag)


def backend_name() -> str:
    return "numba" if _enabled else "numpy"


@contextmanager
def use_backend(name: str):
    """Temporarily select ``"numba"`` or ``"numpy"``."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    previous = _enabled
    set_numba(name == "numba")
    try:
        yield
    finally:
        set_numba(previous)


def njit(*args, **kwargs):
    """``numba.njit(cache=True)``, or a no-op decorator without numba."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)
