"""Backend selection for the compiled kernels.

The hot inner loops in :mod:`fepe._kernels` exist twice: a numba ``@njit``
version and a numpy/pure-Python fallback that computes identical results.
The active backend is chosen once at import from the ``FEPE_NUMBA``
environment variable (unset/``1`` = use numba when importable, ``0`` = force
the fallback) and can be overridden at runtime with :func:`set_backend`,
which the benchmark harness uses to time both paths in one process.
"""

import os

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    NUMBA_AVAILABLE = False

_FALSY = {"0", "false", "no", "off"}


def _env_choice() -> str:
    raw = os.environ.get("FEPE_NUMBA", "").strip().lower()
    if raw == "":
        return "auto"
    return "numpy" if raw in _FALSY else "numba"


_backend = _env_choice()


def set_backend(name: str) -> None:
    """Select ``"numba"``, ``"numpy"`` or ``"auto"`` at runtime."""
    if name not in ("numba", "numpy", "auto"):
        raise ValueError(f"unknown backend {name!r}")
    global _backend
    _backend = name


def backend_name() -> str:
    return "numba" if use_numba() else "numpy"


def use_numba() -> bool:
    if _backend == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("FEPE_NUMBA requested numba but it is not importable")
        return True
    if _backend == "numpy":
        return False
    return NUMBA_AVAILABLE
