"""Backend selection for the hot kernels.

Numba is used when importable unless ``PMVOS_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel runs its pure-numpy twin.
``set_backend`` switches at runtime (used by tests and the benchmark).
"""
import os

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def _env_disabled():
    return os.environ.get("PMVOS_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


_use_numba = NUMBA_AVAILABLE and not _env_disabled()


def use_numba():
    return _use_numba


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global _use_numba
    previous = backend()
    if name == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def backend():
    return "numba" if _use_numba else "numpy"
