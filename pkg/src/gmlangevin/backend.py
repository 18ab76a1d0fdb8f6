"""Selection of the Langevin step kernel implementation.

Two interchangeable kernels exist: a Cython extension (``gmlangevin._kernels``)
and a pure-NumPy fallback (``gmlangevin._ref``).  Both are deterministic given
identical inputs, but they are not bit-identical to each other (their squared
distance reductions accumulate in different orders), so a result file records
which backend produced it.

The active backend is chosen at import time from the environment variable
``GMLANGEVIN_BACKEND``: ``cython`` or ``numpy`` force one (erroring if the
forced one is unavailable), anything else or unset means "cython if compiled,
else numpy".
"""

from __future__ import annotations

import os

from . import _ref

_impls: dict[str, object] = {"numpy": _ref.ld_block}
try:  # pragma: no cover - exercised only when the extension is built
    from . import _kernels  # type: ignore[attr-defined]

    _impls["cython"] = _kernels.ld_block
except ImportError:
    _kernels = None

_active: str = ""


def _choose() -> str:
    want = os.environ.get("GMLANGEVIN_BACKEND", "auto").strip().lower()
    if want in ("cython", "numpy"):
        if want not in _impls:
            raise RuntimeError(
                f"GMLANGEVIN_BACKEND={want!r} requested but that backend is not "
                "available (the compiled extension did not import)"
            )
        return want
    return "cython" if "cython" in _impls else "numpy"


_active = _choose()


def available() -> tuple[str, ...]:
    """Names of the kernels that imported successfully."""
    return tuple(sorted(_impls))


def active_name() -> str:
    return _active


def kernel(name: str | None = None):
    """The ld_block implementation for `name` (default: the active backend)."""
    key = _active if name is None else name
    try:
        return _impls[key]
    except KeyError:
        raise RuntimeError(f"backend {key!r} is not available; have {available()}") from None


def force(name: str) -> str:
    """Switch the active backend (used by benchmarks and tests); returns the old one."""
    global _active
    if name not in _impls:
        raise RuntimeError(f"backend {name!r} is not available; have {available()}")
    old = _active
    _active = name
    return old
