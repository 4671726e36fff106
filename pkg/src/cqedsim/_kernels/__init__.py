"""Stepping-kernel backend selection.

The compiled extension is preferred when it imported successfully; the
pure-numpy module implements the identical contract and is used otherwise.
Set ``CQEDSIM_KERNEL=python`` to force the fallback (used by the benchmark
and the backend-equivalence tests).
"""

import os

from . import _rk4_py

if os.environ.get("CQEDSIM_KERNEL", "").lower() == "python":
    _impl = _rk4_py
else:
    try:
        from . import _rk4_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _rk4_py

BACKEND: str = _impl.BACKEND
rk4_state = _impl.rk4_state
rk4_propagator = _impl.rk4_propagator
rk4_scalar = _impl.rk4_scalar

__all__ = ["BACKEND", "rk4_state", "rk4_propagator", "rk4_scalar"]
