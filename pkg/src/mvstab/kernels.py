"""Backend selection for the hot kernels.

The compiled extension (``mvstab._speedups``) is preferred; the NumPy
reference (``mvstab._purekernels``) is the drop-in fallback.  Set the
environment variable ``MVSTAB_PURE_PYTHON=1`` to force the fallback.
Both backends produce the same truncated products up to rounding; see
``benchmarks/bench_kernels.py`` for the speed comparison.
"""

from __future__ import annotations

import os

from . import _purekernels

_force_python = os.environ.get("MVSTAB_PURE_PYTHON", "").strip().lower() in (
    "1", "true", "yes", "on")

if _force_python:
    _impl = _purekernels
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _purekernels

BACKEND = _impl.BACKEND

truncated_product = _impl.truncated_product
nonlinear_coeffs = _impl.nonlinear_coeffs
make_rhs = _impl.make_rhs


def backend_name() -> str:
    return BACKEND
