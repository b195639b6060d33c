"""Kernel backend selection.

The compiled extension is preferred; the pure-Python fallback is used
when the extension is unavailable or when MCF_PURE_PYTHON is set.  Both
implement the same operations in the same order and agree bit for bit.
"""

import os

from . import _kernels_py

if os.environ.get("MCF_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

COMPILED = _impl.COMPILED
run_segment = _impl.run_segment

# certifier subtree enumeration exists only in the compiled kernel
cert_subtree = getattr(_impl, "cert_subtree", None)

OK = _kernels_py.OK
TERMINATED = _kernels_py.TERMINATED
NONFINITE = _kernels_py.NONFINITE

ALG_CODE = {
    "selmer": _kernels_py.SELMER,
    "cassaigne": _kernels_py.CASSAIGNE,
    "brun": _kernels_py.BRUN,
    "jacobi_perron": _kernels_py.JACOBI_PERRON,
    "intermediate": _kernels_py.INTERMEDIATE,
    "garrity": _kernels_py.GARRITY,
}


def backend_name() -> str:
    return "compiled" if COMPILED else "python"
