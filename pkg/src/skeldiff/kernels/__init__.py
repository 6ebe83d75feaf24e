"""Kernel backend selection.

SKELDIFF_KERNELS=numpy forces the pure-numpy path, =numba requires numba,
anything else (or unset) picks numba when it imports and falls back to
numpy otherwise.  ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

_requested = os.environ.get("SKELDIFF_KERNELS", "auto").lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"SKELDIFF_KERNELS must be auto, numba or numpy, got {_requested!r}")

if _requested == "numpy":
    from . import numpy_impl as _impl
else:
    try:
        from . import numba_impl as _impl
    except ImportError:
        if _requested == "numba":
            raise
        from . import numpy_impl as _impl

BACKEND = _impl.NAME

temporal_conv_forward = _impl.temporal_conv_forward
temporal_conv_backward = _impl.temporal_conv_backward
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward
dtw_accumulate = _impl.dtw_accumulate
