"""BLAS threadpool control.

The workloads here are many small-to-medium gemms; threaded OpenBLAS loses
badly to single-threaded on the narrow boxes this targets (spin-wait
overhead), and single-threaded execution is also what keeps runs exactly
reproducible.  Limit BLAS pools to one thread unless the caller opts out
with SKELDIFF_BLAS_THREADS=keep (or a thread count).
"""

import os


def apply_thread_policy() -> None:
    policy = os.environ.get("SKELDIFF_BLAS_THREADS", "1").lower()
    if policy == "keep":
        return
    try:
        limit = max(1, int(policy))
    except ValueError:
        limit = 1
    # prevent pools that are not created yet from oversubscribing
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(limit))
    try:
        import threadpoolctl
    except ImportError:
        return
    try:
        threadpoolctl.threadpool_limits(limits=limit, user_api="blas")
    except Exception:  # pragma: no cover - best effort on exotic BLAS builds
        pass
