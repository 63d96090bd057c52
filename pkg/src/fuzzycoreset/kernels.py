"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over. ``FUZZY_CORESET_KERNELS=python`` forces the
fallback, ``FUZZY_CORESET_THREADS`` caps the OpenMP thread count (0 = auto).

Results are deterministic for a given backend. The two backends agree to
rounding error but not bit for bit.
"""
import os
from functools import partial

from . import _pykernels

KERNEL_NAMES = ("sq_dists", "nearest", "memberships_d2", "point_costs_d2",
                "memberships", "point_costs", "subset_costs")


def thread_count():
    raw = os.environ.get("FUZZY_CORESET_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("FUZZY_CORESET_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _load_compiled():
    if os.environ.get("FUZZY_CORESET_KERNELS", "").lower() in ("python", "py", "numpy"):
        return None
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


class _Backend:
    def __init__(self, module, name, threads=None):
        self.name = name
        for fn in KERNEL_NAMES:
            impl = getattr(module, fn)
            if threads is not None:
                impl = partial(impl, num_threads=threads)
            setattr(self, fn, impl)


def get_backend(name=None):
    """Return a kernel namespace: ``"compiled"``, ``"python"`` or the default."""
    if name == "python":
        return _Backend(_pykernels, "python")
    compiled = _load_compiled() if name in (None, "compiled") else None
    if compiled is None:
        if name == "compiled":
            raise ImportError("compiled kernels are not available")
        return _Backend(_pykernels, "python")
    return _Backend(compiled, "compiled", threads=thread_count())


_active = get_backend()
BACKEND = _active.name
sq_dists = _active.sq_dists
nearest = _active.nearest
memberships_d2 = _active.memberships_d2
point_costs_d2 = _active.point_costs_d2
memberships = _active.memberships
point_costs = _active.point_costs
subset_costs = _active.subset_costs
