"""Hot-loop kernels with a compiled core and a NumPy fallback.

The compiled Cython lane is used when the extension built; otherwise the
NumPy lane takes over with identical semantics. Set ``RDTFOREST_KERNELS`` to
``compiled`` or ``numpy`` to force a lane (``compiled`` raises if the
extension is missing), or leave it at ``auto``.

Both lanes are deterministic pure functions — all random draws happen in the
calling layer — so the choice of lane never changes any result, only speed.
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

from . import _numpy

_requested = os.environ.get("RDTFOREST_KERNELS", "auto").lower()

if _requested not in ("auto", "compiled", "numpy"):
    raise ValueError(f"RDTFOREST_KERNELS must be auto, compiled or numpy, got {_requested!r}")

if _requested == "numpy":
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _compiled as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _numpy
        BACKEND = "numpy"

tree_height = _numpy.tree_height
route_points = _impl.route_points
leaf_counts = _impl.leaf_counts
route_and_count = _impl.route_and_count
route_and_gather = _impl.route_and_gather

__all__ = [
    "BACKEND",
    "tree_height",
    "route_points",
    "leaf_counts",
    "route_and_count",
    "route_and_gather",
    "available_backends",
]


def available_backends() -> dict[str, object]:
    """Importable lane modules keyed by name (for tests and benchmarks)."""
    lanes: dict[str, object] = {"numpy": _numpy}
    try:
        from . import _compiled

        lanes["compiled"] = _compiled
    except ImportError:
        pass
    return lanes
