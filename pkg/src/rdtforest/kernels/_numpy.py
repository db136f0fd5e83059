"""NumPy lane of the hot kernels.

Semantically identical to the compiled lane in ``_compiled.pyx``; both are
pure functions of their inputs (no RNG), so either lane produces bit-equal
results. Routing walks a complete binary tree stored breadth-first: node i
has children 2i+1 (value <= threshold) and 2i+2 (value > threshold), and the
leaf index is the final node index minus the inner-node count.
"""

from __future__ import annotations

import numpy as np


def tree_height(n_nodes: int) -> int:
    """Height of a complete tree with ``n_nodes`` inner nodes (2^h - 1)."""
    h = (n_nodes + 1).bit_length() - 1
    if (1 << h) - 1 != n_nodes:
        raise ValueError(f"inner node count {n_nodes} is not 2^h - 1")
    return h


def route_points(attrs: np.ndarray, thresholds: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Leaf index in [0, 2^h) for every row of ``x``.

    ``attrs`` (int32, 2^h-1) and ``thresholds`` (float64, 2^h-1) describe the
    inner nodes breadth-first; ``x`` is (n, m) float64.
    """
    h = tree_height(attrs.shape[0])
    n = x.shape[0]
    cur = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    for _ in range(h):
        a = attrs[cur]
        right = x[rows, a] > thresholds[cur]
        cur = 2 * cur + 1 + right
    return cur - attrs.shape[0]


def leaf_counts(leaves: np.ndarray, y: np.ndarray, n_leaves: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-leaf counts of positive (y == 1) and negative (y == 0) points."""
    pos = np.bincount(leaves[y == 1], minlength=n_leaves).astype(np.int64)
    neg = np.bincount(leaves[y == 0], minlength=n_leaves).astype(np.int64)
    return pos, neg


def route_and_count(
    attrs: np.ndarray, thresholds: np.ndarray, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Fused training pass: route every point, then count labels per leaf."""
    leaves = route_points(attrs, thresholds, x)
    return leaf_counts(leaves, y, attrs.shape[0] + 1)


def route_and_gather(
    attrs: np.ndarray, thresholds: np.ndarray, x: np.ndarray, values: np.ndarray
) -> np.ndarray:
    """Fused classification pass: per-leaf ``values`` at each point's leaf."""
    return values[route_points(attrs, thresholds, x)]
