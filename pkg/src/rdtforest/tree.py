"""Data-independent random decision trees.

A tree of height h is complete: 2^h - 1 inner nodes stored breadth-first,
2^h leaves. Each inner node holds an attribute index drawn uniformly at
random (with replacement — the same attribute may repeat along a path) and a
threshold: uniform in the attribute's public range for continuous
attributes, fixed at 0.5 for binary ones so that 0 goes left and 1 goes
right. Nothing in the structure depends on any data point.

Training is a single pass: route every point to its leaf and count labels.
A leaf's theta is the fraction of positive points in it; an empty leaf gets
a theta drawn uniformly from [0, 1] once, at training time, so the trained
tree is a frozen artifact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import AttributeSchema

THETA_COUNTED = 0
THETA_UNIFORM = 1


@dataclass(frozen=True)
class TreeStructure:
    """Complete random tree: attrs/thresholds per inner node, breadth-first."""

    height: int
    attrs: np.ndarray       # int32, (2^h - 1,)
    thresholds: np.ndarray  # float64, (2^h - 1,)

    def __post_init__(self):
        if self.height < 1:
            raise ValueError(f"height must be >= 1, got {self.height}")
        n_nodes = (1 << self.height) - 1
        if self.attrs.shape != (n_nodes,) or self.thresholds.shape != (n_nodes,):
            raise ValueError(f"expected {n_nodes} inner nodes for height {self.height}")

    @property
    def n_inner(self) -> int:
        return self.attrs.shape[0]

    @property
    def n_leaves(self) -> int:
        return self.attrs.shape[0] + 1

    def inner_node(self, i: int) -> tuple[int, float]:
        """(attribute, threshold) of inner node i in breadth-first order."""
        return int(self.attrs[i]), float(self.thresholds[i])


@dataclass(frozen=True)
class LeafStats:
    """Per-leaf training statistics, one entry per leaf.

    theta[j] is n_plus[j] / (n_plus[j] + n_minus[j]) for non-empty leaves
    (theta_source == THETA_COUNTED) and a cached uniform draw for empty ones
    (theta_source == THETA_UNIFORM).
    """

    n_plus: np.ndarray        # int64
    n_minus: np.ndarray       # int64
    theta: np.ndarray         # float64 in [0, 1]
    theta_source: np.ndarray  # uint8, THETA_COUNTED / THETA_UNIFORM

    @property
    def n_leaves(self) -> int:
        return self.theta.shape[0]


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_random_tree(schema: AttributeSchema, height: int, gen: np.random.Generator) -> TreeStructure:
    """Draw a random tree structure for ``schema``.

    Consumes exactly 2^h - 1 attribute draws and 2^h - 1 uniform draws from
    ``gen`` (threshold uniforms are drawn for every node and ignored at
    binary nodes, keeping the stream layout independent of the attribute
    draws).
    """
    if height < 1:
        raise ValueError(f"height must be >= 1, got {height}")
    n_nodes = (1 << height) - 1
    attrs = gen.integers(0, schema.m, size=n_nodes, dtype=np.int32)
    u = gen.random(n_nodes)
    lo = schema.lows[attrs]
    hi = schema.highs[attrs]
    thresholds = np.where(schema.is_binary[attrs], 0.5, lo + u * (hi - lo))
    return TreeStructure(height, _freeze(attrs), _freeze(np.ascontiguousarray(thresholds)))


def route(tree: TreeStructure, values: np.ndarray) -> int:
    """Leaf index in [0, 2^h) for one point; value <= threshold goes left."""
    return int(route_batch(tree, np.asarray(values, dtype=np.float64)[None, :])[0])


def route_batch(tree: TreeStructure, x: np.ndarray) -> np.ndarray:
    """Leaf indices for every row of ``x`` ((n, m) float64)."""
    return kernels.route_points(tree.attrs, tree.thresholds, np.ascontiguousarray(x))


def train_counts(tree: TreeStructure, x: np.ndarray, y: np.ndarray, gen: np.random.Generator) -> LeafStats:
    """Single training pass: count labels per leaf and fix every theta.

    Empty-leaf thetas are drawn from ``gen`` in ascending leaf order. An
    empty training set is allowed (every leaf then gets a uniform theta).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    n_plus, n_minus = kernels.route_and_count(tree.attrs, tree.thresholds, x, y)
    total = n_plus + n_minus
    empty = total == 0
    theta = np.zeros(tree.n_leaves, dtype=np.float64)
    np.divide(n_plus, total, out=theta, where=~empty)
    theta[empty] = gen.random(int(empty.sum()))
    source = np.where(empty, THETA_UNIFORM, THETA_COUNTED).astype(np.uint8)
    return LeafStats(_freeze(n_plus), _freeze(n_minus), _freeze(theta), _freeze(source))
