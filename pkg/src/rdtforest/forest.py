"""Forests of random decision trees and the three classification rules.

A forest is k random trees of common height h. Classification routes a
point through every tree and aggregates the per-tree leaf fractions theta:

* majority voting — each tree votes positive iff its theta > 1/2; the forest
  answers positive iff strictly more than k/2 trees voted positive.
* threshold averaging — positive iff the mean of the k thetas exceeds 1/2.
* probabilistic averaging — positive with probability equal to that mean,
  with a fresh coin toss per classification.

Ties (vote count exactly k/2, mean exactly 1/2, or a leaf theta of exactly
1/2) always resolve to negative: the rules use strict inequalities.

In dp mode a forest carries only the published noisy fractions; raw counts
are not part of the object, so nothing here can leak them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from . import kernels, rng
from .dataset import AttributeSchema, Dataset
from .errors import AlreadyTrained, BadDelta, ConfigError, Untrained
from .tree import LeafStats, TreeStructure, build_random_tree, train_counts

if TYPE_CHECKING:
    from .privacy import BudgetLedger

PLAIN = "plain"
DP = "dp"

MAJORITY = "majority"
THRESHOLD = "threshold"
PROBABILISTIC = "probabilistic"
RULES = (MAJORITY, THRESHOLD, PROBABILISTIC)


@dataclass(frozen=True)
class Prediction:
    """One classification: label in {0, 1} and a score in [0, 1].

    The score is the positive-vote fraction under majority voting and the
    averaged theta under the two averaging rules.
    """

    label: int
    score: float


@dataclass(frozen=True)
class Forest:
    """k random trees plus, once trained, the per-tree leaf fractions.

    ``leaves`` holds full leaf statistics in plain mode. In dp mode only
    ``published_theta`` / ``published_source`` exist (the noisy fractions and
    whether each came from a count ratio or the uniform fallback).
    """

    schema: AttributeSchema
    height: int
    k: int
    trees: tuple[TreeStructure, ...]
    mode: str = PLAIN
    leaves: tuple[LeafStats, ...] | None = None
    published_theta: tuple[np.ndarray, ...] | None = None
    published_source: tuple[np.ndarray, ...] | None = None
    eta: float | None = None
    ledger: "BudgetLedger | None" = None
    zero_noise: bool = False

    @property
    def trained(self) -> bool:
        return self.leaves is not None or self.published_theta is not None

    def classification_theta(self) -> tuple[np.ndarray, ...]:
        """The per-tree theta arrays the classification rules read."""
        if self.mode == DP:
            if self.published_theta is None:
                raise Untrained("dp forest has no published leaf fractions")
            return self.published_theta
        if self.leaves is None:
            raise Untrained("forest is not trained")
        return tuple(ls.theta for ls in self.leaves)


def build_forest(schema: AttributeSchema, height: int, k: int, master_seed: int) -> Forest:
    """Construct k untrained random trees; tree i uses substream i of the seed."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    trees = tuple(
        build_random_tree(schema, height, rng.substream(master_seed, rng.TREE, i))
        for i in range(k)
    )
    return Forest(schema=schema, height=height, k=k, trees=trees)


def train(forest: Forest, train_set: Dataset, seed: int) -> Forest:
    """One pass of the training set through every tree; returns a new forest.

    Tree i's empty-leaf thetas come from substream i of ``seed``, so training
    different trees can run on parallel workers with identical results.
    """
    if forest.trained:
        raise AlreadyTrained("forest already carries leaf statistics")
    leaves = tuple(
        train_counts(t, train_set.x, train_set.y, rng.substream(seed, rng.TRAIN_THETA, i))
        for i, t in enumerate(forest.trees)
    )
    return replace(forest, leaves=leaves)


def _scores(forest: Forest, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(positive-vote fraction, mean theta) per row of x."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    thetas = forest.classification_theta()
    votes = np.zeros(x.shape[0], dtype=np.float64)
    total = np.zeros(x.shape[0], dtype=np.float64)
    for t, theta in zip(forest.trees, thetas):
        at_leaf = kernels.route_and_gather(t.attrs, t.thresholds, x, theta)
        votes += at_leaf > 0.5
        total += at_leaf
    return votes / forest.k, total / forest.k


def predict_majority(forest: Forest, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batch majority voting: (labels, vote fractions)."""
    vote_frac, _ = _scores(forest, x)
    return (vote_frac * forest.k > forest.k / 2).astype(np.uint8), vote_frac


def predict_threshold(forest: Forest, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batch threshold averaging: (labels, mean thetas)."""
    _, theta_d = _scores(forest, x)
    return (theta_d > 0.5).astype(np.uint8), theta_d


def predict_probabilistic(
    forest: Forest, x: np.ndarray, gen: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Batch probabilistic averaging: one fresh coin toss per point."""
    _, theta_d = _scores(forest, x)
    return (gen.random(theta_d.shape[0]) < theta_d).astype(np.uint8), theta_d


def classify_majority(forest: Forest, values: np.ndarray) -> Prediction:
    labels, scores = predict_majority(forest, np.asarray(values, dtype=np.float64)[None, :])
    return Prediction(int(labels[0]), float(scores[0]))


def classify_threshold(forest: Forest, values: np.ndarray) -> Prediction:
    labels, scores = predict_threshold(forest, np.asarray(values, dtype=np.float64)[None, :])
    return Prediction(int(labels[0]), float(scores[0]))


def classify_probabilistic(
    forest: Forest, values: np.ndarray, gen: np.random.Generator
) -> Prediction:
    labels, scores = predict_probabilistic(
        forest, np.asarray(values, dtype=np.float64)[None, :], gen
    )
    return Prediction(int(labels[0]), float(scores[0]))


def predict(
    forest: Forest, x: np.ndarray, rule: str, gen: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch on rule name; probabilistic needs a caller-supplied generator."""
    if rule == MAJORITY:
        return predict_majority(forest, x)
    if rule == THRESHOLD:
        return predict_threshold(forest, x)
    if rule == PROBABILISTIC:
        if gen is None:
            raise ConfigError("probabilistic rule needs a random generator")
        return predict_probabilistic(forest, x, gen)
    raise ConfigError(f"unknown rule {rule!r}")


def recommended_k(n: int, c_growth: float, delta: float) -> int:
    """Forest size (1+C)·ln(n)/(2·delta^2), rounded up to the next odd integer.

    Enough trees that a point whose per-tree success probability exceeds
    1/2 + delta is misclassified with probability below n^-C.
    """
    if not 0 < delta < 0.5:
        raise BadDelta(f"delta must be in (0, 1/2), got {delta}")
    if c_growth <= 0:
        raise ConfigError(f"C must be positive, got {c_growth}")
    if n < 2:
        raise ConfigError(f"n must be >= 2, got {n}")
    k = math.ceil((1 + c_growth) * math.log(n) / (2 * delta * delta))
    return k + 1 if k % 2 == 0 else k
