"""Laplace noise, leaf perturbation and privacy-budget accounting.

Leaf counters are count queries of global sensitivity 1: adding or removing
one training point changes exactly one counter of one leaf per tree by 1.
Publishing all k trees' noisy counters therefore costs k queries, and adding
Laplace noise with rate eta/k (scale k/eta) to every counter makes the whole
forest eta-differentially-private by sequential composition. The ledger
tracks the per-tree budget shares with exact rational arithmetic so the
total is eta exactly, not eta up to rounding.

After perturbation a leaf publishes only theta_p — the ratio of its noisy
counts — or, when the noisy counts are unusable (either negative, or both
exactly zero), a uniform draw from [0, 1].
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from . import rng
from .dataset import Dataset
from .errors import AlreadyPrivate, BadEta, BadRate, ConfigError, NotAdjacent, Untrained
from .forest import DP, PLAIN, Forest
from .tree import TreeStructure, route_batch

THETA_P_RATIO = 0
THETA_P_UNIFORM = 1


def laplace_from_uniform(u: np.ndarray | float, rate: float) -> np.ndarray | float:
    """Inverse-CDF transform: uniform draw(s) in [0, 1) to Laplace(rate).

    The density is (rate/2)·exp(-rate·|x|): mean 0, scale 1/rate, variance
    2/rate^2. u = 0.5 maps to the median 0.
    """
    if rate <= 0:
        raise BadRate(f"rate must be positive, got {rate}")
    u = np.asarray(u, dtype=np.float64)
    centered = u - 0.5
    interior = 1.0 - 2.0 * np.abs(centered)
    # u exactly 0 would give log(0); clamp to the smallest positive float.
    interior = np.maximum(interior, np.finfo(np.float64).tiny)
    out = -np.sign(centered) * np.log(interior) / rate
    return float(out) if out.ndim == 0 else out


def laplace_sample(rate: float, gen: np.random.Generator, size=None) -> np.ndarray | float:
    """Draw from the Laplace distribution with the given rate."""
    return laplace_from_uniform(gen.random(size), rate)


@dataclass(frozen=True)
class PrivacyParams:
    """Total budget eta split evenly over k queries (one per tree)."""

    eta: float
    k: int

    def __post_init__(self):
        if self.eta <= 0:
            raise BadEta(f"eta must be positive, got {self.eta}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")

    @property
    def per_query_rate(self) -> float:
        return self.eta / self.k

    @property
    def per_query_rate_exact(self) -> Fraction:
        """Exact share: per_query_rate_exact * k == Fraction(eta) exactly."""
        return Fraction(self.eta) / self.k


@dataclass(frozen=True)
class BudgetLedger:
    """Sequential-composition ledger: per-query budgets and their exact sum."""

    entries: tuple[tuple[str, Fraction], ...]

    @property
    def total(self) -> Fraction:
        return sum((eps for _, eps in self.entries), Fraction(0))

    @property
    def total_float(self) -> float:
        return float(self.total)


@dataclass(frozen=True)
class PerturbedLeaf:
    """Noisy counts and the published fraction for one leaf."""

    n_p_plus: float
    n_p_minus: float
    theta_p: float
    theta_p_source: int  # THETA_P_RATIO or THETA_P_UNIFORM


def perturbed_theta(
    n_p_plus: np.ndarray,
    n_p_minus: np.ndarray,
    fallback_theta: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Published fraction per leaf given already-noised counts.

    The fallback (a uniform theta) fires exactly when a noisy count is
    negative or both are exactly zero; otherwise the ratio of noisy counts
    is published. A zero numerator with a positive denominator is a valid
    ratio (theta_p = 0), not a fallback case.
    """
    fallback = (n_p_plus < 0) | (n_p_minus < 0) | ((n_p_plus == 0) & (n_p_minus == 0))
    theta_p = np.where(fallback, fallback_theta, 0.0)
    denom = n_p_plus + n_p_minus
    np.divide(n_p_plus, denom, out=theta_p, where=~fallback)
    source = np.where(fallback, THETA_P_UNIFORM, THETA_P_RATIO).astype(np.uint8)
    return theta_p, source


def perturb_leaf(
    n_plus: int,
    n_minus: int,
    params: PrivacyParams,
    gen: np.random.Generator,
    fallback_gen: np.random.Generator | None = None,
) -> PerturbedLeaf:
    """Perturb one leaf's counters.

    Consumes exactly two Laplace draws from ``gen`` (plus count first, then
    minus count). The uniform fallback theta, when needed, is drawn from
    ``fallback_gen`` (or ``gen`` if none is given) so the noise stream layout
    does not depend on which branch fires.
    """
    if n_plus < 0 or n_minus < 0:
        raise ConfigError("leaf counts must be non-negative")
    noise = laplace_sample(params.per_query_rate, gen, size=2)
    n_p_plus = float(n_plus + noise[0])
    n_p_minus = float(n_minus + noise[1])
    fb_gen = gen if fallback_gen is None else fallback_gen
    if n_p_plus < 0 or n_p_minus < 0 or (n_p_plus == 0 and n_p_minus == 0):
        return PerturbedLeaf(n_p_plus, n_p_minus, float(fb_gen.random()), THETA_P_UNIFORM)
    return PerturbedLeaf(n_p_plus, n_p_minus, n_p_plus / (n_p_plus + n_p_minus), THETA_P_RATIO)


def privatize_forest(forest: Forest, eta: float, seed: int, zero_noise: bool = False) -> Forest:
    """Publish noisy leaf fractions for a trained plain forest.

    Every leaf of every tree gets two Laplace draws at rate eta/k, consumed
    in deterministic order (tree index, then leaf index, plus before minus).
    The result is a dp-mode forest that carries only the published fractions
    and a ledger of k entries summing to eta exactly; the raw counts are
    dropped.

    ``zero_noise`` is a debug hook that skips the noise injection; the
    resulting forest is marked as NOT private.
    """
    if forest.mode == DP:
        raise AlreadyPrivate("forest already privatized; would double-spend the budget")
    if forest.leaves is None:
        raise Untrained("train the forest before privatizing it")
    params = PrivacyParams(eta, forest.k)

    published_theta = []
    published_source = []
    entries = []
    for i, stats in enumerate(forest.leaves):
        t = stats.n_leaves
        if zero_noise:
            noise = np.zeros((t, 2))
        else:
            noise = laplace_sample(
                params.per_query_rate, rng.substream(seed, rng.DP_NOISE, i), size=(t, 2)
            )
        fallback = rng.substream(seed, rng.DP_FALLBACK, i).random(t)
        theta_p, source = perturbed_theta(
            stats.n_plus + noise[:, 0], stats.n_minus + noise[:, 1], fallback
        )
        theta_p.setflags(write=False)
        source.setflags(write=False)
        published_theta.append(theta_p)
        published_source.append(source)
        entries.append((f"tree {i} leaf counters", params.per_query_rate_exact))

    return replace(
        forest,
        mode=DP,
        leaves=None,
        published_theta=tuple(published_theta),
        published_source=tuple(published_source),
        eta=eta,
        ledger=BudgetLedger(tuple(entries)),
        zero_noise=zero_noise,
    )


def leaf_count_query(tree: TreeStructure, leaf: int, label: int) -> Callable[[Dataset], float]:
    """Query counting the points with ``label`` in one leaf of one tree."""

    def query(ds: Dataset) -> float:
        leaves = route_batch(tree, ds.x)
        return float(np.count_nonzero((leaves == leaf) & (ds.y == label)))

    return query


def _point_multiset(ds: Dataset) -> Counter:
    return Counter((row.tobytes(), int(label)) for row, label in zip(ds.x, ds.y))


def check_adjacent(ds1: Dataset, ds2: Dataset) -> None:
    """Raise NotAdjacent unless the datasets differ in exactly one point.

    Accepts both neighborhood conventions: one point added/removed, or one
    point replaced.
    """
    c1, c2 = _point_multiset(ds1), _point_multiset(ds2)
    only1 = sum((c1 - c2).values())
    only2 = sum((c2 - c1).values())
    if (only1, only2) not in ((1, 0), (0, 1), (1, 1)):
        raise NotAdjacent(f"datasets differ in {only1 + only2} points, expected 1")


def dp_ratio_check(
    ds1: Dataset,
    ds2: Dataset,
    query: Callable[[Dataset], float],
    eta: float,
    trials: int,
    seed: int,
    bin_width: float = 0.5,
    min_bin_count: int | None = None,
) -> float:
    """Monte Carlo estimate of the worst log-probability ratio of a query.

    Runs the Laplace mechanism (rate eta, i.e. the whole budget on this one
    query) ``trials`` times on each dataset, bins the outputs, and returns
    the largest |log(P1(bin)/P2(bin))| over bins that are populated enough
    on both sides for the estimate to be statistically meaningful. For an
    eta-private mechanism the result should not exceed eta by more than
    sampling noise.
    """
    check_adjacent(ds1, ds2)
    if eta <= 0:
        raise BadEta(f"eta must be positive, got {eta}")
    if min_bin_count is None:
        min_bin_count = max(100, trials // 100)

    v1, v2 = query(ds1), query(ds2)
    out1 = v1 + laplace_sample(eta, rng.substream(seed, rng.DP_NOISE, 1), trials)
    out2 = v2 + laplace_sample(eta, rng.substream(seed, rng.DP_NOISE, 2), trials)

    bins1 = Counter(np.floor(out1 / bin_width).astype(np.int64).tolist())
    bins2 = Counter(np.floor(out2 / bin_width).astype(np.int64).tolist())
    worst = 0.0
    for b, c1 in bins1.items():
        c2 = bins2.get(b, 0)
        if c1 >= min_bin_count and c2 >= min_bin_count:
            worst = max(worst, abs(float(np.log(c1 / c2))))
    return worst
