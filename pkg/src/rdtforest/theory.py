"""Desk-scale oracle for the ensemble's accuracy and privacy bounds.

For all-binary schemas the space M of possible tree structures of height h
is finite (every inner node picks one of m attributes; thresholds are fixed
at 0.5), so three quantities can be computed exactly by enumeration:

* e — average tree accuracy over M, always in [1/2, 1];
* sigma(d) — goodness: the fraction of trees in M that vote d's label
  (a leaf votes positive iff its positive fraction strictly exceeds 1/2);
* w_d — weight: the mean over M of the fraction of d's leaf that shares
  d's label.

Two identities tie them together and are checked by the test suite: the
mean of sigma over the dataset equals e exactly, and the mean weight is at
least e^2 + (1-e)^2.

On top of those quantities, ``bound_report`` evaluates every closed-form
error/probability bound the package claims, and
``validate_bounds_monte_carlo`` measures how often trained forests actually
violate the claimed bounds, which must stay within each bound's stated
failure probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterator

import numpy as np

from . import kernels, rng
from .dataset import Dataset, binary_schema
from .errors import ConfigError, DomainError, SpaceTooLarge
from .forest import (
    MAJORITY,
    PROBABILISTIC,
    THRESHOLD,
    build_forest,
    predict,
    recommended_k,
    train,
)
from .privacy import privatize_forest


def tree_space_size(m: int, height: int) -> int:
    """Number of distinct inner-node attribute assignments: m^(2^h - 1)."""
    return m ** ((1 << height) - 1)


def enumerate_tree_space(m: int, height: int, cap: int = 10**6) -> Iterator[np.ndarray]:
    """Yield every attribute assignment (int32 arrays, breadth-first) once."""
    if m < 1 or height < 1:
        raise ConfigError(f"need m >= 1 and height >= 1, got m={m}, height={height}")
    size = tree_space_size(m, height)
    if size > cap:
        raise SpaceTooLarge(f"tree space has {size} structures, cap is {cap}")
    n_nodes = (1 << height) - 1
    for assignment in product(range(m), repeat=n_nodes):
        yield np.array(assignment, dtype=np.int32)


@dataclass(frozen=True)
class TreeSpaceStats:
    """Exact (or sampled) accuracy statistics of the tree space on a dataset."""

    e: float             # average tree accuracy, in [1/2, 1]
    sigma: np.ndarray    # per-point goodness, in [0, 1]
    weight: np.ndarray   # per-point weight, in [0, 1]
    tree_count: int
    exact: bool = True


def _accumulate(attrs, thresholds, x, y, correct, weight_sum):
    """One tree's contribution; returns its correctly-classified point count."""
    leaves = kernels.route_points(attrs, thresholds, x)
    pos, neg = kernels.leaf_counts(leaves, y, attrs.shape[0] + 1)
    leaf_pos = pos[leaves]
    leaf_neg = neg[leaves]
    vote_pos = leaf_pos > leaf_neg
    correct += np.where(y == 1, vote_pos, ~vote_pos)
    same = np.where(y == 1, leaf_pos, leaf_neg)
    weight_sum += same / (leaf_pos + leaf_neg)
    return int(np.maximum(pos, neg).sum())


def tree_space_stats(ds: Dataset, height: int, cap: int = 10**6) -> TreeSpaceStats:
    """Exhaustive e, sigma and w over the whole tree space (binary schemas)."""
    if not ds.schema.is_binary.all():
        raise ConfigError("exhaustive enumeration needs an all-binary schema")
    if ds.n == 0:
        raise ConfigError("dataset is empty")
    size = tree_space_size(ds.schema.m, height)
    if size > cap:
        raise SpaceTooLarge(f"tree space has {size} structures, cap is {cap}")
    thresholds = np.full((1 << height) - 1, 0.5)
    correct = np.zeros(ds.n, dtype=np.int64)
    weight_sum = np.zeros(ds.n, dtype=np.float64)
    acc_total = 0.0
    for attrs in enumerate_tree_space(ds.schema.m, height, cap):
        acc_total += _accumulate(attrs, thresholds, ds.x, ds.y, correct, weight_sum) / ds.n
    return TreeSpaceStats(
        e=acc_total / size,
        sigma=correct / size,
        weight=weight_sum / size,
        tree_count=size,
    )


def sampled_tree_space_stats(
    ds: Dataset, height: int, samples: int, seed: int
) -> TreeSpaceStats:
    """Estimate e, sigma and w by sampling random trees.

    The only option for continuous schemas, whose tree space is infinite;
    also useful when m^(2^h - 1) is too large to enumerate.
    """
    from .tree import build_random_tree  # local import: tree imports kernels only

    if ds.n == 0:
        raise ConfigError("dataset is empty")
    if samples < 1:
        raise ConfigError("need at least one sampled tree")
    correct = np.zeros(ds.n, dtype=np.int64)
    weight_sum = np.zeros(ds.n, dtype=np.float64)
    acc_total = 0.0
    for i in range(samples):
        t = build_random_tree(ds.schema, height, rng.substream(seed, rng.TREE, i))
        acc_total += _accumulate(t.attrs, t.thresholds, ds.x, ds.y, correct, weight_sum) / ds.n
    return TreeSpaceStats(
        e=acc_total / samples,
        sigma=correct / samples,
        weight=weight_sum / samples,
        tree_count=samples,
        exact=False,
    )


@dataclass(frozen=True)
class MuFractions:
    """Fractions of points whose goodness/weight clears each margin.

    ``at_margin`` uses 1/2 + delta; the ``_plus_1k`` / ``_plus_2k`` variants
    add 1/K and 2/K on top (the thresholds the generalization and dp bounds
    need). All six are reported rather than picking one.
    """

    sigma_at_margin: float
    sigma_plus_1k: float
    sigma_plus_2k: float
    weight_at_margin: float
    weight_plus_1k: float
    weight_plus_2k: float


def mu_fractions(stats: TreeSpaceStats, delta: float, occupancy: float) -> MuFractions:
    def frac(values: np.ndarray, threshold: float) -> float:
        return float(np.mean(values >= threshold))

    inv_k = 1.0 / occupancy
    return MuFractions(
        sigma_at_margin=frac(stats.sigma, 0.5 + delta),
        sigma_plus_1k=frac(stats.sigma, 0.5 + delta + inv_k),
        sigma_plus_2k=frac(stats.sigma, 0.5 + delta + 2 * inv_k),
        weight_at_margin=frac(stats.weight, 0.5 + delta),
        weight_plus_1k=frac(stats.weight, 0.5 + delta + inv_k),
        weight_plus_2k=frac(stats.weight, 0.5 + delta + 2 * inv_k),
    )


# --- closed-form bounds ----------------------------------------------------
#
# Small helpers shared by bound_report and the Monte Carlo suite. eps is
# 1 - e (the average tree error), delta the vote margin, occupancy the
# leaf-occupancy constant K (points in leaves holding fewer than n/(K 2^h)
# training points are ignored by the truncation arguments, which costs the
# 1/K corrections below), slack the concentration allowance c for the
# probabilistic rule's coin tosses.


def clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def majority_direct_bound(eps: float, delta: float, shift: float = 0.0) -> float:
    denom = 0.5 - delta - shift
    return math.inf if denom <= 0 else eps / denom


def threshold_direct_bound(eps: float, delta: float, shift: float = 0.0) -> float:
    denom = 0.5 - delta - shift
    return math.inf if denom <= 0 else (2 * eps - 2 * eps * eps) / denom


def probabilistic_direct_bound(eps: float, delta: float, slack: float) -> float:
    return 2 * eps - 2 * eps * eps + delta + slack


def dp_threshold_kopt_bound(eps: float) -> float:
    return 1 / 8 + 4.5 * eps - 5 * eps * eps


def dp_probabilistic_kopt_bound(eps: float) -> float:
    return 1 / 5 + 1.9 * eps - 2 * eps * eps


def phi_constant(delta: float, occupancy: float, height: int) -> float:
    return delta / (2 * (4 + delta) * (1 << height) * occupancy)


def lambda_constant(delta: float, occupancy: float, height: int) -> float:
    return delta / (24 * occupancy * (1 << height))


def gamma_constant(height: int) -> float:
    return 1.0 / ((1 << height) * 9600)


def generalization_tail(height: int, k: float, n: int, phi: float) -> float:
    return (1 << (height + 3)) * k * math.exp(-2 * n * phi * phi)


def k_proxy_cost(k: np.ndarray | float, n: int, eta: float, height: int) -> np.ndarray | float:
    """The dp error proxy f(k) = exp(-k/200) + 2k exp(-gamma sqrt(n) eta / k)."""
    a = gamma_constant(height) * math.sqrt(n) * eta
    k = np.asarray(k, dtype=np.float64)
    out = np.exp(-k / 200.0) + 2.0 * k * np.exp(-a / k)
    return float(out) if out.ndim == 0 else out


def dp_p1(k: float, delta: float, n: int, eta: float, occupancy: float, height: int) -> float:
    lam = lambda_constant(delta, occupancy, height)
    return 1 - n * (
        math.exp(-k * delta * delta / 2)
        + math.exp(-k / 2)
        + k * math.exp(-lam * n * eta / k)
    )


def dp_kopt_probability(k_opt: int, n: int, eta: float, height: int) -> float:
    return 1 - n * (k_proxy_cost(k_opt, n, eta, height) + math.exp(-n / 2))


def dp_kopt_probability_probabilistic(k_opt: int, n: int, eta: float, height: int) -> float:
    return 1 - n * (k_proxy_cost(k_opt, n, eta, height) + math.exp(-n / 2)) * (
        1 - math.exp(-n / 200)
    )


@dataclass(frozen=True)
class OptimalK:
    """Result of minimizing the dp error proxy f(k)."""

    k: int
    value: float
    at_boundary: bool  # True when the scan never saw f turn increasing


def optimal_k(
    n: int, eta: float, height: int, k_max: int | None = None, hard_cap: int = 200_000
) -> OptimalK:
    """Smallest integer minimizing f(k), by brute-force scan.

    Scans k = 1..k_max (default ceil(10 ln n) + 1000) and keeps extending
    the range until the last 100 values of f are strictly increasing or the
    hard cap is reached; ``at_boundary`` reports which one stopped the scan.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if eta <= 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    if height < 1:
        raise ConfigError(f"height must be >= 1, got {height}")
    if k_max is None:
        k_max = math.ceil(10 * math.log(max(n, 2))) + 1000
    limit = min(max(k_max, 101), hard_cap)
    while True:
        ks = np.arange(1, limit + 1, dtype=np.float64)
        f = k_proxy_cost(ks, n, eta, height)
        tail_increasing = bool(np.all(np.diff(f[-100:]) > 0))
        if tail_increasing or limit >= hard_cap:
            best = int(np.argmin(f))  # argmin takes the first minimum: smallest k
            return OptimalK(k=best + 1, value=float(f[best]), at_boundary=not tail_increasing)
        limit = min(limit * 2, hard_cap)


@dataclass(frozen=True)
class BoundInputs:
    """Inputs every closed-form bound is evaluated at.

    epsilon    one minus the average tree accuracy, in (0, 1/2]
    delta      per-tree vote margin above 1/2, in (0, 1/2)
    occupancy  leaf-occupancy constant K > 0 (the truncation arguments drop
               points in leaves with fewer than n/(K 2^h) training points)
    growth     confidence exponent C > 0 (failure probability ~ n^-C)
    slack      coin-toss concentration allowance c in (0, 1)
    height, k, n, eta  forest geometry, size, dataset size, privacy budget
    """

    epsilon: float
    delta: float
    occupancy: float
    growth: float
    slack: float
    height: int
    k: int
    n: int
    eta: float

    def __post_init__(self):
        checks = [
            (0 < self.epsilon <= 0.5, f"epsilon in (0, 1/2], got {self.epsilon}"),
            (0 < self.delta < 0.5, f"delta in (0, 1/2), got {self.delta}"),
            (self.occupancy > 0, f"occupancy K > 0, got {self.occupancy}"),
            (self.growth > 0, f"growth C > 0, got {self.growth}"),
            (0 < self.slack < 1, f"slack c in (0, 1), got {self.slack}"),
            (self.height >= 1, f"height >= 1, got {self.height}"),
            (self.k >= 1, f"k >= 1, got {self.k}"),
            (self.n >= 2, f"n >= 2, got {self.n}"),
            (self.eta > 0, f"eta > 0, got {self.eta}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DomainError(msg)


@dataclass(frozen=True)
class BoundReport:
    """Every closed-form bound, evaluated (raw, unclamped) at one input set.

    err1_* bound the training error of the plain rules, err2_* the held-out
    error; the dp_* family covers the private variants. p* fields are the
    probability guarantees attached to those bounds. Bounds can exceed 1 or
    probabilities drop below 0 at small n — those entries are vacuous but
    reported raw so vacuity is visible; use ``rows()`` for clamped values
    with an explicit flag.
    """

    inputs: BoundInputs
    err1_majority: float
    err1_threshold: float
    err1_prob: float
    err2_majority: float
    err2_threshold: float
    err2_prob: float
    dp_err1_majority: float
    dp_err1_threshold: float
    dp_err2_majority: float
    dp_err2_threshold: float
    dp_err1_prob: float
    dp_err2_prob: float
    dp_err_threshold_kopt: float
    dp_err_prob_kopt: float
    p1: float
    p2: float
    p1_prob: float
    p2_prob: float
    dp_p1: float
    dp_p2: float
    dp_p_threshold_kopt: float
    dp_p_prob_kopt: float
    phi: float
    lambda_: float
    gamma: float
    k_empirical: int
    k_generalization: int
    k_opt: int
    f_k_opt: float
    k_opt_at_boundary: bool

    _ERR_FIELDS = (
        "err1_majority", "err1_threshold", "err1_prob",
        "err2_majority", "err2_threshold", "err2_prob",
        "dp_err1_majority", "dp_err1_threshold",
        "dp_err2_majority", "dp_err2_threshold",
        "dp_err1_prob", "dp_err2_prob",
        "dp_err_threshold_kopt", "dp_err_prob_kopt",
    )
    _PROB_FIELDS = (
        "p1", "p2", "p1_prob", "p2_prob", "dp_p1", "dp_p2",
        "dp_p_threshold_kopt", "dp_p_prob_kopt",
    )

    def rows(self) -> list[tuple[str, float, float, bool]]:
        """(name, raw, clamped, vacuous) for every bound and probability."""
        out = []
        for name in self._ERR_FIELDS:
            raw = getattr(self, name)
            out.append((name, raw, clamp01(raw), raw >= 1.0))
        for name in self._PROB_FIELDS:
            raw = getattr(self, name)
            out.append((name, raw, clamp01(raw), raw <= 0.0))
        return out


def bound_report(inputs: BoundInputs) -> BoundReport:
    """Evaluate every closed-form bound at ``inputs``. Pure arithmetic."""
    eps, delta = inputs.epsilon, inputs.delta
    occ, growth, slack = inputs.occupancy, inputs.growth, inputs.slack
    h, k, n, eta = inputs.height, inputs.k, inputs.n, inputs.eta
    inv_k = 1.0 / occ

    phi = phi_constant(delta, occ, h)
    lam = lambda_constant(delta, occ, h)
    gamma = gamma_constant(h)

    k_emp = recommended_k(n, growth, delta)
    k_gen = recommended_k(n, growth, delta / 2)
    p1 = 1 - n ** (-growth)
    p1_prob = p1 * (1 - math.exp(-2 * n * slack * slack))
    dp_p = dp_p1(k, delta, n, eta, occ, h)
    tail_emp = generalization_tail(h, k_gen, n, phi)

    kopt = optimal_k(n, eta, h)

    return BoundReport(
        inputs=inputs,
        err1_majority=majority_direct_bound(eps, delta),
        err1_threshold=threshold_direct_bound(eps, delta),
        err1_prob=probabilistic_direct_bound(eps, delta, slack),
        err2_majority=majority_direct_bound(eps + inv_k, delta),
        err2_threshold=threshold_direct_bound(eps + inv_k, delta),
        err2_prob=probabilistic_direct_bound(eps + inv_k, delta, slack),
        dp_err1_majority=majority_direct_bound(eps, delta, shift=inv_k),
        dp_err1_threshold=threshold_direct_bound(eps, delta, shift=inv_k),
        dp_err2_majority=majority_direct_bound(eps, delta, shift=2 * inv_k),
        dp_err2_threshold=threshold_direct_bound(eps, delta, shift=2 * inv_k),
        dp_err1_prob=probabilistic_direct_bound(eps + inv_k, delta, slack),
        dp_err2_prob=probabilistic_direct_bound(eps + 2 * inv_k, delta, slack),
        dp_err_threshold_kopt=dp_threshold_kopt_bound(eps),
        dp_err_prob_kopt=dp_probabilistic_kopt_bound(eps),
        p1=p1,
        p2=p1 - tail_emp,
        p1_prob=p1_prob,
        p2_prob=p1_prob - tail_emp,
        dp_p1=dp_p,
        dp_p2=dp_p - generalization_tail(h, k, n, phi),
        dp_p_threshold_kopt=dp_kopt_probability(kopt.k, n, eta, h),
        dp_p_prob_kopt=dp_kopt_probability_probabilistic(kopt.k, n, eta, h),
        phi=phi,
        lambda_=lam,
        gamma=gamma,
        k_empirical=k_emp,
        k_generalization=k_gen,
        k_opt=kopt.k,
        f_k_opt=kopt.value,
        k_opt_at_boundary=kopt.at_boundary,
    )


# --- Monte Carlo validation -------------------------------------------------


def planted_binary_dataset(gen: np.random.Generator, n: int, m: int, label_noise: float) -> Dataset:
    """Random binary points whose label is attribute 0 flipped with some rate.

    Gives tree spaces with average accuracy well above 1/2, so the bounds
    under test are non-trivial.
    """
    x = gen.integers(0, 2, size=(n, m)).astype(np.float64)
    flips = (gen.random(n) < label_noise).astype(np.uint8)
    y = (x[:, 0].astype(np.uint8) ^ flips).astype(np.uint8)
    return Dataset.from_arrays(binary_schema(m), x, y)


@dataclass(frozen=True)
class MonteCarloConfig:
    """Shape of the Monte Carlo bound-validation suite.

    The defaults keep the tree space exhaustively enumerable (m=2, height 2)
    and pick a dp budget large enough that the k_opt probability guarantee
    is meaningfully positive at desk scale; with a small budget those
    guarantees are vacuous at any feasible n and the check degenerates to
    "cannot be violated".
    """

    trials: int = 200
    n: int = 64
    m: int = 2
    height: int = 2
    delta: float = 0.2
    growth: float = 1.0
    slack: float = 0.1
    occupancy: float = 40.0
    label_noise: float = 0.1
    dp_height: int = 1
    dp_eta: float | None = None
    dp_checks: bool = True

    def resolved_dp_eta(self) -> float:
        if self.dp_eta is not None:
            return self.dp_eta
        # Budget making gamma*sqrt(n)*eta = 4e4, so f(k_opt) ~ 5e-5 << 1/n.
        return 4e4 / (gamma_constant(self.dp_height) * math.sqrt(self.n))


@dataclass(frozen=True)
class CheckOutcome:
    """Violation tally for one bound over all trials."""

    name: str
    rule: str
    trials: int
    violations: int
    allowed_rate: float   # mean stated failure probability, clamped to [0, 1]
    band: float           # 3-sigma binomial band at allowed_rate
    mean_bound: float
    mean_error: float
    vacuous_trials: int   # trials where the bound was >= 1 (can't be violated)

    @property
    def violation_rate(self) -> float:
        return self.violations / self.trials

    @property
    def passed(self) -> bool:
        return self.violation_rate <= self.allowed_rate + self.band


@dataclass(frozen=True)
class ValidationReport:
    config: MonteCarloConfig
    outcomes: tuple[CheckOutcome, ...]

    @property
    def all_passed(self) -> bool:
        return all(o.passed for o in self.outcomes)


class _Tally:
    def __init__(self, name: str, rule: str):
        self.name = name
        self.rule = rule
        self.violations = 0
        self.allowed_sum = 0.0
        self.bound_sum = 0.0
        self.error_sum = 0.0
        self.vacuous = 0
        self.trials = 0

    def record(self, error: float, bound: float, allowed: float) -> None:
        self.trials += 1
        self.error_sum += error
        self.bound_sum += bound
        self.allowed_sum += clamp01(allowed)
        if bound >= 1.0:
            self.vacuous += 1
        if error > bound + 1e-12:
            self.violations += 1

    def outcome(self) -> CheckOutcome:
        allowed = self.allowed_sum / self.trials
        band = 3 * math.sqrt(allowed * (1 - allowed) / self.trials)
        return CheckOutcome(
            name=self.name,
            rule=self.rule,
            trials=self.trials,
            violations=self.violations,
            allowed_rate=allowed,
            band=band,
            mean_bound=self.bound_sum / self.trials,
            mean_error=self.error_sum / self.trials,
            vacuous_trials=self.vacuous,
        )


def _error_rate(labels: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(labels != y))


def validate_bounds_monte_carlo(
    config: MonteCarloConfig,
    seed: int,
    generator: Callable[[np.random.Generator, MonteCarloConfig], Dataset] | None = None,
) -> ValidationReport:
    """Measure how often freshly built forests violate each claimed bound.

    Per trial: draw a dataset, compute its exact tree-space statistics,
    build and train the forest sizes the bounds prescribe, measure training
    and held-out errors under each rule, and compare against the bounds. A
    bound's violation frequency must stay within its stated failure
    probability plus sampling noise; that comparison is the caller's (or the
    test suite's) job — this function just reports the tallies.
    """
    if generator is None:
        def generator(gen, cfg):  # noqa: ANN001 - small local default
            return planted_binary_dataset(gen, cfg.n, cfg.m, cfg.label_noise)

    c = config
    tallies = {
        "goodness-mu-majority": _Tally("goodness-mu-majority", MAJORITY),
        "weight-mu-threshold": _Tally("weight-mu-threshold", THRESHOLD),
        "direct-majority": _Tally("direct-majority", MAJORITY),
        "direct-threshold": _Tally("direct-threshold", THRESHOLD),
        "direct-probabilistic": _Tally("direct-probabilistic", PROBABILISTIC),
        "gen-goodness-mu-majority": _Tally("gen-goodness-mu-majority", MAJORITY),
        "gen-weight-mu-threshold": _Tally("gen-weight-mu-threshold", THRESHOLD),
        "gen-direct-majority": _Tally("gen-direct-majority", MAJORITY),
        "gen-direct-threshold": _Tally("gen-direct-threshold", THRESHOLD),
        "gen-direct-probabilistic": _Tally("gen-direct-probabilistic", PROBABILISTIC),
    }
    if c.dp_checks:
        tallies["dp-kopt-threshold"] = _Tally("dp-kopt-threshold", THRESHOLD)
        tallies["dp-kopt-probabilistic"] = _Tally("dp-kopt-probabilistic", PROBABILISTIC)
        dp_eta = c.resolved_dp_eta()
        kopt = optimal_k(c.n, dp_eta, c.dp_height)
        dp_allowed_t = clamp01(1 - dp_kopt_probability(kopt.k, c.n, dp_eta, c.dp_height))
        dp_allowed_p = clamp01(
            1 - dp_kopt_probability_probabilistic(kopt.k, c.n, dp_eta, c.dp_height)
        )

    k_emp = recommended_k(c.n, c.growth, c.delta)
    k_gen = recommended_k(c.n, c.growth, c.delta / 2)
    allowed_emp = clamp01(c.n ** (-c.growth))
    allowed_prob = clamp01(
        1 - (1 - c.n ** (-c.growth)) * (1 - math.exp(-2 * c.n * c.slack * c.slack))
    )
    phi = phi_constant(c.delta, c.occupancy, c.height)
    tail = generalization_tail(c.height, k_gen, c.n, phi)
    allowed_gen = clamp01(1 - ((1 - allowed_emp) - tail))
    allowed_gen_prob = clamp01(1 - ((1 - allowed_prob) - tail))

    for trial in range(c.trials):
        ds = generator(rng.substream(seed, rng.DATAGEN, trial, 0), c)
        stats = tree_space_stats(ds, c.height)
        eps = 1 - stats.e
        mu = mu_fractions(stats, c.delta, c.occupancy)

        fr = train(
            build_forest(ds.schema, c.height, k_emp, rng.spawn_seed(seed, rng.CELL, trial, 0)),
            ds,
            rng.spawn_seed(seed, rng.CELL, trial, 1),
        )
        err_mv = _error_rate(predict(fr, ds.x, MAJORITY)[0], ds.y)
        err_ta = _error_rate(predict(fr, ds.x, THRESHOLD)[0], ds.y)
        err_pa = _error_rate(
            predict(fr, ds.x, PROBABILISTIC, rng.substream(seed, rng.PROB_VOTE, trial, 0))[0],
            ds.y,
        )
        tallies["goodness-mu-majority"].record(err_mv, 1 - mu.sigma_at_margin, allowed_emp)
        tallies["weight-mu-threshold"].record(err_ta, 1 - mu.weight_at_margin, allowed_emp)
        tallies["direct-majority"].record(err_mv, majority_direct_bound(eps, c.delta), allowed_emp)
        tallies["direct-threshold"].record(err_ta, threshold_direct_bound(eps, c.delta), allowed_emp)
        tallies["direct-probabilistic"].record(
            err_pa, probabilistic_direct_bound(eps, c.delta, c.slack), allowed_prob
        )

        # Held-out half: fresh test set from the same distribution; the
        # goodness/weight thresholds gain 1/K and the tree error 1/K.
        ds_test = generator(rng.substream(seed, rng.DATAGEN, trial, 1), c)
        stats_test = tree_space_stats(ds_test, c.height)
        eps_test = 1 - stats_test.e
        mu_test = mu_fractions(stats_test, c.delta, c.occupancy)
        fr_gen = train(
            build_forest(ds.schema, c.height, k_gen, rng.spawn_seed(seed, rng.CELL, trial, 2)),
            ds,
            rng.spawn_seed(seed, rng.CELL, trial, 3),
        )
        gerr_mv = _error_rate(predict(fr_gen, ds_test.x, MAJORITY)[0], ds_test.y)
        gerr_ta = _error_rate(predict(fr_gen, ds_test.x, THRESHOLD)[0], ds_test.y)
        gerr_pa = _error_rate(
            predict(fr_gen, ds_test.x, PROBABILISTIC, rng.substream(seed, rng.PROB_VOTE, trial, 1))[0],
            ds_test.y,
        )
        inv_k = 1.0 / c.occupancy
        tallies["gen-goodness-mu-majority"].record(gerr_mv, 1 - mu_test.sigma_plus_1k, allowed_gen)
        tallies["gen-weight-mu-threshold"].record(gerr_ta, 1 - mu_test.weight_plus_1k, allowed_gen)
        tallies["gen-direct-majority"].record(
            gerr_mv, majority_direct_bound(eps_test + inv_k, c.delta), allowed_gen
        )
        tallies["gen-direct-threshold"].record(
            gerr_ta, threshold_direct_bound(eps_test + inv_k, c.delta), allowed_gen
        )
        tallies["gen-direct-probabilistic"].record(
            gerr_pa, probabilistic_direct_bound(eps_test + inv_k, c.delta, c.slack), allowed_gen_prob
        )

        if c.dp_checks:
            stats_dp = tree_space_stats(ds, c.dp_height)
            eps_dp = 1 - stats_dp.e
            fr_dp = train(
                build_forest(ds.schema, c.dp_height, kopt.k, rng.spawn_seed(seed, rng.CELL, trial, 4)),
                ds,
                rng.spawn_seed(seed, rng.CELL, trial, 5),
            )
            fr_dp = privatize_forest(fr_dp, dp_eta, rng.spawn_seed(seed, rng.CELL, trial, 6))
            dp_err_ta = _error_rate(predict(fr_dp, ds.x, THRESHOLD)[0], ds.y)
            dp_err_pa = _error_rate(
                predict(fr_dp, ds.x, PROBABILISTIC, rng.substream(seed, rng.PROB_VOTE, trial, 2))[0],
                ds.y,
            )
            tallies["dp-kopt-threshold"].record(
                dp_err_ta, dp_threshold_kopt_bound(eps_dp), dp_allowed_t
            )
            tallies["dp-kopt-probabilistic"].record(
                dp_err_pa, dp_probabilistic_kopt_bound(eps_dp), dp_allowed_p
            )

    return ValidationReport(config=c, outcomes=tuple(t.outcome() for t in tallies.values()))
