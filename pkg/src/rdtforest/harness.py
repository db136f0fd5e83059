"""Experiment driver: grid sweeps, budget sweeps and benchmark tables.

The protocol per grid cell (h, k) and repetition r: re-split the dataset
with a fresh seed derived from (master seed, r), build and train a forest
of k height-h trees, perturb its leaves when running in dp mode, then score
the validation and test parts. Model selection picks the cell with the
smallest pooled validation error (ties go to the cheaper model: smaller k,
then smaller h) and reports its test error with a symmetric binomial 95%
confidence interval over the pooled classified points.

Everything is a pure function of (config, master seed): rows come out in
grid order regardless of worker scheduling, and result CSV files are
byte-identical across reruns. Wall-clock timings are therefore kept out of
the results file; ask for the optional timings sidecar if you want them.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import rng
from .dataset import Dataset, DatasetManifest, split
from .errors import ConfigError, EmptyInput, RdtError
from .forest import (
    DP,
    MAJORITY,
    PLAIN,
    PROBABILISTIC,
    RULES,
    THRESHOLD,
    build_forest,
    predict,
    train,
)
from .privacy import privatize_forest

DEFAULT_HEIGHTS = tuple(range(1, 16))
DEFAULT_KS = tuple(range(1, 22, 2))
ETA_SWEEP_KS = tuple(range(1, 102))

TABLE1_METHODS = (
    (PLAIN, MAJORITY),
    (PLAIN, THRESHOLD),
    (DP, MAJORITY),
    (DP, THRESHOLD),
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a dataset manifest plus the grid to explore."""

    manifest: DatasetManifest
    mode: str = PLAIN
    rule: str = MAJORITY
    heights: tuple[int, ...] = DEFAULT_HEIGHTS
    ks: tuple[int, ...] = DEFAULT_KS
    eta: float | None = None  # dp mode only; None = 1000 / training-set size
    runs: int = 10
    master_seed: int = 0
    zero_noise: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.mode not in (PLAIN, DP):
            raise ConfigError(f"mode must be {PLAIN} or {DP}, got {self.mode!r}")
        if self.rule not in RULES:
            raise ConfigError(f"unknown rule {self.rule!r}")
        if not self.heights or not self.ks:
            raise ConfigError("height and k grids must be non-empty")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")

    @property
    def method(self) -> str:
        return f"{self.mode}-{self.rule}"


@dataclass(frozen=True)
class ResultRow:
    """Outcome of one grid cell in one run (misses kept as raw counts)."""

    method: str
    h: int
    k: int
    eta: float | None
    run: int
    validation_misses: int
    validation_n: int
    test_misses: int
    test_n: int
    wall_time: float

    @property
    def validation_error(self) -> float:
        return 100.0 * self.validation_misses / self.validation_n if self.validation_n else 0.0

    @property
    def test_error(self) -> float:
        return 100.0 * self.test_misses / self.test_n if self.test_n else 0.0

    @property
    def ci95(self) -> float:
        return confidence_interval(self.test_misses, self.test_n) if self.test_n else 0.0


def confidence_interval(errors: int, n: int) -> float:
    """Symmetric binomial 95% CI half-width, in percent: 1.96 sqrt(p(1-p)/n)."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    p = errors / n
    return 1.96 * math.sqrt(p * (1 - p) / n) * 100.0


def auto_eta(ds: Dataset, test_frac: float) -> float:
    """Default privacy budget: 1000 over the training-portion size (n - |test|)."""
    n_test = math.floor(test_frac * ds.n)
    return 1000.0 / (ds.n - n_test)


def _misses(labels: np.ndarray, y: np.ndarray) -> int:
    return int(np.count_nonzero(labels != y))


def run_cell(ds: Dataset, config: ExperimentConfig, run: int, h: int, k: int) -> ResultRow:
    """Split, build, train, (privatize,) and score one grid cell."""
    started = time.perf_counter()
    man = config.manifest
    parts = split(
        ds,
        rng.spawn_seed(config.master_seed, rng.SPLIT, run),
        test_frac=man.test_frac,
        validation_frac=man.validation_frac,
    )
    forest = build_forest(ds.schema, h, k, rng.spawn_seed(config.master_seed, rng.CELL, run, h, k, 0))
    forest = train(forest, parts.train, rng.spawn_seed(config.master_seed, rng.CELL, run, h, k, 1))
    eta = None
    if config.mode == DP:
        eta = config.eta if config.eta is not None else auto_eta(ds, man.test_frac)
        forest = privatize_forest(
            forest, eta, rng.spawn_seed(config.master_seed, rng.CELL, run, h, k, 2),
            zero_noise=config.zero_noise,
        )
        if forest.ledger.total != Fraction(eta):
            raise RdtError(f"budget ledger total {forest.ledger.total} != eta {eta}")

    def score(part: Dataset, tag: int) -> int:
        if part.n == 0:
            return 0
        gen = rng.substream(config.master_seed, rng.PROB_VOTE, run, h, k, tag)
        labels, _ = predict(forest, part.x, config.rule, gen)
        return _misses(labels, part.y)

    return ResultRow(
        method=config.method,
        h=h,
        k=k,
        eta=eta,
        run=run,
        validation_misses=score(parts.validation, 0),
        validation_n=parts.validation.n,
        test_misses=score(parts.test, 1),
        test_n=parts.test.n,
        wall_time=time.perf_counter() - started,
    )


_WORKER: tuple[Dataset, ExperimentConfig] | None = None


def _worker_init(ds: Dataset, config: ExperimentConfig) -> None:
    global _WORKER
    _WORKER = (ds, config)


def _worker_cell(task: tuple[int, int, int]) -> ResultRow:
    run, h, k = task
    ds, config = _WORKER
    return run_cell(ds, config, run, h, k)


def run_grid(config: ExperimentConfig, ds: Dataset | None = None) -> list[ResultRow]:
    """All grid cells in grid order (h, then k, then run)."""
    if ds is None:
        ds = config.manifest.load()
    tasks = [(run, h, k) for h in config.heights for k in config.ks for run in range(config.runs)]
    if config.jobs <= 1:
        return [run_cell(ds, config, *task) for task in tasks]
    with ProcessPoolExecutor(
        max_workers=config.jobs, initializer=_worker_init, initargs=(ds, config)
    ) as pool:
        return list(pool.map(_worker_cell, tasks, chunksize=8))


@dataclass(frozen=True)
class BestCell:
    """Validation-selected grid cell with its pooled test error."""

    h: int
    k: int
    validation_error: float  # percent, pooled over runs
    test_error: float        # percent, pooled over runs
    ci95: float              # percent half-width at the pooled test count
    test_misses: int
    test_n: int


def select_best(rows: list[ResultRow]) -> BestCell:
    """Cell with the smallest pooled validation error (ties: smaller k, then h)."""
    if not rows:
        raise EmptyInput("no result rows")
    pooled: dict[tuple[int, int], list[int]] = {}
    for r in rows:
        acc = pooled.setdefault((r.h, r.k), [0, 0, 0, 0])
        acc[0] += r.validation_misses
        acc[1] += r.validation_n
        acc[2] += r.test_misses
        acc[3] += r.test_n

    def sort_key(item):
        (h, k), (vm, vn, _, _) = item
        err = Fraction(vm, vn) if vn else Fraction(0)
        return (err, k, h)

    (h, k), (vm, vn, tm, tn) = min(pooled.items(), key=sort_key)
    return BestCell(
        h=h,
        k=k,
        validation_error=100.0 * vm / vn if vn else 0.0,
        test_error=100.0 * tm / tn if tn else 0.0,
        ci95=confidence_interval(tm, tn) if tn else 0.0,
        test_misses=tm,
        test_n=tn,
    )


@dataclass(frozen=True)
class EtaSweepRow:
    """Best-k result for one (eta, h) pair."""

    method: str
    eta: float
    h: int
    k: int
    validation_error: float
    test_error: float
    ci95: float


def eta_sweep(
    config: ExperimentConfig,
    etas: tuple[float, ...],
    ds: Dataset | None = None,
) -> list[EtaSweepRow]:
    """Sweep the privacy budget; per (eta, h), pick k by validation error.

    Uses the config's k grid (default for this protocol is every integer in
    1..101 — pass ``ks=ETA_SWEEP_KS``).
    """
    if config.mode != DP:
        raise ConfigError("eta_sweep needs a dp-mode config")
    if not etas:
        raise ConfigError("eta grid must be non-empty")
    if ds is None:
        ds = config.manifest.load()
    out = []
    for eta in etas:
        for h in config.heights:
            rows = run_grid(replace(config, eta=eta, heights=(h,)), ds)
            best = select_best(rows)
            out.append(
                EtaSweepRow(
                    method=config.method,
                    eta=eta,
                    h=h,
                    k=best.k,
                    validation_error=best.validation_error,
                    test_error=best.test_error,
                    ci95=best.ci95,
                )
            )
    return out


@dataclass(frozen=True)
class MethodSummary:
    """One summary line of the benchmark table."""

    method: str
    test_error: float
    ci95: float
    k: int
    h: int
    validation_error: float


def reproduce_table1(
    manifest: DatasetManifest,
    master_seed: int,
    runs: int = 10,
    heights: tuple[int, ...] = DEFAULT_HEIGHTS,
    ks: tuple[int, ...] = DEFAULT_KS,
    eta: float | None = None,
    methods: tuple[tuple[str, str], ...] = TABLE1_METHODS,
    jobs: int = 1,
) -> tuple[list[MethodSummary], dict[str, list[ResultRow]]]:
    """Full-grid benchmark for each method; returns summaries and raw rows."""
    ds = manifest.load()
    summaries = []
    all_rows: dict[str, list[ResultRow]] = {}
    for index, (mode, rule) in enumerate(methods):
        config = ExperimentConfig(
            manifest=manifest,
            mode=mode,
            rule=rule,
            heights=heights,
            ks=ks,
            eta=eta,
            runs=runs,
            master_seed=rng.spawn_seed(master_seed, rng.CELL, index),
            jobs=jobs,
        )
        rows = run_grid(config, ds)
        best = select_best(rows)
        all_rows[config.method] = rows
        summaries.append(
            MethodSummary(
                method=config.method,
                test_error=best.test_error,
                ci95=best.ci95,
                k=best.k,
                h=best.h,
                validation_error=best.validation_error,
            )
        )
    return summaries, all_rows


# --- CSV emission -----------------------------------------------------------

RESULTS_HEADER = "# rdtforest-results v1"
RESULT_COLUMNS = (
    "method", "h", "k", "eta", "run",
    "validation_error", "test_error", "ci95",
    "validation_misses", "validation_n", "test_misses", "test_n",
)
SUMMARY_HEADER = "# rdtforest-summary v1"
SUMMARY_COLUMNS = ("method", "test_error", "ci95", "k", "h", "validation_error")
ETA_SWEEP_HEADER = "# rdtforest-eta-sweep v1"
ETA_SWEEP_COLUMNS = ("method", "eta", "h", "k", "validation_error", "test_error", "ci95")


def _fmt_eta(eta: float | None) -> str:
    return "" if eta is None else repr(eta)


def _fmt_pct(x: float) -> str:
    return f"{x:.4f}"


def write_rows_csv(rows: list[ResultRow], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write(RESULTS_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.method, r.h, r.k, _fmt_eta(r.eta), r.run,
                    _fmt_pct(r.validation_error), _fmt_pct(r.test_error), _fmt_pct(r.ci95),
                    r.validation_misses, r.validation_n, r.test_misses, r.test_n,
                ]
            )


def write_timings_csv(rows: list[ResultRow], path: str | Path) -> None:
    """Wall-clock sidecar; separate file because timings are never reproducible."""
    with Path(path).open("w", newline="") as fh:
        fh.write("# rdtforest-timings v1\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("method", "h", "k", "run", "wall_time_s"))
        for r in rows:
            writer.writerow((r.method, r.h, r.k, r.run, f"{r.wall_time:.6f}"))


def write_summary_csv(summaries: list[MethodSummary], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            writer.writerow(
                [s.method, _fmt_pct(s.test_error), _fmt_pct(s.ci95), s.k, s.h,
                 _fmt_pct(s.validation_error)]
            )


def write_eta_sweep_csv(rows: list[EtaSweepRow], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write(ETA_SWEEP_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ETA_SWEEP_COLUMNS)
        for r in rows:
            writer.writerow(
                [r.method, repr(r.eta), r.h, r.k,
                 _fmt_pct(r.validation_error), _fmt_pct(r.test_error), _fmt_pct(r.ci95)]
            )
