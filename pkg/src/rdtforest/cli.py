"""Command-line interface.

Subcommands: train, predict, eval, sweep, eta-sweep, verify-theory,
reproduce-table1. Exit codes: 0 success, 2 configuration error, 3 data
error.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import click

from . import rng
from .dataset import load_manifest
from .errors import ConfigError, DataError
from .forest import DP, PLAIN, RULES, build_forest, predict, train
from .harness import (
    DEFAULT_HEIGHTS,
    DEFAULT_KS,
    ETA_SWEEP_KS,
    ExperimentConfig,
    auto_eta,
    eta_sweep,
    reproduce_table1,
    run_grid,
    write_eta_sweep_csv,
    write_rows_csv,
    write_summary_csv,
    write_timings_csv,
)
from .modelio import load_forest, save_forest
from .privacy import privatize_forest
from .theory import MonteCarloConfig, validate_bounds_monte_carlo


def parse_method(method: str) -> tuple[str, str]:
    """Split 'plain-majority' style method names into (mode, rule)."""
    mode, _, rule = method.partition("-")
    if mode not in (PLAIN, DP) or rule not in RULES:
        raise ConfigError(
            f"method must be one of "
            f"{', '.join(f'{m}-{r}' for m in (PLAIN, DP) for r in RULES)}; got {method!r}"
        )
    return mode, rule


def parse_grid(spec: str) -> tuple[int, ...]:
    """Parse '1:15', '1:21:2' (inclusive ranges) or '1,3,7' into a grid."""
    spec = spec.strip()
    try:
        if ":" in spec:
            parts = [int(p) for p in spec.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            values = tuple(range(start, stop + 1, step))
        else:
            values = tuple(int(p) for p in spec.split(","))
    except (ValueError, IndexError):
        raise ConfigError(f"bad grid spec {spec!r}") from None
    if not values:
        raise ConfigError(f"empty grid spec {spec!r}")
    return values


def _eta_value(eta: float | None, eta_auto: bool) -> float | None:
    if eta is not None and eta_auto:
        raise ConfigError("--eta and --eta-auto are mutually exclusive")
    return eta  # None means auto in dp mode


def _prepare_out(path: str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


@click.group()
def cli():
    """Random decision forests: plain and differentially-private."""


@cli.command("train")
@click.option("--dataset", "manifest_path", required=True, help="Dataset manifest (YAML).")
@click.option("--method", default="plain-majority", show_default=True,
              help="mode-rule; only the mode matters for training.")
@click.option("--h", "height", type=int, required=True, help="Tree height.")
@click.option("--k", type=int, required=True, help="Number of trees.")
@click.option("--eta", type=float, default=None, help="Privacy budget (dp mode).")
@click.option("--eta-auto", is_flag=True, help="Use 1000 / n as the budget.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--zero-noise", is_flag=True, help="Debug: dp pipeline without noise (NOT private).")
@click.option("--out", "out_path", required=True, help="Model file to write (.npz).")
def train_cmd(manifest_path, method, height, k, eta, eta_auto, seed, zero_noise, out_path):
    """Build and train a forest on the whole dataset, then save it."""
    mode, _ = parse_method(method)
    ds = load_manifest(manifest_path).load()
    forest = build_forest(ds.schema, height, k, rng.spawn_seed(seed, rng.CELL, 0))
    forest = train(forest, ds, rng.spawn_seed(seed, rng.CELL, 1))
    if mode == DP:
        eta = _eta_value(eta, eta_auto)
        if eta is None:
            eta = 1000.0 / ds.n
        forest = privatize_forest(forest, eta, rng.spawn_seed(seed, rng.CELL, 2),
                                  zero_noise=zero_noise)
        if zero_noise:
            click.echo("warning: zero-noise model; output is NOT private", err=True)
    save_forest(forest, _prepare_out(out_path))
    click.echo(f"saved {forest.mode} model: k={k} h={height} -> {out_path}")


@cli.command("predict")
@click.option("--model", "model_path", required=True)
@click.option("--dataset", "manifest_path", required=True,
              help="Dataset manifest; labels are read but ignored.")
@click.option("--rule", default="majority", show_default=True,
              type=click.Choice(RULES))
@click.option("--seed", type=int, default=0, show_default=True,
              help="Coin tosses for the probabilistic rule.")
@click.option("--out", "out_path", required=True, help="Predictions CSV.")
def predict_cmd(model_path, manifest_path, rule, seed, out_path):
    """Classify every point of a dataset and write index,label,score rows."""
    forest = load_forest(model_path)
    ds = load_manifest(manifest_path).load()
    labels, scores = predict(forest, ds.x, rule, rng.substream(seed, rng.PROB_VOTE))
    with _prepare_out(out_path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("index", "label", "score"))
        for i, (lab, score) in enumerate(zip(labels, scores)):
            writer.writerow((i, int(lab), repr(float(score))))
    click.echo(f"wrote {len(labels)} predictions -> {out_path}")


@cli.command("eval")
@click.option("--model", "model_path", required=True)
@click.option("--dataset", "manifest_path", required=True)
@click.option("--rule", default="majority", show_default=True, type=click.Choice(RULES))
@click.option("--seed", type=int, default=0, show_default=True)
def eval_cmd(model_path, manifest_path, rule, seed):
    """Report the misclassification rate of a saved model on a dataset."""
    forest = load_forest(model_path)
    ds = load_manifest(manifest_path).load()
    labels, _ = predict(forest, ds.x, rule, rng.substream(seed, rng.PROB_VOTE))
    misses = int((labels != ds.y).sum())
    click.echo(f"error={100.0 * misses / ds.n:.4f}% misses={misses} n={ds.n}")


@cli.command("sweep")
@click.option("--dataset", "manifest_path", required=True)
@click.option("--method", default="plain-majority", show_default=True)
@click.option("--h", "h_grid", default="1:15", show_default=True, help="Height grid.")
@click.option("--k", "k_grid", default="1:21:2", show_default=True, help="Tree-count grid.")
@click.option("--eta", type=float, default=None)
@click.option("--eta-auto", is_flag=True)
@click.option("--runs", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--zero-noise", is_flag=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "out_path", required=True, help="Result rows CSV.")
@click.option("--timings", "timings_path", default=None, help="Optional wall-time sidecar CSV.")
def sweep_cmd(manifest_path, method, h_grid, k_grid, eta, eta_auto, runs, seed,
              zero_noise, jobs, out_path, timings_path):
    """Run the full (h, k) grid and write one row per cell and run."""
    mode, rule = parse_method(method)
    config = ExperimentConfig(
        manifest=load_manifest(manifest_path),
        mode=mode,
        rule=rule,
        heights=parse_grid(h_grid),
        ks=parse_grid(k_grid),
        eta=_eta_value(eta, eta_auto),
        runs=runs,
        master_seed=seed,
        zero_noise=zero_noise,
        jobs=jobs,
    )
    rows = run_grid(config)
    write_rows_csv(rows, _prepare_out(out_path))
    if timings_path:
        write_timings_csv(rows, _prepare_out(timings_path))
    click.echo(f"wrote {len(rows)} rows -> {out_path}")


@cli.command("eta-sweep")
@click.option("--dataset", "manifest_path", required=True)
@click.option("--method", default="dp-majority", show_default=True)
@click.option("--etas", required=True, help="Comma-separated budgets, e.g. 0.01,0.1,1.")
@click.option("--h", "h_grid", default="5,10", show_default=True)
@click.option("--k", "k_grid", default="1:101", show_default=True)
@click.option("--runs", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "out_path", required=True)
def eta_sweep_cmd(manifest_path, method, etas, h_grid, k_grid, runs, seed, jobs, out_path):
    """Sweep the privacy budget; per (eta, h) the best k is picked by validation."""
    mode, rule = parse_method(method)
    try:
        eta_values = tuple(float(e) for e in etas.split(","))
    except ValueError:
        raise ConfigError(f"bad eta list {etas!r}") from None
    config = ExperimentConfig(
        manifest=load_manifest(manifest_path),
        mode=mode,
        rule=rule,
        heights=parse_grid(h_grid),
        ks=parse_grid(k_grid) if k_grid else ETA_SWEEP_KS,
        runs=runs,
        master_seed=seed,
        jobs=jobs,
    )
    rows = eta_sweep(config, eta_values)
    write_eta_sweep_csv(rows, _prepare_out(out_path))
    click.echo(f"wrote {len(rows)} rows -> {out_path}")


@cli.command("verify-theory")
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", type=int, default=64, show_default=True)
@click.option("--m", type=int, default=2, show_default=True)
@click.option("--height", type=int, default=2, show_default=True)
@click.option("--no-dp", is_flag=True, help="Skip the (slower) dp k-opt checks.")
@click.option("--out", "out_path", default=None, help="Report CSV.")
def verify_theory_cmd(trials, seed, n, m, height, no_dp, out_path):
    """Monte Carlo validation of the error bounds at desk scale."""
    config = MonteCarloConfig(trials=trials, n=n, m=m, height=height, dp_checks=not no_dp)
    report = validate_bounds_monte_carlo(config, seed)
    header = (
        f"{'check':<28}{'rule':<15}{'viol':>6}{'rate':>9}{'allowed':>9}"
        f"{'band':>8}{'bound~':>9}{'error~':>9}  status"
    )
    click.echo(header)
    for o in report.outcomes:
        click.echo(
            f"{o.name:<28}{o.rule:<15}{o.violations:>6}{o.violation_rate:>9.4f}"
            f"{o.allowed_rate:>9.4f}{o.band:>8.4f}{o.mean_bound:>9.4f}"
            f"{o.mean_error:>9.4f}  {'held' if o.passed else 'VIOLATED'}"
        )
    if out_path:
        with _prepare_out(out_path).open("w", newline="") as fh:
            fh.write("# rdtforest-theory-report v1\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ("check", "rule", "trials", "violations", "violation_rate",
                 "allowed_rate", "band", "mean_bound", "mean_error",
                 "vacuous_trials", "held")
            )
            for o in report.outcomes:
                writer.writerow(
                    (o.name, o.rule, o.trials, o.violations, f"{o.violation_rate:.6f}",
                     f"{o.allowed_rate:.6f}", f"{o.band:.6f}", f"{o.mean_bound:.6f}",
                     f"{o.mean_error:.6f}", o.vacuous_trials, int(o.passed))
                )
        click.echo(f"wrote report -> {out_path}")
    if not report.all_passed:
        raise ConfigError("at least one bound was violated more often than allowed")


@cli.command("reproduce-table1")
@click.option("--dataset", "manifest_path", required=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--runs", type=int, default=10, show_default=True)
@click.option("--h", "h_grid", default="1:15", show_default=True)
@click.option("--k", "k_grid", default="1:21:2", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out-dir", "out_dir", required=True)
def reproduce_table1_cmd(manifest_path, seed, runs, h_grid, k_grid, jobs, out_dir):
    """Benchmark table: best-validation cell per method, plus all raw rows.

    Runs the full grid for plain and dp forests under majority voting and
    threshold averaging (dp budget 1000 / training-portion size) and writes
    summary.csv plus one rows CSV per method. Output bytes depend only on
    (dataset, seed, grids, runs).
    """
    manifest = load_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries, all_rows = reproduce_table1(
        manifest,
        master_seed=seed,
        runs=runs,
        heights=parse_grid(h_grid),
        ks=parse_grid(k_grid),
        jobs=jobs,
    )
    write_summary_csv(summaries, out / "summary.csv")
    for method, rows in all_rows.items():
        write_rows_csv(rows, out / f"rows-{method}.csv")
    for s in summaries:
        click.echo(
            f"{s.method:<20} error={s.test_error:.2f}% ±{s.ci95:.2f} (k={s.k}, h={s.h})"
        )
    click.echo(f"wrote {out / 'summary.csv'}")


def main():
    try:
        cli.main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code if exc.exit_code else 2)
    except click.Abort:
        sys.exit(2)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(3)
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
