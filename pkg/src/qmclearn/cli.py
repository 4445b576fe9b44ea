"""Command-line interface.

Subcommands: ``sample`` (emit point sets), ``eval`` (benchmark values for
a point file), ``variation`` (ladder/recursion variation of a benchmark),
``train`` (one training run or ensemble sweep), ``experiment`` (run a plan
file) and ``rates`` (fit convergence rates from a records file, with an
opt-in figure).
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import experiments as exp
from .benchmarks import benchmark_names, get_benchmark
from .network import save_model
from .sampling import UniformRandom, generate, parse_kind
from .training import (FAST_GRID, TABLE1_GRID, GridCell, cell_config,
                       derive_seed, ensemble_select, errors_on, train_one)
from .variation import GridFunction, Ladder, hardy_krause_with_refinement, \
    vitali_variation_on_ladder

#: the documented single-cell configuration used by ``train --grid single``
DEFAULT_CELL = GridCell(learning_rate=1e-3, weight_decay=1e-6, depth=4, width=24)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log per-cell progress.")
def main(verbose: bool):
    """Surrogate training on low-discrepancy point sets."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--kind", type=click.Choice(["sobol", "halton", "vdc", "random"]),
              required=True)
@click.option("--dim", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Stream seed (random kind only).")
@click.option("--start", type=int, default=1, show_default=True,
              help="First sequence index (deterministic kinds only).")
@click.option("--base", type=int, default=2, show_default=True,
              help="Radical-inverse base (vdc only).")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def sample(kind, dim, n, seed, start, base, out):
    """Write N points of the sampler to a CSV with header x1..xD."""
    ps = generate(parse_kind(kind, seed=seed, start=start, base=base), dim, n)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(dim)])
        for row in ps.points:
            writer.writerow([f"{v:.17g}" for v in row])
    click.echo(f"wrote {n} {kind} points to {out}")


def _read_points(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header)
        if header != [f"x{j + 1}" for j in range(dim)]:
            raise click.ClickException(f"expected header x1..x{dim} in {path}")
        rows = [[float(v) for v in row] for row in reader]
    return np.array(rows, dtype=np.float64).reshape(len(rows), dim)


@main.command("eval")
@click.option("--benchmark", "bench_name", required=True,
              help="One of: " + ", ".join(benchmark_names()))
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def eval_cmd(bench_name, in_path, out):
    """Evaluate a benchmark on a points CSV; one value per input row."""
    bench = get_benchmark(bench_name)
    points = _read_points(in_path)
    values = bench(points)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value"])
        for v in values:
            writer.writerow([f"{v:.17g}"])
    click.echo(f"wrote {len(values)} values to {out}")


@main.command()
@click.option("--map", "bench_name", required=True)
@click.option("--mesh", type=int, required=True)
@click.option("--method", type=click.Choice(["ladder", "recursion"]),
              required=True)
def variation(bench_name, mesh, method):
    """Variation of a benchmark map: ladder lower bound or smooth recursion.

    Prints the value at the requested mesh and the change against the
    half-resolution mesh.
    """
    bench = get_benchmark(bench_name)
    f = GridFunction(dim=bench.dim, fn=bench.evaluate, name=bench.name)
    if method == "ladder":
        value = vitali_variation_on_ladder(f, Ladder.uniform(bench.dim, mesh))
        coarse = vitali_variation_on_ladder(
            f, Ladder.uniform(bench.dim, max(1, mesh // 2)))
        delta = value - coarse
    else:
        value, delta = hardy_krause_with_refinement(f, mesh)
    click.echo(f"{value:.12g}")
    click.echo(f"refinement_delta {delta:.12g}")


@main.command()
@click.option("--benchmark", "bench_name", required=True)
@click.option("--sampler", type=click.Choice(["sobol", "halton", "vdc", "random"]),
              default="sobol", show_default=True)
@click.option("--n", type=int, required=True)
@click.option("--grid", type=click.Choice(["table1", "fast12", "single"]),
              default="single", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--activation", type=click.Choice(["sigmoid", "tanh", "relu"]),
              default="sigmoid", show_default=True)
@click.option("--batch-norm", is_flag=True)
@click.option("--epochs", type=int, default=20000, show_default=True)
@click.option("--test-size", type=int, default=8192, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "model_path", type=click.Path(dir_okay=False),
              required=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False),
              required=True)
def train(bench_name, sampler, n, grid, seed, activation, batch_norm, epochs,
          test_size, jobs, model_path, report_path):
    """Train one surrogate (or an ensemble sweep) and save model + report."""
    bench = get_benchmark(bench_name)
    started = time.perf_counter()
    if sampler == "random":
        train_ps = generate(UniformRandom(seed=derive_seed(seed, 1)), bench.dim, n)
        val_ps = generate(UniformRandom(seed=derive_seed(seed, 2)), bench.dim, 1024)
        test_ps = generate(UniformRandom(seed=derive_seed(seed, 3)), bench.dim,
                           test_size)
    else:
        train_ps = generate(parse_kind(sampler, start=1), bench.dim, n)
        test_ps = generate(parse_kind(sampler, start=n + 1), bench.dim, test_size)
        val_ps = generate(parse_kind(sampler, start=n + test_size + 1),
                          bench.dim, 1024)
    targets = bench(train_ps.points)
    test_targets = bench(test_ps.points)
    if grid == "single":
        cfg = cell_config(DEFAULT_CELL, bench.dim, activation, batch_norm,
                          p=2, epochs=epochs, seed=derive_seed(seed, 0))
        model = train_one(train_ps.points, targets, cfg)
        if model.diverged:
            raise click.ClickException("training run diverged")
    else:
        hyper = TABLE1_GRID if grid == "table1" else FAST_GRID
        cfg, model = ensemble_select(
            train_ps.points, targets, val_ps.points, bench(val_ps.points),
            hyper, seed=seed, activation=activation, batch_norm=batch_norm,
            epochs=epochs, jobs=jobs)
    gen_error = errors_on(model.params, test_ps.points, test_targets)
    wall_s = time.perf_counter() - started
    save_model(model.params, model_path)
    report = {
        "benchmark": bench_name, "sampler": sampler, "n": n,
        "config": {
            "learning_rate": cfg.learning_rate,
            "weight_decay": cfg.weight_decay,
            "loss_exponent": cfg.loss_exponent,
            "epochs": cfg.epochs,
            "seed": cfg.seed,
            "network": asdict(cfg.network),
        },
        "train_error": model.train_error,
        "gen_error": gen_error,
        "epochs_run": len(model.loss_trajectory) - 1,
        "best_epoch": model.best_epoch,
        "wall_seconds": wall_s,
    }
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    click.echo(f"E_T={model.train_error:.6e} E_G={gen_error:.6e} "
               f"({wall_s:.1f}s); model -> {model_path}, report -> {report_path}")


@main.command()
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--jobs", type=int, default=1, show_default=True)
def experiment(plan_path, out_dir, jobs):
    """Run a plan file; write records.csv and summary.json to OUT."""
    plan = exp.load_plan(plan_path)
    records, extras = exp.run_plan(plan, jobs=jobs)
    fits = {}
    for key, group in exp.group_records(records).items():
        if len(group) >= 3 and all(r.gen_error > 0 for r in group):
            fits[key] = exp.fit_rate(group)
    csv_path, json_path = exp.emit(records, fits, out_dir, extras)
    click.echo(f"wrote {csv_path} and {json_path}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Optional JSON output for the fits.")
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), default=None,
              help="Optional log-log figure rendered next to the data.")
def rates(in_path, out_path, plot_path):
    """Fit log-log convergence rates for each (benchmark, sampler) group."""
    records = exp.load(in_path)
    fits = {}
    for key, group in exp.group_records(records).items():
        fits[key] = exp.fit_rate(group)
        fit = fits[key]
        click.echo(f"{key[0]}/{key[1]}: slope={fit.slope:.4f} "
                   f"R2={fit.r_squared:.4f} window=[{fit.n_min}, {fit.n_max}]")
    if out_path:
        payload = [{"benchmark": b, "sampler": s, **asdict(fit)}
                   for (b, s), fit in fits.items()]
        with open(out_path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    if plot_path:
        from .plotting import render_rates
        render_rates(records, fits, plot_path)
        click.echo(f"figure -> {plot_path}")


if __name__ == "__main__":
    main()
