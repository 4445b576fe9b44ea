"""Convergence studies over training-set size: planning, running, emitting.

A plan names one benchmark, the sampler kinds to compare, a schedule of
training-set sizes and a grid mode.  Running it trains per the sampler's
reporting convention -- deterministic sequences report the best model of
the ensemble, random sampling reports the average over retrainings (both
sides can be forced to the averaged convention) -- and produces one record
per (sampler, N) with the errors, the selected hyperparameters and the
wall time.  Records go to a fixed-column CSV that loads back losslessly;
rate fits and spread statistics go to a JSON summary next to it.

Deterministic-sequence test and validation sets are later stretches of
the same sequence (test starts right after the largest training prefix),
so they never overlap any training set.  Random test/validation sets come
from their own derived streams.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, asdict, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .benchmarks import get_benchmark
from .sampling import PointSet, UniformRandom, generate, parse_kind
from .training import (FAST_GRID, TABLE1_GRID, GridCell, HyperGrid,
                       TrainConfig, cell_config, derive_seed, ensemble_select,
                       errors_on, retrain_statistics, train_one)

logger = logging.getLogger(__name__)

_DETERMINISTIC_SAMPLERS = ("sobol", "halton", "vdc")

# stream tags for seed derivation
_TAG_TRAIN, _TAG_VAL, _TAG_TEST, _TAG_RUN = 1, 2, 3, 4

CSV_COLUMNS = ("benchmark", "sampler", "n", "train_error", "gen_error",
               "learning_rate", "weight_decay", "depth", "width", "seed",
               "wall_ms")


@dataclass(frozen=True)
class ExperimentRecord:
    """One (benchmark, sampler, N) cell of a convergence study."""

    benchmark: str
    sampler: str
    n: int
    train_error: float
    gen_error: float
    learning_rate: float
    weight_decay: float
    depth: int
    width: int
    seed: int
    wall_ms: float

    def __post_init__(self):
        if not (np.isfinite(self.train_error) and self.train_error >= 0):
            raise ValueError("train_error must be finite and nonnegative")
        if not (np.isfinite(self.gen_error) and self.gen_error >= 0):
            raise ValueError("gen_error must be finite and nonnegative")


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log2(error) against log2(N)."""

    slope: float
    intercept: float
    r_squared: float
    n_min: int
    n_max: int
    count: int


@dataclass(frozen=True)
class ExperimentPlan:
    """Declarative description of one convergence study."""

    benchmark: str
    samplers: tuple = ("sobol", "random")
    n_schedule: tuple = (16, 32, 64, 128, 256, 512, 1024)
    grid: str = "fast12"                 # "table1", "fast12" or "fixed"
    cell: Optional[GridCell] = None      # required when grid == "fixed"
    repeats: int = 100
    seed: int = 0
    test_size: int = 8192
    validation_size: int = 1024
    activation: str = "sigmoid"
    batch_norm: bool = False
    epochs: int = 20000
    loss_exponent: int = 2
    average_sobol: bool = False          # averaged reporting for both sides
    paper_faithful: bool = False         # select the ensemble on the test set

    def __post_init__(self):
        sched = tuple(int(n) for n in self.n_schedule)
        if len(sched) < 1 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("n_schedule must be strictly increasing")
        if self.test_size <= max(sched):
            raise ValueError("test size must exceed the largest training size")
        for s in self.samplers:
            if s not in _DETERMINISTIC_SAMPLERS + ("random",):
                raise ValueError(f"unknown sampler {s!r}")
        if self.grid not in ("table1", "fast12", "fixed"):
            raise ValueError("grid must be table1, fast12 or fixed")
        if self.grid == "fixed" and self.cell is None:
            raise ValueError("fixed grid mode needs a cell")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        object.__setattr__(self, "n_schedule", sched)
        object.__setattr__(self, "samplers", tuple(self.samplers))

    def hyper_grid(self) -> Optional[HyperGrid]:
        if self.grid == "table1":
            return TABLE1_GRID
        if self.grid == "fast12":
            return FAST_GRID
        return None


def plan_from_dict(data: dict) -> ExperimentPlan:
    """Build a plan from parsed JSON; the grid may be a name or a cell object."""
    data = dict(data)
    grid = data.get("grid", "fast12")
    if isinstance(grid, dict):
        data["grid"] = "fixed"
        data["cell"] = GridCell(
            learning_rate=float(grid["learning_rate"]),
            weight_decay=float(grid["weight_decay"]),
            depth=int(grid["depth"]), width=int(grid["width"]))
    known = {f.name for f in fields(ExperimentPlan)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown plan fields: {sorted(unknown)}")
    if "samplers" in data:
        data["samplers"] = tuple(data["samplers"])
    if "n_schedule" in data:
        data["n_schedule"] = tuple(data["n_schedule"])
    return ExperimentPlan(**data)


def load_plan(path) -> ExperimentPlan:
    with open(path) as fh:
        return plan_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def _point_sets(plan: ExperimentPlan, sampler: str):
    """(train-set builder, validation set, test set) for one sampler kind."""
    dim = get_benchmark(plan.benchmark).dim
    max_n = max(plan.n_schedule)
    if sampler in _DETERMINISTIC_SAMPLERS:
        test = generate(parse_kind(sampler, start=max_n + 1), dim,
                        plan.test_size)
        val = generate(parse_kind(sampler, start=max_n + plan.test_size + 1),
                       dim, plan.validation_size)

        def train(n: int) -> PointSet:
            return generate(parse_kind(sampler, start=1), dim, n)
    else:
        test = generate(UniformRandom(seed=derive_seed(plan.seed, _TAG_TEST)),
                        dim, plan.test_size)
        val = generate(UniformRandom(seed=derive_seed(plan.seed, _TAG_VAL)),
                       dim, plan.validation_size)

        def train(n: int) -> PointSet:
            return generate(UniformRandom(
                seed=derive_seed(plan.seed, _TAG_TRAIN, n)), dim, n)
    return train, val, test


def run_plan(plan: ExperimentPlan, jobs: int = 1) -> tuple[list[ExperimentRecord], dict]:
    """Execute every (sampler, N) cell of the plan in deterministic order.

    Returns the records plus an extras dict carrying the spread of the
    averaged errors (standard deviation over retrainings) for every
    averaged record.
    """
    bench = get_benchmark(plan.benchmark)
    records: list[ExperimentRecord] = []
    spreads: list[dict] = []
    for si, sampler in enumerate(plan.samplers):
        train_sets, val_ps, test_ps = _point_sets(plan, sampler)
        val_targets = bench(val_ps.points)
        test_targets = bench(test_ps.points)
        averaged = plan.average_sobol or sampler == "random"
        for ni, n in enumerate(plan.n_schedule):
            started = time.perf_counter()
            run_seed = derive_seed(plan.seed, _TAG_RUN, si, ni)
            train_ps = train_sets(n)
            targets = bench(train_ps.points)
            grid = plan.hyper_grid()
            if grid is None:
                cfg = cell_config(plan.cell, bench.dim, plan.activation,
                                  plan.batch_norm, plan.loss_exponent,
                                  plan.epochs, seed=derive_seed(run_seed, 0))
                cell = plan.cell
            else:
                sel_points, sel_targets = ((test_ps.points, test_targets)
                                           if plan.paper_faithful
                                           else (val_ps.points, val_targets))
                cfg, best = ensemble_select(
                    train_ps.points, targets, sel_points, sel_targets, grid,
                    seed=run_seed, activation=plan.activation,
                    batch_norm=plan.batch_norm, p=plan.loss_exponent,
                    epochs=plan.epochs, jobs=jobs)
                cell = GridCell(cfg.learning_rate, cfg.weight_decay,
                                cfg.network.depth, cfg.network.width)
            if averaged:
                stats = retrain_statistics(cfg, train_ps.points, targets,
                                           test_ps.points, test_targets,
                                           repeats=plan.repeats,
                                           seed=derive_seed(run_seed, 1),
                                           jobs=jobs)
                e_t, e_g = stats.train_error_mean, stats.gen_error_mean
                spreads.append({"benchmark": plan.benchmark, "sampler": sampler,
                                "n": n, "repeats": len(stats.gen_errors),
                                "train_error_std": stats.train_error_std,
                                "gen_error_std": stats.gen_error_std})
            elif grid is None:
                model = train_one(train_ps.points, targets, cfg)
                if model.diverged:
                    raise RuntimeError(f"fixed-config run diverged at n={n}")
                e_t = model.train_error
                e_g = errors_on(model.params, test_ps.points, test_targets)
            else:
                e_t = best.train_error
                e_g = errors_on(best.params, test_ps.points, test_targets)
            wall_ms = (time.perf_counter() - started) * 1e3
            records.append(ExperimentRecord(
                benchmark=plan.benchmark, sampler=sampler, n=n,
                train_error=e_t, gen_error=e_g,
                learning_rate=cell.learning_rate,
                weight_decay=cell.weight_decay, depth=cell.depth,
                width=cell.width, seed=run_seed, wall_ms=wall_ms))
            logger.info("%s/%s n=%d: E_T=%.3e E_G=%.3e (%.1fs)",
                        plan.benchmark, sampler, n, e_t, e_g, wall_ms / 1e3)
    return records, {"spreads": spreads}


# ---------------------------------------------------------------------------
# rate fitting
# ---------------------------------------------------------------------------

def fit_rate(records: list[ExperimentRecord]) -> RateFit:
    """OLS fit of log2(gen_error) on log2(N); slope -1 means rate 1."""
    if len(records) < 3:
        raise ValueError("need at least 3 records to fit a rate")
    n = np.array([r.n for r in records], dtype=np.float64)
    e = np.array([r.gen_error for r in records], dtype=np.float64)
    if np.any(e <= 0.0):
        raise ValueError("all errors must be positive for a log-log fit")
    x = np.log2(n)
    y = np.log2(e)
    design = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept),
                   r_squared=r2, n_min=int(n.min()), n_max=int(n.max()),
                   count=len(records))


def group_records(records: list[ExperimentRecord]) -> dict[tuple[str, str], list[ExperimentRecord]]:
    """Records keyed by (benchmark, sampler), preserving order."""
    groups: dict[tuple[str, str], list[ExperimentRecord]] = {}
    for rec in records:
        groups.setdefault((rec.benchmark, rec.sampler), []).append(rec)
    return groups


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    """Shortest lossless text form (repr round-trips float64 exactly)."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(records: list[ExperimentRecord], rate_fits: dict[tuple[str, str], RateFit],
         out_dir, extras: Optional[dict] = None) -> tuple[Path, Path]:
    """Write records.csv (fixed column order) and summary.json.

    Floats are written in their shortest round-tripping form, so
    ``load(emit(...))`` reproduces the records exactly.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "records.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, c)) for c in CSV_COLUMNS])
    summary = {
        "rate_fits": [{"benchmark": b, "sampler": s, **asdict(fit)}
                      for (b, s), fit in rate_fits.items()],
        "records": len(records),
    }
    if extras:
        summary.update(extras)
    json_path = out_dir / "summary.json"
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return csv_path, json_path


def load(csv_path) -> list[ExperimentRecord]:
    """Read back a records.csv written by :func:`emit`."""
    records = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError("unexpected records.csv header")
        for row in reader:
            rec = dict(zip(CSV_COLUMNS, row))
            records.append(ExperimentRecord(
                benchmark=rec["benchmark"], sampler=rec["sampler"],
                n=int(rec["n"]), train_error=float(rec["train_error"]),
                gen_error=float(rec["gen_error"]),
                learning_rate=float(rec["learning_rate"]),
                weight_decay=float(rec["weight_decay"]),
                depth=int(rec["depth"]), width=int(rec["width"]),
                seed=int(rec["seed"]), wall_ms=float(rec["wall_ms"])))
    return records


def load_summary(json_path) -> dict:
    with open(json_path) as fh:
        return json.load(fh)
