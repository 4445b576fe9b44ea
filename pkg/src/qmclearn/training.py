"""Loss assembly, full-batch Adam, ensemble sweeps, retraining statistics.

The training objective is the mean p-th-power residual plus an L2 weight
penalty on the weight matrices only (biases and batch-norm parameters are
not penalized); the penalty enters the optimizer through the loss
gradient, i.e. coupled weight decay.  Reported errors are always mean
absolute errors, matching the convention that the training error is the
sample estimate of the generalization error on its own point set.

Each training run is a pure function of its config (full-batch, seeded
Xavier init), so ensemble cells and retraining repeats are independent
jobs: they can be run serially or on a process pool with identical
results, assembled in deterministic cell order.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .network import (GradientSet, NetworkConfig, NetworkParams, backward,
                      forward, forward_with_cache, init_xavier)
from .rng import _splitmix64, _MASK64

DIVERGENCE_LOSS = 1e12
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def derive_seed(seed: int, *index: int) -> int:
    """Deterministic child seed for job (seed, *index)."""
    h = _splitmix64(int(seed) & _MASK64)
    for part in index:
        h = _splitmix64((h ^ (int(part) & _MASK64)) & _MASK64)
    return h


@dataclass(frozen=True)
class TrainConfig:
    """One training run: objective, optimizer settings, architecture."""

    network: NetworkConfig
    learning_rate: float
    weight_decay: float = 0.0
    loss_exponent: int = 2
    epochs: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epoch cap must be >= 1")
        if self.loss_exponent not in (1, 2):
            raise ValueError("loss exponent must be 1 or 2")


@dataclass(frozen=True)
class GridCell:
    learning_rate: float
    weight_decay: float
    depth: int
    width: int


@dataclass(frozen=True)
class HyperGrid:
    """Cartesian hyperparameter grid for ensemble training."""

    learning_rates: tuple = (1e-1, 1e-2, 1e-3)
    weight_decays: tuple = (1e-4, 1e-5, 1e-6, 1e-7)
    depths: tuple = (4, 8, 16)
    widths: tuple = (6, 12, 24)

    def cells(self) -> list[GridCell]:
        return [GridCell(lr, wd, depth, width)
                for lr, wd, depth, width in itertools.product(
                    self.learning_rates, self.weight_decays,
                    self.depths, self.widths)]

    @property
    def size(self) -> int:
        return (len(self.learning_rates) * len(self.weight_decays)
                * len(self.depths) * len(self.widths))


#: the full ensemble grid (108 cells)
TABLE1_GRID = HyperGrid()

#: documented desk-scale subgrid (12 cells): all three learning rates,
#: the two lightest weight decays, depth 4, widths 12 and 24
FAST_GRID = HyperGrid(learning_rates=(1e-1, 1e-2, 1e-3),
                      weight_decays=(1e-6, 1e-7),
                      depths=(4,), widths=(12, 24))


@dataclass
class TrainedModel:
    """Parameters at the best epoch plus the run's bookkeeping."""

    params: NetworkParams
    train_error: float
    config: TrainConfig
    loss_trajectory: np.ndarray
    best_epoch: int
    diverged: bool = False


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @staticmethod
    def fresh(shape) -> "AdamState":
        return AdamState(m=np.zeros(shape), v=np.zeros(shape), t=0)


@dataclass
class RetrainStats:
    """Mean/std of both errors over repeated retrainings."""

    train_errors: np.ndarray
    gen_errors: np.ndarray

    @property
    def train_error_mean(self) -> float:
        return float(self.train_errors.mean())

    @property
    def train_error_std(self) -> float:
        return float(self.train_errors.std())

    @property
    def gen_error_mean(self) -> float:
        return float(self.gen_errors.mean())

    @property
    def gen_error_std(self) -> float:
        return float(self.gen_errors.std())


# ---------------------------------------------------------------------------
# loss and errors
# ---------------------------------------------------------------------------

def loss(params: NetworkParams, points: np.ndarray, targets: np.ndarray,
         p: int = 2, weight_decay: float = 0.0, training: bool = True) -> float:
    """(1/N) sum |target - output|^p plus weight_decay * ||weights||_2^2."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size == 0:
        raise ValueError("empty training set")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")
    out = forward(params, points, training=training)
    resid = np.abs(out - targets)
    value = float(np.mean(resid ** p))
    if weight_decay:
        value += weight_decay * float(params.weight_vector() @ params.weight_vector())
    return value


def _loss_and_gradient(params: NetworkParams, points: np.ndarray,
                       targets: np.ndarray, p: int,
                       weight_decay: float) -> tuple[float, GradientSet]:
    out, cache = forward_with_cache(params, points, training=True)
    resid = out - targets
    n = targets.size
    if p == 2:
        value = float(np.mean(resid ** 2))
        upstream = (2.0 / n) * resid
    else:
        value = float(np.mean(np.abs(resid)))
        upstream = np.sign(resid) / n
    grads = backward(params, cache, upstream)
    if weight_decay:
        wvec = params.weight_vector()
        value += weight_decay * float(wvec @ wvec)
        for gw, w in zip(grads.weights, params.weights):
            gw += 2.0 * weight_decay * w
    return value, grads


def errors_on(params: NetworkParams, points: np.ndarray,
              targets: np.ndarray, p: int = 1) -> float:
    """Mean |residual|^p over the set; p = 1 is the reported error."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size == 0:
        raise ValueError("empty point set")
    out = forward(params, points, training=False)
    return float(np.mean(np.abs(out - targets) ** p))


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def adam_step(theta: np.ndarray, grad: np.ndarray, state: AdamState,
              lr: float) -> tuple[np.ndarray, AdamState]:
    """One Adam update with bias-corrected moments.

    Weight decay is not applied here; it reaches the optimizer through
    the loss gradient.
    """
    if theta.shape != grad.shape or theta.shape != state.m.shape:
        raise ValueError("parameter, gradient and state shapes must match")
    t = state.t + 1
    m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grad
    v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * grad * grad
    m_hat = m / (1.0 - ADAM_BETA1 ** t)
    v_hat = v / (1.0 - ADAM_BETA2 ** t)
    new_theta = theta - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return new_theta, AdamState(m=m, v=v, t=t)


# ---------------------------------------------------------------------------
# training runs
# ---------------------------------------------------------------------------

def train_one(points: np.ndarray, targets: np.ndarray,
              cfg: TrainConfig) -> TrainedModel:
    """Full-batch Adam for the epoch cap; keeps the best-loss parameters.

    Deterministic given cfg.seed.  A run whose loss becomes non-finite or
    exceeds the divergence threshold is returned with ``diverged=True``
    and the best parameters seen up to that point.
    """
    points = np.asarray(points, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size == 0:
        raise ValueError("empty training set")
    params = init_xavier(cfg.network, cfg.seed)
    theta = params.to_vector()
    state = AdamState.fresh(theta.shape)
    trajectory = np.empty(cfg.epochs + 1)
    best_loss = np.inf
    best_params = None
    best_epoch = -1
    diverged = False
    for epoch in range(cfg.epochs + 1):
        value, grads = _loss_and_gradient(params, points, targets,
                                          cfg.loss_exponent, cfg.weight_decay)
        trajectory[epoch] = value
        if not np.isfinite(value) or value > DIVERGENCE_LOSS:
            trajectory = trajectory[:epoch + 1]
            diverged = True
            break
        if value < best_loss:
            best_loss = value
            best_params = params.copy()
            best_epoch = epoch
        if epoch == cfg.epochs:
            break
        theta, state = adam_step(theta, grads.to_vector(), state,
                                 cfg.learning_rate)
        params.set_vector(theta)
    if best_params is None:
        return TrainedModel(params=params, train_error=np.inf, config=cfg,
                            loss_trajectory=trajectory, best_epoch=-1,
                            diverged=True)
    train_error = errors_on(best_params, points, targets, p=1)
    return TrainedModel(params=best_params, train_error=train_error,
                        config=cfg, loss_trajectory=trajectory,
                        best_epoch=best_epoch, diverged=diverged)


def _train_job(args) -> TrainedModel:
    points, targets, cfg = args
    return train_one(points, targets, cfg)


def _run_jobs(argslist, jobs: int) -> list[TrainedModel]:
    if jobs <= 1 or len(argslist) <= 1:
        return [_train_job(a) for a in argslist]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_train_job, argslist))


def cell_config(cell: GridCell, input_dim: int, activation: str,
                batch_norm: bool, p: int, epochs: int, seed: int) -> TrainConfig:
    net = NetworkConfig(input_dim=input_dim, depth=cell.depth,
                        width=cell.width, activation=activation,
                        batch_norm=batch_norm)
    return TrainConfig(network=net, learning_rate=cell.learning_rate,
                       weight_decay=cell.weight_decay, loss_exponent=p,
                       epochs=epochs, seed=seed)


def ensemble_select(points: np.ndarray, targets: np.ndarray,
                    val_points: np.ndarray, val_targets: np.ndarray,
                    grid: HyperGrid, seed: int, *,
                    activation: str = "sigmoid", batch_norm: bool = False,
                    p: int = 2, epochs: int = 20000,
                    jobs: int = 1) -> tuple[TrainConfig, TrainedModel]:
    """Train one run per grid cell, return the best-validating one.

    Diverged cells are excluded from selection.  Ties are broken toward
    lower depth, lower width, lower learning rate, higher weight decay.
    """
    cells = grid.cells()
    if not cells:
        raise ValueError("empty hyperparameter grid")
    input_dim = np.asarray(points).shape[1]
    configs = [cell_config(cell, input_dim, activation, batch_norm, p,
                           epochs, derive_seed(seed, i))
               for i, cell in enumerate(cells)]
    models = _run_jobs([(points, targets, cfg) for cfg in configs], jobs)
    scored = []
    for cell, cfg, model in zip(cells, configs, models):
        if model.diverged:
            continue
        val_err = errors_on(model.params, val_points, val_targets, p=1)
        scored.append(((val_err, cell.depth, cell.width, cell.learning_rate,
                        -cell.weight_decay), cfg, model))
    if not scored:
        raise RuntimeError("every grid cell diverged")
    _, best_cfg, best_model = min(scored, key=lambda item: item[0])
    return best_cfg, best_model


def retrain_statistics(cfg: TrainConfig, points: np.ndarray,
                       targets: np.ndarray, test_points: np.ndarray,
                       test_targets: np.ndarray, repeats: int = 100,
                       seed: int = 0, jobs: int = 1) -> RetrainStats:
    """Repeat the run with fresh init seeds; mean/std of both errors.

    Runs that diverge contribute their best-seen parameters; a run with
    no finite epoch at all is dropped from the statistics.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    argslist = [(points, targets, replace(cfg, seed=derive_seed(seed, i)))
                for i in range(repeats)]
    models = _run_jobs(argslist, jobs)
    e_t, e_g = [], []
    for model in models:
        if not np.isfinite(model.train_error):
            continue
        e_t.append(model.train_error)
        e_g.append(errors_on(model.params, test_points, test_targets, p=1))
    if not e_t:
        raise RuntimeError("every retraining diverged")
    return RetrainStats(train_errors=np.array(e_t), gen_errors=np.array(e_g))
