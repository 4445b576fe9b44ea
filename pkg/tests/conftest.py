"""Shared test oracles."""

from __future__ import annotations

import numpy as np

from qmclearn.network import NetworkParams
from qmclearn.training import loss


def central_diff_loss_gradient(params: NetworkParams, points: np.ndarray,
                               targets: np.ndarray, p: int,
                               weight_decay: float,
                               h: float = 1e-6) -> np.ndarray:
    """Finite-difference gradient of the training objective.

    Central differences on each trainable scalar; with batch norm the
    loss is evaluated in training mode so the batch-statistics pathway
    is part of the differentiated function.
    """
    theta = params.to_vector()
    grad = np.empty_like(theta)
    work = params.copy()
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] = theta[i] + h
        work.set_vector(bumped)
        up = loss(work, points, targets, p=p, weight_decay=weight_decay,
                  training=True)
        bumped[i] = theta[i] - h
        work.set_vector(bumped)
        down = loss(work, points, targets, p=p, weight_decay=weight_decay,
                    training=True)
        grad[i] = (up - down) / (2.0 * h)
    return grad


def gradient_mismatch(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst per-entry relative error, floored at 1e-4 scale.

    Entries below the floor are compared absolutely at 1e-4 scale, which
    keeps finite-difference round-off on structurally-zero gradients from
    dominating the ratio.
    """
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-4)
    return float(np.max(np.abs(analytic - numeric) / denom))
