"""Vitali and Hardy--Krause variation machinery.

Two complementary estimates are provided.  :func:`vitali_variation_on_ladder`
totals the absolute alternating-sign cell differences of a function over a
finite ladder, which lower-bounds the Vitali variation (the supremum over
all ladders).  :func:`hardy_krause_upper_bound` evaluates the smooth-function
recursion

    V(f) <= integral of |d^k f / dy_1..dy_k|  +  sum_i V(f restricted to y_i = 1)

with a one-dimensional total-variation base case, which upper-bounds the
Hardy--Krause variation whenever the mixed partials exist; the inequality
is an identity when they are continuous.  The exact supremum definition is
deliberately not computed: it is not enumerable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

_MAX_LADDER_CELLS = 1_000_000
_MAX_RECURSION_DIM = 4
_MAX_GRID_POINTS = 20_000_000


@dataclass(frozen=True)
class Ladder:
    """Per-dimension interior split points of the unit cube.

    ``values[j]`` is a strictly increasing list inside (0, 1).  The induced
    cell grid along dimension j starts at 0; the successor of each value is
    the next one, and the successor of the largest is 1.  A ladder with m-1
    interior values therefore tiles [0, 1] into m cells per dimension.
    """

    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        vals = tuple(tuple(float(v) for v in dim_vals) for dim_vals in self.values)
        for dim_vals in vals:
            arr = np.asarray(dim_vals)
            if arr.size and (arr.min() <= 0.0 or arr.max() >= 1.0):
                raise ValueError("ladder values must lie strictly inside (0, 1)")
            if arr.size > 1 and not np.all(np.diff(arr) > 0):
                raise ValueError("ladder values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.values)

    @staticmethod
    def uniform(dim: int, cells: int) -> "Ladder":
        """Ladder splitting each axis into ``cells`` equal cells."""
        if cells < 1:
            raise ValueError("cells must be >= 1")
        vals = tuple(np.arange(1, cells) / cells)
        return Ladder(values=tuple(vals for _ in range(dim)))

    def cell_corners(self) -> list[np.ndarray]:
        """Per-dimension corner coordinates {0} + values + {1}."""
        return [np.concatenate([[0.0], np.asarray(v), [1.0]])
                for v in self.values]

    def refine(self, axis: int, value: float) -> "Ladder":
        """New ladder with one extra split point on the given axis."""
        vals = list(self.values)
        merged = sorted(set(vals[axis]) | {float(value)})
        vals[axis] = tuple(merged)
        return Ladder(values=tuple(vals))


@dataclass(frozen=True)
class GridFunction:
    """A map on the closed unit cube, evaluated on (n, d) arrays.

    ``mixed_partial``, when supplied, is the analytic order-d mixed partial
    d^d f / dy_1..dy_d with the same vectorized signature; otherwise the
    recursion falls back to tensor-grid finite differences.
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    mixed_partial: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        out = np.asarray(self.fn(pts), dtype=np.float64)
        if out.shape != pts.shape[:1]:
            raise ValueError("function must map (n, d) arrays to (n,) arrays")
        if not np.all(np.isfinite(out)):
            raise ValueError("function returned non-finite values")
        return out

    @staticmethod
    def from_scalar(dim: int, fn: Callable[..., float], name: str = "") -> "GridFunction":
        """Wrap a scalar callable f(y_1, ..., y_d)."""
        def vec(pts: np.ndarray) -> np.ndarray:
            return np.array([fn(*row) for row in pts])
        return GridFunction(dim=dim, fn=vec, name=name)


def _alternating_cell_sums(f: GridFunction, corner_axes: Sequence[np.ndarray],
                           active: Sequence[int], fixed: np.ndarray) -> np.ndarray:
    """d-fold forward differences of f over a tensor corner grid.

    The alternating-sign sum of f over the corners of a cell equals the
    once-per-axis forward difference of the corner-value tensor, so each
    corner is evaluated exactly once.
    """
    shape = [len(ax) for ax in corner_axes]
    count = int(np.prod(shape))
    if count > _MAX_GRID_POINTS:
        raise ValueError(f"tensor grid too large ({count} points)")
    grids = np.meshgrid(*corner_axes, indexing="ij")
    pts = np.tile(fixed, (count, 1))
    for j, a in enumerate(active):
        pts[:, a] = grids[j].ravel()
    F = f(pts).reshape(shape)
    for ax in range(len(active)):
        F = np.diff(F, axis=ax)
    return F


def vitali_variation_on_ladder(f: GridFunction, ladder: Ladder) -> float:
    """Sum over ladder cells of the absolute alternating-sign difference.

    A lower bound of the Vitali variation; monotone under ladder
    refinement.  Cells are summed in lexicographic grid order for
    bit-stable results.
    """
    if ladder.dim != f.dim:
        raise ValueError("ladder dimension must match the function dimension")
    corners = ladder.cell_corners()
    cells = int(np.prod([len(c) - 1 for c in corners]))
    if cells > _MAX_LADDER_CELLS:
        raise ValueError(f"ladder grid too large ({cells} cells)")
    diffs = _alternating_cell_sums(f, corners, range(f.dim), np.zeros(f.dim))
    return float(np.abs(diffs).sum())


def total_variation_1d(f: GridFunction, axis: int, fixed: np.ndarray,
                       mesh: int) -> float:
    """Total variation of f along one axis, sampled on a uniform grid."""
    t = np.linspace(0.0, 1.0, mesh + 1)
    pts = np.tile(fixed, (mesh + 1, 1))
    pts[:, axis] = t
    return float(np.abs(np.diff(f(pts))).sum())


def hardy_krause_upper_bound(f: GridFunction, mesh: int) -> float:
    """Smooth-function Hardy--Krause bound on a mesh^k tensor grid.

    Recurses over faces: the mixed-partial integral term plus the bound
    of every restriction to an upper face y_i = 1, bottoming out at the
    1-D total variation.  The integral uses the midpoint rule; when no
    analytic mixed partial is given, the midpoint values are central
    finite differences of step 1/mesh, whose stencils are the uniform
    corner grid and never leave the cube.
    """
    if f.dim > _MAX_RECURSION_DIM:
        raise ValueError(f"recursion limited to d <= {_MAX_RECURSION_DIM}")
    if mesh < 2:
        raise ValueError("mesh must be >= 2")

    def recurse(active: list[int], fixed: np.ndarray) -> float:
        if len(active) == 1:
            return total_variation_1d(f, active[0], fixed, mesh)
        k = len(active)
        h = 1.0 / mesh
        if f.mixed_partial is not None and len(active) == f.dim:
            mids = (np.arange(mesh) + 0.5) * h
            grids = np.meshgrid(*([mids] * k), indexing="ij")
            pts = np.tile(fixed, (mesh ** k, 1))
            for j, a in enumerate(active):
                pts[:, a] = grids[j].ravel()
            vals = np.asarray(f.mixed_partial(pts), dtype=np.float64)
            integral = float(np.abs(vals).sum()) * h ** k
        else:
            corner = np.linspace(0.0, 1.0, mesh + 1)
            diffs = _alternating_cell_sums(f, [corner] * k, active, fixed)
            # |cell difference| = |mixed partial at midpoint| * h^k + O(h^{k+2})
            integral = float(np.abs(diffs).sum())
        total = integral
        for a in active:
            face = fixed.copy()
            face[a] = 1.0
            total += recurse([b for b in active if b != a], face)
        return total

    return recurse(list(range(f.dim)), np.zeros(f.dim))


def hardy_krause_with_refinement(f: GridFunction, mesh: int) -> tuple[float, float]:
    """Bound at ``mesh`` plus the change from the half-resolution mesh."""
    value = hardy_krause_upper_bound(f, mesh)
    coarse = hardy_krause_upper_bound(f, max(2, mesh // 2))
    return value, value - coarse
