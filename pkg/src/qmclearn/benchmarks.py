"""Benchmark maps on the unit cube, each paired with an independent oracle.

Every map is registered under a CLI-visible name with a vectorized
``evaluate`` on (n, d) arrays and an ``oracle`` that recomputes the same
values through a different route (re-coded formula, refined solver, or
Monte Carlo) together with per-point absolute tolerances.  The oracle is
the testing contract: evaluate and oracle must agree within tolerance on
random probes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .rng import generator

GRAVITY = 9.81  # m/s^2


def normal_cdf(x) -> np.ndarray:
    """Standard normal CDF via the Cephes ``ndtr`` routine.

    ndtr evaluates Phi through the Cephes rational approximations of
    erf/erfc; its absolute error is below 1e-13 everywhere, which the
    test suite checks against a high-precision oracle.
    """
    return ndtr(x)


@dataclass(frozen=True)
class BenchmarkMap:
    """A named map [0,1]^d -> R plus an independent oracle for testing."""

    name: str
    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    oracle: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != self.dim:
            raise ValueError(f"{self.name} expects dimension {self.dim}")
        return self.evaluate(points)


# ---------------------------------------------------------------------------
# closed-form maps
# ---------------------------------------------------------------------------

def owen_f(d: int, r: int, y) -> np.ndarray:
    """(max(sum(y) - 1/2, 0))^r; for r = 0 the indicator of sum(y) > 1/2.

    The r = 0 convention resolves 0^0 to 0 at and below the kink, so the
    map is the plain indicator of the open upper half-space.
    """
    if d < 1 or r < 0:
        raise ValueError("need d >= 1 and integer r >= 0")
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y.shape[1] != d:
        raise ValueError(f"points must have dimension {d}")
    excess = y.sum(axis=1) - 0.5
    if r == 0:
        return (excess > 0.0).astype(np.float64)
    return np.maximum(excess, 0.0) ** r


def sum_of_sines(y) -> np.ndarray:
    """sum_i sin(4 pi y_i) over the six coordinates."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y.shape[1] != 6:
        raise ValueError("sum_of_sines is defined on [0,1]^6")
    return np.sin(4.0 * np.pi * y).sum(axis=1)


# ---------------------------------------------------------------------------
# projectile motion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectileParams:
    """Nominal physical constants and the +-10% parametrization."""

    epsilon: float = 0.1
    density: float = 1.225
    radius: float = 0.23
    drag_coeff: float = 0.1
    mass: float = 0.145
    height: float = 1.0
    angle_deg: float = 30.0
    speed: float = 25.0

    def from_unit(self, y: np.ndarray) -> tuple[np.ndarray, ...]:
        """Physical parameters for unit-cube inputs, factors in [0.9, 1.1]."""
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        if y.shape[1] != 7:
            raise ValueError("projectile parameters live in [0,1]^7")
        g = 1.0 + self.epsilon * (2.0 * y - 1.0)
        return (self.density * g[:, 0], self.radius * g[:, 1],
                self.drag_coeff * g[:, 2], self.mass * g[:, 3],
                self.height * g[:, 4], self.angle_deg * g[:, 5],
                self.speed * g[:, 6])


def projectile_range(y, dt: float = 0.00125,
                     params: ProjectileParams = ProjectileParams()) -> np.ndarray:
    """Horizontal range of the drag-decelerated projectile, forward Euler.

    Integrates x' = v, v' = (-F_D(v), -g) with the quadratic drag force
    F_D = rho * C_d * pi * r^2 * |v|^2 / (2 m) acting on the horizontal
    component, from x(0) = (0, h), v(0) = v0 (cos a, sin a), until the
    height crosses zero; the crossing is located by linear interpolation
    between the bracketing steps, which removes the O(dt) bias a
    last-step cutoff would add to the observable.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho, radius, cd, mass, h, angle_deg, speed = params.from_unit(y)
    n = rho.shape[0]
    drag_k = 0.5 * rho * cd * np.pi * radius ** 2 / mass
    alpha = np.deg2rad(angle_deg)
    x1 = np.zeros(n)
    x2 = h.copy()
    v1 = speed * np.cos(alpha)
    v2 = speed * np.sin(alpha)
    out = np.full(n, np.nan)
    active = np.ones(n, dtype=bool)
    t = 0.0
    while active.any():
        if t > 1e3:
            raise RuntimeError("projectile integration did not terminate")
        a = active.copy()
        fd = drag_k[a] * (v1[a] ** 2 + v2[a] ** 2)
        x1_new = x1[a] + dt * v1[a]
        x2_new = x2[a] + dt * v2[a]
        v1[a] = v1[a] - dt * fd
        v2[a] = v2[a] - dt * GRAVITY
        crossed = x2_new <= 0.0
        if crossed.any():
            ia = np.flatnonzero(a)[crossed]
            w = x2[ia] / (x2[ia] - x2_new[crossed])
            out[ia] = x1[ia] + w * (x1_new[crossed] - x1[ia])
            active[ia] = False
        x1[a] = x1_new
        x2[a] = x2_new
        t += dt
    return out


def ballistic_range_closed_form(h: float, speed: float, angle_deg: float,
                                gravity: float = GRAVITY) -> float:
    """Drag-free range from launch height h: the textbook closed form."""
    alpha = math.radians(angle_deg)
    vx = speed * math.cos(alpha)
    vy = speed * math.sin(alpha)
    return vx * (vy + math.sqrt(vy * vy + 2.0 * gravity * h)) / gravity


# ---------------------------------------------------------------------------
# geometric-average basket call
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasketParams:
    """Covariance table and contract terms for the basket call."""

    dim: int
    sigma: np.ndarray = None
    maturity: float = 5.0
    strike: float = 0.08
    rate: float = 0.05

    def __post_init__(self):
        if self.maturity <= 0 or self.strike <= 0:
            raise ValueError("maturity and strike must be positive")
        sigma = self.sigma
        if sigma is None:
            sigma = 1e-5 * np.eye(self.dim)
        sigma = np.asarray(sigma, dtype=np.float64)
        if sigma.shape != (self.dim, self.dim):
            raise ValueError("sigma must be a (d, d) matrix")
        if not np.allclose(sigma, sigma.T):
            raise ValueError("sigma must be symmetric")
        object.__setattr__(self, "sigma", sigma)

    def log_stats(self) -> tuple[float, float]:
        """(nu, m): dispersion and drift of the geometric-mean log price."""
        d = self.dim
        sq = self.sigma ** 2
        nu = math.sqrt(float((sq.sum(axis=0) ** 2).sum())) / d
        m = self.rate * self.maturity - self.maturity / (2.0 * d) * float(sq.sum())
        return nu, m


def basket_call_price(S, params: BasketParams) -> np.ndarray:
    """Closed-form price of the geometric-average basket call.

    With G the geometric mean of the terminal prices, the price is
    exp(-rT) * (s~ exp(m~) Phi(d1) - K Phi(d2)) where s~ is the geometric
    mean of the spot prices and (nu, m) are the dispersion and drift of
    log G.  Any zero coordinate collapses the geometric mean, so the
    price is the worthless limit 0.  Tiny negative round-off is clamped
    to zero.
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if S.shape[1] != params.dim:
        raise ValueError(f"basket expects dimension {params.dim}")
    if np.any(S < 0.0):
        raise ValueError("asset prices must be nonnegative")
    nu, m = params.log_stats()
    T, K, r = params.maturity, params.strike, params.rate
    out = np.zeros(S.shape[0])
    alive = np.all(S > 0.0, axis=1)
    if alive.any():
        s_tilde = np.exp(np.mean(np.log(S[alive]), axis=1))
        m_tilde = m + 0.5 * nu ** 2
        if nu == 0.0:
            value = np.maximum(s_tilde * np.exp(m) - K, 0.0)
        else:
            d1 = (np.log(s_tilde / K) + m + nu ** 2) / nu
            d2 = d1 - nu
            value = s_tilde * np.exp(m_tilde) * normal_cdf(d1) - K * normal_cdf(d2)
        out[alive] = np.exp(-r * T) * np.maximum(value, 0.0)
    return out


def basket_mc_price(S, params: BasketParams, n_paths: int,
                    seed: int) -> tuple[float, float]:
    """Monte Carlo price from the exact terminal law, with standard error.

    Terminal log prices are drawn directly from their multivariate normal
    law, log S_i(T) = log S_i + (r - v_i/2) T + sqrt(T) (sigma z)_i with
    v_i the i-th row sum of sigma^2 -- no time stepping, so the only
    error is statistical.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 1 or S.shape[0] != params.dim:
        raise ValueError("one probe point of shape (d,) expected")
    if np.any(S <= 0.0):
        return 0.0, 0.0
    T, K, r = params.maturity, params.strike, params.rate
    var_rates = (params.sigma ** 2).sum(axis=1)
    rng = generator(seed, 0xBA5)
    z = rng.standard_normal((n_paths, params.dim))
    log_st = (np.log(S) + (r - 0.5 * var_rates) * T
              + math.sqrt(T) * (z @ params.sigma.T))
    payoff = np.exp(-r * T) * np.maximum(np.exp(log_st.mean(axis=1)) - K, 0.0)
    return float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(n_paths))


#: training inputs are floored here before pricing; [0,1)-sampled prices
#: otherwise touch the log singularity at 0
BASKET_PRICE_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def _exact_oracle(fn: Callable[[np.ndarray], np.ndarray], tol: float):
    def oracle(points: np.ndarray):
        vals = fn(points)
        return vals, np.full(vals.shape, tol)
    return oracle


def _owen_scalar(d: int, r: int, row) -> float:
    total = 0.0
    for v in row:
        total += float(v)
    excess = total - 0.5
    if excess <= 0.0:
        return 0.0
    if r == 0:
        return 1.0
    result = 1.0
    for _ in range(r):
        result *= excess
    return result


def _make_owen(d: int, r: int) -> BenchmarkMap:
    def oracle(points):
        vals = np.array([_owen_scalar(d, r, row) for row in points])
        return vals, np.full(vals.shape, 1e-12)
    return BenchmarkMap(name=f"owen_f_{d}_{r}", dim=d,
                        evaluate=lambda pts: owen_f(d, r, pts),
                        oracle=oracle)


def _sines_oracle(points):
    vals = np.array([sum(math.sin(4.0 * math.pi * v) for v in row)
                     for row in points])
    return vals, np.full(vals.shape, 1e-11)


def _projectile_oracle(points):
    # refined forward Euler; first order, so dt/8 leaves ~1/8 of the error
    vals = projectile_range(points, dt=0.00125 / 8.0)
    return vals, np.full(vals.shape, 1.5e-2)


def _make_basket(d: int) -> BenchmarkMap:
    params = BasketParams(dim=d)

    def evaluate(points):
        return basket_call_price(np.maximum(points, BASKET_PRICE_FLOOR), params)

    def oracle(points):
        vals = np.empty(points.shape[0])
        tols = np.empty(points.shape[0])
        for i, row in enumerate(points):
            price, se = basket_mc_price(np.maximum(row, BASKET_PRICE_FLOOR),
                                        params, n_paths=10_000,
                                        seed=0xB00 + i)
            vals[i] = price
            tols[i] = max(4.0 * se, 1e-6)
        return vals, tols

    return BenchmarkMap(name=f"basket_call_{d}", dim=d,
                        evaluate=evaluate, oracle=oracle)


def _linear(points):
    return 2.0 * points[:, 0]


def _bilinear(points):
    return points[:, 0] * points[:, 1]


_REGISTRY: dict[str, BenchmarkMap] = {
    "linear": BenchmarkMap(
        name="linear", dim=1, evaluate=_linear,
        oracle=_exact_oracle(lambda pts: pts[:, 0] + pts[:, 0], 1e-12)),
    "bilinear": BenchmarkMap(
        name="bilinear", dim=2, evaluate=_bilinear,
        oracle=_exact_oracle(lambda pts: np.prod(pts, axis=1), 1e-12)),
    "sum_of_sines": BenchmarkMap(
        name="sum_of_sines", dim=6, evaluate=sum_of_sines,
        oracle=_sines_oracle),
    "projectile": BenchmarkMap(
        name="projectile", dim=7, evaluate=projectile_range,
        oracle=_projectile_oracle),
}

_OWEN_PATTERN = re.compile(r"^owen_f_(\d+)_(\d+)$")
_BASKET_PATTERN = re.compile(r"^basket_call_(\d+)$")


def get_benchmark(name: str) -> BenchmarkMap:
    """Look up a benchmark by name; owen_f_D_R and basket_call_D are parametric."""
    if name in _REGISTRY:
        return _REGISTRY[name]
    m = _OWEN_PATTERN.match(name)
    if m:
        return _make_owen(int(m.group(1)), int(m.group(2)))
    m = _BASKET_PATTERN.match(name)
    if m:
        return _make_basket(int(m.group(1)))
    raise KeyError(f"unknown benchmark {name!r}")


def benchmark_names() -> list[str]:
    """Registered fixed names plus the parametric name patterns."""
    return sorted(_REGISTRY) + ["owen_f_<d>_<r>", "basket_call_<d>"]
