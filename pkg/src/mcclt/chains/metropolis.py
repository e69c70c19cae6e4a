"""Metropolis-Hastings(-Green) samplers: independence sampler, random-walk
Metropolis on R^k, and the birth-death sampler for finite point processes.

Continuous states are tuples of floats (a k-vector); point patterns are
tuples of points, each point a tuple of coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..kernel import ChainModel, StateKind


@dataclass(frozen=True)
class Density1D:
    """A named one-dimensional law with a density and a sampler.

    kinds: ``exponential`` (rate), ``normal`` (mu, sigma), ``uniform``
    (low, high), ``laplace`` (mu, scale).
    """

    kind: str
    rate: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exponential", "normal", "uniform", "laplace"):
            raise ValueError(f"unknown density {self.kind!r}")
        if self.rate <= 0 or self.sigma <= 0 or self.high <= self.low:
            raise ValueError(f"invalid parameters for {self.kind} density")

    def pdf(self, x: float) -> float:
        if self.kind == "exponential":
            return self.rate * math.exp(-self.rate * x) if x >= 0 else 0.0
        if self.kind == "normal":
            z = (x - self.mu) / self.sigma
            return math.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))
        if self.kind == "laplace":
            return math.exp(-abs(x - self.mu) / self.sigma) / (2 * self.sigma)
        return 1.0 / (self.high - self.low) if self.low <= x <= self.high else 0.0

    def sample(self, rng) -> float:
        g = rng.generator
        if self.kind == "exponential":
            return float(g.exponential(1.0 / self.rate))
        if self.kind == "normal":
            return self.mu + self.sigma * float(g.standard_normal())
        if self.kind == "laplace":
            return float(g.laplace(self.mu, self.sigma))
        return self.low + (self.high - self.low) * rng.uniform()


# ---------------------------------------------------------------------------
# Independence sampler


def independence_acceptance(target: Callable, proposal: Callable, x: float, y: float) -> float:
    """min{1, pi(y) p(x) / (pi(x) p(y))}."""
    py, ty = proposal(y), target(y)
    if py <= 0:
        if ty > 0:
            raise ValueError(f"proposal density vanishes at {y} where the target is positive")
        return 0.0
    num = ty * proposal(x)
    den = target(x) * py
    if den <= 0:
        raise ValueError(f"target density is zero at current state {x}")
    return min(1.0, num / den)


def independence_sampler(target_density: Callable[[float], float], proposal_density: Callable[[float], float],
                         proposal_sampler: Callable) -> ChainModel:
    def step(state, rng):
        x = state[0]
        y = proposal_sampler(rng)
        if rng.uniform() < independence_acceptance(target_density, proposal_density, x, y):
            return (y,)
        return state

    def validate(state) -> None:
        if len(state) != 1 or target_density(state[0]) <= 0:
            raise ValueError(f"initial state {state!r} lies outside the target support")

    return ChainModel(
        name="independence-sampler",
        state_kind=StateKind.VECTOR,
        step=step,
        detailed_balance_declared=True,
        validate=validate,
        section="section 5.4 (independence sampler)",
    )


def density_ratio_bound(target: Callable, proposal: Callable, grid) -> tuple[float, float]:
    """(kappa, argmax) of pi/p over a grid."""
    r = np.array([target(x) / proposal(x) for x in grid])
    i = int(np.argmax(r))
    return float(r[i]), float(grid[i])


# ---------------------------------------------------------------------------
# Random-walk Metropolis


def rw_acceptance(target: Callable, x, y) -> float:
    """min{1, pi(y) / pi(x)}."""
    tx = target(x)
    if tx <= 0:
        raise ValueError(f"target density is not positive at {x}")
    return min(1.0, target(y) / tx)


def uniform_increment(width: float, k: int = 1) -> Callable:
    """Symmetric proposal increments uniform on [-width/2, width/2]^k."""
    def draw(rng):
        return tuple((rng.uniform() - 0.5) * width for _ in range(k))
    return draw


def normal_increment(scale: float, k: int = 1) -> Callable:
    def draw(rng):
        return tuple(map(float, scale * rng.generator.standard_normal(k)))
    return draw


def rw_mhg(target: Callable, proposal_sampler: Callable) -> ChainModel:
    """Random-walk Metropolis with a symmetric increment sampler on R^k."""

    def step(state, rng):
        inc = proposal_sampler(rng)
        y = tuple(a + b for a, b in zip(state, inc))
        if rng.uniform() < rw_acceptance(target, state, y):
            return y
        return state

    def validate(state) -> None:
        if target(state) <= 0:
            raise ValueError(f"target density is not positive at {state!r}")

    return ChainModel(
        name="rw-mhg",
        state_kind=StateKind.VECTOR,
        step=step,
        detailed_balance_declared=True,
        validate=validate,
        section="section 5.6 (random-walk Metropolis)",
    )


def normal_target(mu: float = 0.0, sigma: float = 1.0) -> Callable:
    """Product N(mu, sigma^2) density on R^k for tuple states."""
    c = 1.0 / (sigma * math.sqrt(2 * math.pi))

    def pdf(x) -> float:
        return math.prod(c * math.exp(-0.5 * ((v - mu) / sigma) ** 2) for v in x)
    return pdf


# ---------------------------------------------------------------------------
# Birth-death sampler for finite point processes


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or any(u <= l for l, u in zip(self.lower, self.upper)):
            raise ValueError("box needs upper > lower in every coordinate")

    @property
    def volume(self) -> float:
        return math.prod(u - l for l, u in zip(self.lower, self.upper))

    def contains(self, pt) -> bool:
        return all(l <= v <= u for v, l, u in zip(pt, self.lower, self.upper)) and len(pt) == len(self.lower)

    def sample(self, rng) -> tuple[float, ...]:
        return tuple(l + (u - l) * rng.uniform() for l, u in zip(self.lower, self.upper))


@dataclass(frozen=True)
class PointPattern:
    """A finite multiset of points; equality is up to permutation."""

    points: tuple

    TOL = 1e-12

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointPattern):
            return NotImplemented
        return patterns_equal(self.points, other.points)

    def __hash__(self):
        return hash(len(self.points))


def patterns_equal(a, b, tol: float = PointPattern.TOL) -> bool:
    if len(a) != len(b):
        return False
    left = sorted(map(tuple, a))
    right = sorted(map(tuple, b))
    return all(len(p) == len(q) and all(abs(u - v) <= tol for u, v in zip(p, q)) for p, q in zip(left, right))


def strauss_density(beta: float, gamma: float, r: float) -> Callable:
    """Unnormalized Strauss density beta^n gamma^s, s = #pairs closer than r.

    With 0 <= gamma <= 1 it satisfies pi(x u xi) <= beta * pi(x).
    """
    if beta <= 0 or not 0 <= gamma <= 1 or r < 0:
        raise ValueError("need beta > 0, 0 <= gamma <= 1, r >= 0")

    def pdf(x) -> float:
        n = len(x)
        s = 0
        for i in range(n):
            for j in range(i + 1, n):
                if math.dist(x[i], x[j]) < r:
                    s += 1
        return beta ** n * (gamma ** s if s else 1.0)
    return pdf


def poisson_density(beta: float = 1.0) -> Callable:
    """Density beta^n(x) with respect to the unit-rate Poisson process."""
    return lambda x: beta ** len(x)


def up_acceptance(density: Callable, volume: float, x, xi) -> float:
    px = density(x)
    if px <= 0:
        raise ValueError("density is zero at the current pattern")
    return min(1.0, volume * density(x + (xi,)) / ((len(x) + 1) * px))


def down_acceptance(density: Callable, volume: float, x, i: int) -> float:
    px = density(x)
    if px <= 0:
        raise ValueError("density is zero at the current pattern")
    smaller = x[:i] + x[i + 1:]
    return min(1.0, len(x) * density(smaller) / (volume * px))


def check_local_stability(density: Callable, region: Box, M: float, rng, trials: int = 200,
                          max_points: int = 10) -> bool:
    """Spot-check pi(x u xi) <= M pi(x) on random patterns."""
    for _ in range(trials):
        k = rng.integer(max_points + 1)
        x = tuple(region.sample(rng) for _ in range(k))
        px = density(x)
        if px > 0 and density(x + (region.sample(rng),)) > M * px * (1 + 1e-12):
            return False
    return True


def point_process_mhg(region: Box, density: Callable, M: float | None = None) -> ChainModel:
    """Up step w.p. 1/2 (add a uniform point), else down step (drop a uniform point)."""
    volume = region.volume

    def step(x, rng):
        if rng.uniform() < 0.5:
            xi = region.sample(rng)
            if rng.uniform() < up_acceptance(density, volume, x, xi):
                return x + (xi,)
            return x
        if not x:
            return x
        i = rng.integer(len(x))
        if rng.uniform() < down_acceptance(density, volume, x, i):
            return x[:i] + x[i + 1:]
        return x

    def validate(x) -> None:
        if any(not region.contains(p) for p in x):
            raise ValueError("pattern has points outside the region")
        if density(x) <= 0:
            raise ValueError("initial pattern has zero density")

    return ChainModel(
        name="point-process-mhg",
        state_kind=StateKind.POINTS,
        step=step,
        params={"volume": volume, "M": M},
        detailed_balance_declared=True,
        validate=validate,
        default_initial=(),
        section="section 5.5 (birth-death MHG for finite point processes)",
    )
