"""Two Gibbs samplers: the gamma/gamma two-block sampler and the fixed-scan
sampler for the one-way normal random effects posterior.

Gamma laws are shape-rate throughout: density proportional to
u^(shape-1) exp(-rate u).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..kernel import ChainModel, StateKind


# ---------------------------------------------------------------------------
# Gamma two-block sampler


@dataclass(frozen=True)
class LinearRates:
    """beta_i(x) = t_i + x."""

    t: tuple[float, ...]

    def __post_init__(self):
        if any(ti <= 0 for ti in self.t):
            raise ValueError("every t_i must be positive")

    def __call__(self, x: float) -> np.ndarray:
        return np.asarray(self.t) + x

    def ratio_infimum(self, b: Sequence[float]) -> np.ndarray:
        """inf over x > 0 of beta_i(x) / (b_i x + beta_i(x)).

        (t + x) / (t + (1 + b) x) decreases from 1 towards 1 / (1 + b).
        """
        return 1.0 / (1.0 + np.asarray(b, dtype=float))

    def ratio_lower_bound(self, b: Sequence[float]) -> np.ndarray:
        """The cruder bound min(1, t_i) / (1 + b_i + t_i)."""
        t = np.asarray(self.t)
        return np.minimum(1.0, t) / (1.0 + np.asarray(b, dtype=float) + t)


def rate_ratio(beta_family: Callable, b: Sequence[float], x: float) -> np.ndarray:
    beta = np.asarray(beta_family(x), dtype=float)
    return beta / (np.asarray(b) * x + beta)


def gamma_gibbs(alpha1: float, a: float, b: Sequence[float], alpha2: Sequence[float],
                beta_family: Callable[[float], np.ndarray]) -> ChainModel:
    """(x', y') -> (x, y): x ~ Gamma(alpha1, a + b.y'), then y_i ~ Gamma(alpha2_i, beta_i(x)).

    States are flat tuples ``(x, y_1, ..., y_n)``.
    """
    b = np.asarray(b, dtype=float)
    alpha2 = np.asarray(alpha2, dtype=float)
    if alpha1 <= 0 or a <= 0 or np.any(b <= 0) or np.any(alpha2 <= 0):
        raise ValueError("shape and rate parameters must be positive")
    if b.shape != alpha2.shape:
        raise ValueError("b and alpha2 must have the same length")
    n = len(b)

    def step(state, rng):
        y_prev = np.asarray(state[1:], dtype=float)
        x_rate = a + float(b @ y_prev)
        if x_rate <= 0:
            raise ValueError(f"non-positive rate {x_rate} for x")
        g = rng.generator
        x = float(g.gamma(alpha1, 1.0 / x_rate))
        rates = np.asarray(beta_family(x), dtype=float)
        if np.any(rates <= 0):
            raise ValueError(f"beta family produced non-positive rates {rates} at x={x}")
        y = g.gamma(alpha2, 1.0 / rates)
        return (x, *map(float, y))

    def validate(state) -> None:
        if len(state) != n + 1 or any(v < 0 for v in state):
            raise ValueError(f"state must be {n + 1} non-negative reals")

    return ChainModel(
        name="gamma-gibbs",
        state_kind=StateKind.VECTOR,
        step=step,
        params={"alpha1": alpha1, "a": a, "b": b.tolist(), "alpha2": alpha2.tolist()},
        validate=validate,
        default_initial=(1.0, *([1.0] * n)),
        section="section 5.2 (benchmark gamma Gibbs sampler)",
    )


# ---------------------------------------------------------------------------
# Hierarchical random effects sampler


@dataclass(frozen=True)
class HierarchicalModelSpec:
    y: tuple[tuple[float, ...], ...]
    a1: float
    b1: float
    a2: float
    b2: float
    m0: float
    s0: float
    K: int = field(init=False)
    m: np.ndarray = field(init=False, repr=False)
    ybar: np.ndarray = field(init=False, repr=False)
    sse: float = field(init=False)

    def __post_init__(self):
        y = tuple(tuple(float(v) for v in g) for g in self.y)
        object.__setattr__(self, "y", y)
        K = len(y)
        if K < 3:
            raise ValueError(f"need K >= 3 groups, got {K}")
        m = np.array([len(g) for g in y])
        if m.min() < 2:
            raise ValueError("every group needs at least 2 observations")
        for name in ("a1", "b1", "a2", "b2", "s0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        ybar = np.array([np.mean(g) for g in y])
        sse = float(sum(((np.asarray(g) - yb) ** 2).sum() for g, yb in zip(y, ybar)))
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "ybar", ybar)
        object.__setattr__(self, "sse", sse)

    @property
    def M(self) -> int:
        return int(self.m.sum())

    @property
    def m_min(self) -> int:
        return int(self.m.min())

    @property
    def m_max(self) -> int:
        return int(self.m.max())

    @property
    def grand_mean(self) -> float:
        return float(self.ybar.mean())

    def v1(self, theta, mu) -> float:
        return float(((np.asarray(theta) - mu) ** 2).sum())

    def v2(self, theta) -> float:
        return float((self.m * (np.asarray(theta) - self.ybar) ** 2).sum())


def synthetic_hierarchical_data(K: int, m: int | Sequence[int], seed: int, mu: float = 0.0,
                                tau: float = 1.0, sigma: float = 1.0) -> tuple[tuple[float, ...], ...]:
    """Draw y_ij = theta_i + sigma * e_ij, theta_i = mu + tau * z_i."""
    sizes = [m] * K if isinstance(m, int) else list(m)
    g = np.random.default_rng(seed)
    theta = mu + tau * g.standard_normal(K)
    return tuple(tuple((t + sigma * g.standard_normal(mi)).tolist()) for t, mi in zip(theta, sizes))


def split_state(state, K: int):
    """(mu, theta, lam_theta, lam_e) from the flat tuple."""
    return state[0], np.asarray(state[1:K + 1], dtype=float), state[K + 1], state[K + 2]


def mu_conditional(spec: HierarchicalModelSpec, theta, lam_theta: float) -> tuple[float, float]:
    prec = spec.s0 + spec.K * lam_theta
    return (spec.s0 * spec.m0 + spec.K * lam_theta * float(np.mean(theta))) / prec, 1.0 / prec


def theta_conditional(spec: HierarchicalModelSpec, mu: float, lam_theta: float, lam_e: float):
    prec = lam_theta + spec.m * lam_e
    return (lam_theta * mu + spec.m * lam_e * spec.ybar) / prec, 1.0 / prec


def hierarchical_gibbs(spec: HierarchicalModelSpec) -> ChainModel:
    """Fixed scan: mu, then all theta_i, then lambda_e, then lambda_theta.

    States are flat tuples ``(mu, theta_1..theta_K, lambda_theta, lambda_e)``.
    """
    K = spec.K

    def step(state, rng):
        g = rng.generator
        _, theta_p, lt_p, le_p = split_state(state, K)
        mean, var = mu_conditional(spec, theta_p, lt_p)
        mu = mean + np.sqrt(var) * g.standard_normal()
        tmean, tvar = theta_conditional(spec, mu, lt_p, le_p)
        theta = tmean + np.sqrt(tvar) * g.standard_normal(K)
        le = g.gamma(spec.M / 2 + spec.a2, 1.0 / ((spec.v2(theta) + spec.sse) / 2 + spec.b2))
        lt = g.gamma(K / 2 + spec.a1, 1.0 / (spec.v1(theta, mu) / 2 + spec.b1))
        return (float(mu), *theta.tolist(), float(lt), float(le))

    def validate(state) -> None:
        if len(state) != K + 3:
            raise ValueError(f"state must have {K + 3} coordinates")
        if state[K + 1] <= 0 or state[K + 2] <= 0:
            raise ValueError("precisions must be positive")

    return ChainModel(
        name="hierarchical-gibbs",
        state_kind=StateKind.VECTOR,
        step=step,
        params={"K": K, "a1": spec.a1, "b1": spec.b1, "a2": spec.a2, "b2": spec.b2,
                "m0": spec.m0, "s0": spec.s0},
        validate=validate,
        default_initial=(spec.grand_mean, *spec.ybar.tolist(), 1.0, 1.0),
        section="section 5.3 (hierarchical random effects Gibbs sampler)",
    )
