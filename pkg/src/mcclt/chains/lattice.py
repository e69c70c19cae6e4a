"""One-dimensional toy chains: the signed geometric chain on Z and the
random walk on [0, inf) reflected at zero."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from ..kernel import ChainModel, StateKind, TruncatedKernel


# ---------------------------------------------------------------------------
# Signed geometric chain


@dataclass(frozen=True)
class SignedGeometricParams:
    theta: float

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")


def signed_geometric_pi(theta: float, x: int) -> float:
    """Closed-form stationary probability of state x."""
    pi0 = (1.0 - theta) / (2.0 - theta)
    if x == 0:
        return pi0
    return pi0 * theta ** (abs(x) - 1) / 2.0


def signed_geometric_chain(theta: float) -> ChainModel:
    """From x != 0 move one step away from 0 w.p. theta, else jump to 0;
    from 0 move to +1 or -1 with equal probability."""
    SignedGeometricParams(theta)

    def step(x: int, rng) -> int:
        u = rng.uniform()
        if x == 0:
            return 1 if u < 0.5 else -1
        if u < theta:
            return x + 1 if x > 0 else x - 1
        return 0

    def kernel_row(x: int) -> dict:
        if x == 0:
            return {1: 0.5, -1: 0.5}
        out = x + 1 if x > 0 else x - 1
        return {out: theta, 0: 1.0 - theta}

    def truncate(L: int) -> TruncatedKernel:
        if L < 1:
            raise ValueError("cutoff must be >= 1")

        def row(x: int) -> dict:
            r = kernel_row(x)
            if abs(x) == L:
                # lazy boundary: the outward move stays put
                out = x + 1 if x > 0 else x - 1
                r = {x: r.pop(out), **r}
            return r

        return TruncatedKernel(list(range(-L, L + 1)), row, theta ** L, "lazy-boundary")

    def validate(x) -> None:
        if not isinstance(x, (int, np.integer)):
            raise ValueError(f"state {x!r} is not an integer")

    return ChainModel(
        name="signed-geometric",
        state_kind=StateKind.LATTICE,
        step=step,
        params={"theta": theta},
        kernel_row=kernel_row,
        truncate=truncate,
        stationary_reference=lambda x: signed_geometric_pi(theta, int(x)),
        validate=validate,
        default_initial=0,
        section="Example 2, section 2.1 and Appendix A",
    )


# ---------------------------------------------------------------------------
# Reflected random walk


@dataclass(frozen=True)
class IncrementDistribution:
    """A named increment law W for the reflected walk.

    kinds: ``two-point`` (+1 w.p. q, -1 otherwise), ``normal`` (mu, sigma),
    ``shifted-exponential`` (Exp(rate) - shift).
    """

    kind: str
    q: float = 0.0
    mu: float = 0.0
    sigma: float = 1.0
    rate: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("two-point", "normal", "shifted-exponential"):
            raise ValueError(f"unknown increment law {self.kind!r}")
        if self.kind == "two-point" and not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        if self.kind == "normal" and self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kind == "shifted-exponential" and self.rate <= 0:
            raise ValueError("rate must be positive")

    @classmethod
    def two_point(cls, q: float) -> IncrementDistribution:
        return cls("two-point", q=q)

    @classmethod
    def normal(cls, mu: float, sigma: float = 1.0) -> IncrementDistribution:
        return cls("normal", mu=mu, sigma=sigma)

    @classmethod
    def shifted_exponential(cls, rate: float, shift: float) -> IncrementDistribution:
        return cls("shifted-exponential", rate=rate, shift=shift)

    @property
    def mean(self) -> float:
        if self.kind == "two-point":
            return 2.0 * self.q - 1.0
        if self.kind == "normal":
            return self.mu
        return 1.0 / self.rate - self.shift

    @property
    def lattice(self) -> bool:
        return self.kind == "two-point"

    def sample(self, rng) -> float:
        if self.kind == "two-point":
            return 1 if rng.uniform() < self.q else -1
        if self.kind == "normal":
            return self.mu + self.sigma * float(rng.generator.standard_normal())
        return float(rng.generator.exponential(1.0 / self.rate)) - self.shift

    def cdf(self, w: float) -> float:
        if self.kind == "two-point":
            return 0.0 if w < -1 else (1.0 - self.q if w < 1 else 1.0)
        if self.kind == "normal":
            return float(stats.norm.cdf(w, self.mu, self.sigma))
        return float(stats.expon.cdf(w + self.shift, scale=1.0 / self.rate))

    def pdf(self, w: float) -> float:
        if self.kind == "normal":
            return float(stats.norm.pdf(w, self.mu, self.sigma))
        if self.kind == "shifted-exponential":
            return float(stats.expon.pdf(w + self.shift, scale=1.0 / self.rate))
        raise ValueError("two-point law has no density")

    def positive_part_moment(self, m: float) -> float:
        """E[(W^+)^m]."""
        if self.kind == "two-point":
            return self.q
        lo = 0.0
        val, _ = integrate.quad(lambda w: w ** m * self.pdf(w), lo, math.inf)
        return val

    def support_lower(self) -> float:
        if self.kind == "two-point":
            return -1.0
        if self.kind == "normal":
            return -math.inf
        return -self.shift


def reflected_random_walk(inc: IncrementDistribution) -> ChainModel:
    """X_{n+1} = max(X_n + W_{n+1}, 0)."""
    if inc.mean >= 0:
        raise ValueError(f"increment mean {inc.mean} must be negative for Harris ergodicity")

    def step(x, rng):
        return max(x + inc.sample(rng), 0)

    kernel_row = truncate = expectation = None
    if inc.lattice:
        q = inc.q

        def kernel_row(x: int) -> dict:
            if x == 0:
                return {1: q, 0: 1.0 - q}
            return {x + 1: q, x - 1: 1.0 - q}

        def truncate(L: int) -> TruncatedKernel:
            if L < 1:
                raise ValueError("cutoff must be >= 1")

            def row(x: int) -> dict:
                if x == L:
                    return {L: q, L - 1: 1.0 - q}
                return kernel_row(x)

            # geometric stationary law with ratio q/(1-q)
            r = q / (1.0 - q)
            return TruncatedKernel(list(range(0, L + 1)), row, r ** (L + 1), "lazy-boundary")
    else:

        def expectation(x: float, g) -> float:
            # atom at zero plus the continuous part above it
            atom = g(0.0) * inc.cdf(-x)
            lo = max(-x, inc.support_lower())
            cont, err = integrate.quad(lambda w: g(x + w) * inc.pdf(w), lo, math.inf, limit=200)
            return atom + cont, err

    def validate(x) -> None:
        if x < 0:
            raise ValueError(f"state {x!r} is negative")
        if inc.lattice and int(x) != x:
            raise ValueError(f"state {x!r} is not on the integer lattice")

    return ChainModel(
        name="reflected-walk",
        state_kind=StateKind.LATTICE if inc.lattice else StateKind.NONNEGATIVE,
        step=step,
        params={"increment": inc.kind, "q": inc.q, "mu": inc.mu, "sigma": inc.sigma,
                "rate": inc.rate, "shift": inc.shift},
        kernel_row=kernel_row,
        truncate=truncate,
        expectation=expectation,
        validate=validate,
        default_initial=0 if inc.lattice else 0.0,
        section="Example 3, section 2.1",
    )
