"""Drift computations: Delta V(x) = PV(x) - V(x), and grid certification of

    geometric drift   Delta V <= -d V + b 1_C
    polynomial drift  Delta V <= -d V^tau + b 1_C,   0 <= tau < 1.

Certification never extends beyond the evaluation grid.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Collection, Sequence

import numpy as np
from scipy import stats

from .chains.gibbs import HierarchicalModelSpec, split_state
from .exact import FiniteChainAnalysis
from .kernel import ChainModel
from .rng import rng_stream

CERTIFY_TOL = 1e-12
MC_CONFIDENCE = 0.99
MIN_MC_BUDGET = 10_000


# ---------------------------------------------------------------------------
# Drift function families


@dataclass(frozen=True)
class DriftFunction:
    """V: state -> [1, inf). ``log_fn`` is used where overflow is a risk."""

    name: str
    fn: Callable[[Any], float]
    log_fn: Callable[[Any], float] | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> float:
        if self.log_fn is not None:
            lv = self.log_fn(x)
            if lv > 709.0:
                raise OverflowError(f"V({x!r}) = exp({lv:.1f}) overflows; shrink the evaluation grid")
        return self.fn(x)

    def log(self, x) -> float:
        return self.log_fn(x) if self.log_fn is not None else math.log(self.fn(x))


def exp_abs(a: float) -> DriftFunction:
    """V(x) = a^|x|, a > 1."""
    if a <= 1:
        raise ValueError("need a > 1")
    la = math.log(a)
    return DriftFunction("exp-abs", lambda x: a ** abs(x), lambda x: abs(x) * la, {"a": a})


def power(m: float) -> DriftFunction:
    """V(x) = (x + 1)^m on [0, inf)."""
    if m <= 0:
        raise ValueError("need m > 0")
    return DriftFunction("power", lambda x: (x + 1.0) ** m, lambda x: m * math.log1p(x), {"m": m})


def cardinality_exp(A: float) -> DriftFunction:
    """V(x) = A^n(x) for point patterns."""
    if A < 1:
        raise ValueError("need A >= 1")
    la = math.log(A)
    return DriftFunction("cardinality-exp", lambda x: A ** len(x), lambda x: len(x) * la, {"A": A})


def inverse_sqrt_target(target: Callable, c: float) -> DriftFunction:
    """V(x) = c pi(x)^(-1/2); choose c >= sqrt(max pi) so that V >= 1."""
    if c <= 0:
        raise ValueError("need c > 0")

    def log_v(x) -> float:
        t = target(x)
        if t <= 0:
            raise ValueError(f"target vanishes at {x!r}")
        return math.log(c) - 0.5 * math.log(t)

    return DriftFunction("inverse-sqrt-target", lambda x: c / math.sqrt(target(x)), log_v, {"c": c})


def hierarchical_drift(spec: HierarchicalModelSpec, c1: float) -> DriftFunction:
    """Drift function for the random effects sampler with a gamma-precision split:

    1 + e^{c1 l_t} + e^{c1 l_e} + delta2 / (K delta1 l_t)
      + K l_t / (s0 + K l_t) (theta_bar - y_bar)^2
    """
    if not 0 < c1 < min(spec.b1, spec.b2):
        raise ValueError("need 0 < c1 < min(b1, b2)")
    K = spec.K
    d1 = 1.0 / (2 * spec.a1 + K - 2)
    d2 = 1.0 / (2 * spec.a1 - 2)
    ybar = spec.grand_mean

    def fn(state) -> float:
        _, theta, lt, le = split_state(state, K)
        return (1.0 + math.exp(c1 * lt) + math.exp(c1 * le) + d2 / (K * d1 * lt)
                + K * lt / (spec.s0 + K * lt) * (float(theta.mean()) - ybar) ** 2)

    return DriftFunction("hierarchical", fn, params={"c1": c1, "delta1": d1, "delta2": d2})


def hierarchical_drift_residual(spec: HierarchicalModelSpec, c1: float, vartheta: float) -> DriftFunction:
    """Variant of :func:`hierarchical_drift` that also penalizes the residual
    sum of squares of theta around the group means, weighted by ``vartheta`` in (0, 1)."""
    if not 0 < vartheta < 1:
        raise ValueError("vartheta must lie in (0, 1)")
    if not 0 < c1 < min(spec.b1, spec.b2):
        raise ValueError("need 0 < c1 < min(b1, b2)")
    K = spec.K
    ybar = spec.grand_mean

    def fn(state) -> float:
        mu, theta, lt, le = split_state(state, K)
        inner = 1.0 / le + float((spec.m * (spec.ybar - theta) ** 2).sum()) + (mu - ybar) ** 2
        return (1.0 + vartheta * inner + 1.0 / lt + math.exp(c1 * lt) + math.exp(c1 * le)
                + K * lt / (spec.s0 + K * lt) * (float(theta.mean()) - ybar) ** 2)

    return DriftFunction("hierarchical-residual", fn, params={"c1": c1, "vartheta": vartheta})


# ---------------------------------------------------------------------------
# Delta V


@dataclass(frozen=True)
class DeltaV:
    x: Any
    V: float
    PV: float
    delta: float
    error: float
    method: str


def delta_V(chain: ChainModel | FiniteChainAnalysis, V: DriftFunction | Callable, x, method: str = "exact",
            budget: int = 100_000, seed: int = 0, stream_id: int = 0) -> DeltaV:
    """PV(x) - V(x) with an error bound.

    ``exact`` and ``quadrature`` bounds are numerical; ``monte-carlo`` gives
    the half-width of a two-sided 99% normal confidence interval.
    """
    try:
        Vx = V(x)
    except OverflowError as exc:
        raise ValueError(f"{exc}") from None
    if not math.isfinite(Vx):
        raise ValueError(f"V({x!r}) is not finite; shrink the evaluation grid")

    if isinstance(chain, FiniteChainAnalysis):
        if method != "exact":
            raise ValueError("finite analyses support only the exact method")
        i = chain.index(x)
        vals = np.array([V(s) for s in chain.states])
        PV = float(chain.P[i] @ vals)
        err = 4 * np.finfo(float).eps * float(chain.P[i] @ np.abs(vals))
        return DeltaV(x, Vx, PV, PV - Vx, err, method)

    if method == "exact":
        if chain.kernel_row is None:
            raise ValueError(f"chain {chain.name!r} has no exact kernel; use quadrature or monte-carlo")
        try:
            terms = [(p, V(y)) for y, p in chain.kernel_row(x).items()]
        except OverflowError as exc:
            raise ValueError(f"{exc}") from None
        PV = math.fsum(p * v for p, v in terms)
        scale = math.fsum(p * abs(v) for p, v in terms)
        return DeltaV(x, Vx, PV, PV - Vx, 4 * np.finfo(float).eps * (scale + abs(Vx)), method)

    if method == "quadrature":
        if chain.expectation is None:
            raise ValueError(f"chain {chain.name!r} has no one-dimensional transition density")
        PV, err = chain.expectation(x, V)
        return DeltaV(x, Vx, PV, PV - Vx, err + 4 * np.finfo(float).eps * abs(Vx), method)

    if method == "monte-carlo":
        if budget < MIN_MC_BUDGET:
            raise ValueError(f"monte-carlo budget must be >= {MIN_MC_BUDGET}")
        rng = rng_stream(seed, stream_id)
        step = chain.step
        draws = np.fromiter((V(step(x, rng)) for _ in range(budget)), dtype=float, count=budget)
        z = stats.norm.ppf(0.5 + MC_CONFIDENCE / 2)
        PV = float(draws.mean())
        half = float(z * draws.std(ddof=1) / math.sqrt(budget))
        return DeltaV(x, Vx, PV, PV - Vx, half, method)

    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Certification


@dataclass(frozen=True)
class DriftSpec:
    V: DriftFunction
    kind: str = "geometric"
    tau: float = 1.0
    C: Collection | Callable | None = None
    d: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in ("geometric", "polynomial"):
            raise ValueError("kind must be 'geometric' or 'polynomial'")
        if self.kind == "polynomial" and not 0.0 <= self.tau < 1.0:
            raise ValueError("polynomial drift needs 0 <= tau < 1")
        if self.d is not None and self.d <= 0:
            raise ValueError("d must be positive")

    @property
    def kappa(self) -> float:
        return 1.0 if self.kind == "geometric" else self.tau

    def in_C(self, x) -> bool:
        if self.C is None:
            return False
        if callable(self.C):
            return bool(self.C(x))
        return x in self.C


@dataclass
class DriftPoint:
    state: Any
    V: float
    PV: float
    delta: float
    error: float
    in_C: bool
    rhs: float = math.nan
    slack: float = math.nan


@dataclass
class DriftReport:
    kind: str
    tau: float
    points: list[DriftPoint]
    d: float
    b: float
    C: list
    certified: bool
    witnesses: list
    method: str
    error_bound: float
    fitted: bool

    @property
    def verdict(self) -> str:
        return "certified-on-grid" if self.certified else "violated"

    @property
    def implied_order(self) -> float | None:
        if self.kind != "polynomial":
            return None
        return self.tau / (1.0 - self.tau)

    def rows(self):
        for p in self.points:
            yield p.state, p.V, p.PV, p.delta, p.rhs, p.slack, int(p.in_C)

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "tau": self.tau if self.kind == "polynomial" else None,
            "implied_polynomial_order": self.implied_order,
            "verdict": self.verdict,
            "d": self.d,
            "b": self.b,
            "C": self.C,
            "witnesses": self.witnesses,
            "method": self.method,
            "max_method_error": self.error_bound,
            "constants_fitted": self.fitted,
            "grid_size": len(self.points),
        }


def evaluate_grid(chain, V, grid: Sequence, method: str = "exact", budget: int = 100_000,
                  seed: int = 0, threads: int = 1) -> list[DeltaV]:
    """Delta V at each grid point; Monte Carlo point i uses stream i, so the
    result does not depend on ``threads``."""
    def one(item):
        i, x = item
        return delta_V(chain, V, x, method, budget, seed, i)

    if threads <= 1:
        return [one(it) for it in enumerate(grid)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(one, enumerate(grid)))


def _certify(spec: DriftSpec, values: list[DeltaV], method: str) -> DriftReport:
    if not values:
        raise ValueError("empty evaluation grid")
    kappa = spec.kappa
    pts = []
    for v in values:
        if v.V < 1.0 - 1e-12:
            raise ValueError(f"V({v.x!r}) = {v.V} < 1")
        pts.append(DriftPoint(v.x, v.V, v.PV, v.delta, v.error, spec.in_C(v.x)))

    fitted = spec.d is None or spec.b is None
    d, b = spec.d, spec.b
    witnesses: list = []
    if d is None:
        outside = [p for p in pts if not p.in_C]
        if not outside:
            raise ValueError("C covers the whole grid; the drift constant cannot be fitted")
        # conservative: use the upper end of each Delta V interval
        ratios = [-(p.delta + p.error) / p.V ** kappa for p in outside]
        d = min(ratios)
        if d <= 0:
            witnesses = [p.state for p, r in zip(outside, ratios) if r <= 0]
    if b is None:
        inside = [p.delta + p.error + d * p.V ** kappa for p in pts if p.in_C]
        b = max(max(inside), 0.0) if inside else 0.0

    for p in pts:
        p.rhs = -d * p.V ** kappa + (b if p.in_C else 0.0)
        p.slack = p.rhs - p.delta
    if not witnesses:
        witnesses = [p.state for p in pts if p.slack - p.error < -CERTIFY_TOL]
    certified = d > 0 and not witnesses and math.isfinite(b)
    return DriftReport(spec.kind, spec.tau, pts, float(d), float(b), [p.state for p in pts if p.in_C],
                       certified, witnesses, method, float(max(p.error for p in pts)), fitted)


def check_geometric_drift(chain, spec: DriftSpec, grid: Sequence, method: str = "exact",
                          budget: int = 100_000, seed: int = 0,
                          values: list[DeltaV] | None = None) -> DriftReport:
    """Certify Delta V <= -d V + b 1_C on the grid, fitting d and b when unset:
    d = min over grid minus C of -Delta V / V, b = max over C of Delta V + d V."""
    if spec.kind != "geometric":
        raise ValueError("spec.kind must be 'geometric'")
    if values is None:
        values = evaluate_grid(chain, spec.V, grid, method, budget, seed)
    return _certify(spec, values, method)


def check_polynomial_drift(chain, spec: DriftSpec, grid: Sequence, method: str = "exact",
                           budget: int = 100_000, seed: int = 0,
                           values: list[DeltaV] | None = None) -> DriftReport:
    """Certify Delta V <= -d V^tau + b 1_C on the grid."""
    if spec.kind != "polynomial":
        raise ValueError("spec.kind must be 'polynomial'")
    if values is None:
        values = evaluate_grid(chain, spec.V, grid, method, budget, seed)
    return _certify(spec, values, method)


def fit_small_set(chain, V: DriftFunction | Callable, grid: Sequence, target_d: float, kappa: float = 1.0,
                  method: str = "exact", budget: int = 100_000, seed: int = 0,
                  values: list[DeltaV] | None = None) -> list:
    """The sublevel set {x : -Delta V(x) / V(x)^kappa < target_d}."""
    values = values if values is not None else evaluate_grid(chain, V, grid, method, budget, seed)
    C = [v.x for v in values if -v.delta / v.V ** kappa < target_d]
    if len(C) == len(values):
        warnings.warn("small-set candidate is the whole grid; drift is uninformative at this d", stacklevel=2)
    return C


def fit_level_set(values: list[DeltaV], kappa: float = 1.0) -> tuple[float, list]:
    """Smallest V-level v* such that every grid point with V > v* has a
    strictly negative upper confidence bound on Delta V.

    Returns ``(v_star, C)`` with C = {V <= v*}; C may be the whole grid.
    """
    order = sorted(values, key=lambda v: v.V)
    v_star = -math.inf
    for v in order:
        if v.delta + v.error >= 0:
            v_star = v.V
    C = [v.x for v in values if v.V <= v_star]
    return v_star, C


def signed_geometric_feasibility(theta: float, a: float | None = None) -> dict:
    """Conditions a*theta < 1 and (a*theta - 1) a + 1 - theta < 0 for V = a^|x|, C = {0}.

    The quadratic theta a^2 - a + 1 - theta has roots 1 and (1 - theta)/theta,
    so a feasible a > 1 exists iff theta < 1/2, namely 1 < a < (1 - theta)/theta.
    """
    upper = (1.0 - theta) / theta
    out: dict[str, Any] = {
        "theta": theta,
        "feasible_a_interval": [1.0, upper] if theta < 0.5 else None,
        "family_feasible": theta < 0.5,
    }
    if a is not None:
        c1 = a * theta - 1.0
        c2 = (a * theta - 1.0) * a + 1.0 - theta
        out.update({"a": a, "a_theta_minus_1": c1, "boundary_condition": c2,
                    "a_feasible": a > 1 and c1 < 0 and c2 < 0})
    return out
