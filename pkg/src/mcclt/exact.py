"""Exact analysis of finite (or truncated) Markov chains.

Total variation is taken as sup over events, i.e. half the L1 distance.
Mixing coefficients are computed for the coordinate sigma-algebras of X_0
and X_n of the stationary chain.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Callable, Sequence

import numpy as np
from scipy import linalg
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .kernel import ChainModel

log = logging.getLogger(__name__)

MAX_EVENT_STATES = 22
MAX_LINALG_STATES = 1 << 20
ROW_TOL = 1e-12
POWER_CACHE_BYTES = 64 << 20
_BLOCK = 1 << 14


class ChainPropertyError(ValueError):
    """The transition matrix is reducible, periodic or not stochastic."""


@dataclass(eq=False)
class FiniteChainAnalysis:
    states: list
    P: np.ndarray
    pi: np.ndarray
    name: str = "matrix"
    truncation: dict | None = None
    condition: float | None = None
    _powers: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, state) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise KeyError(f"state {state!r} not in analysis") from None

    def power(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("lag must be non-negative")
        if n == 0:
            return np.eye(self.size)
        if n == 1:
            return self.P
        if n not in self._powers:
            below = [k for k in self._powers if k < n]
            k = max(below, default=1)
            M = self._powers.get(k, self.P)
            for j in range(k + 1, n + 1):
                M = M @ self.P
                self._store(j, M)
        return self._powers[n]

    def _store(self, n: int, M: np.ndarray) -> None:
        # bounded cache; the oldest lags go first
        while self._powers and (len(self._powers) + 1) * M.nbytes > POWER_CACHE_BYTES:
            self._powers.pop(min(self._powers))
        self._powers[n] = M

    def values(self, f: Callable | Sequence[float]) -> np.ndarray:
        if callable(f):
            return np.array([f(s) for s in self.states], dtype=float)
        v = np.asarray(f, dtype=float)
        if v.shape != (self.size,):
            raise ValueError(f"expected {self.size} function values, got shape {v.shape}")
        return v


# ---------------------------------------------------------------------------
# Construction and structural checks


def _check_stochastic(P: np.ndarray) -> None:
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ChainPropertyError("transition matrix must be square")
    if np.any(P < -ROW_TOL):
        raise ChainPropertyError("transition matrix has negative entries")
    dev = np.abs(P.sum(axis=1) - 1.0).max()
    if dev > ROW_TOL:
        raise ChainPropertyError(f"rows do not sum to 1 (max deviation {dev:.3e})")


def is_irreducible(P: np.ndarray) -> bool:
    n, _ = connected_components(P > 0, directed=True, connection="strong")
    return n == 1


def period(P: np.ndarray) -> int:
    """Period of an irreducible chain: gcd of level differences along edges."""
    adj = P > 0
    order, _ = breadth_first_order(adj, 0, directed=True)
    level = np.full(len(P), -1)
    level[0] = 0
    for u in order:
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
    rows, cols = np.nonzero(adj)
    diffs = np.abs(level[rows] + 1 - level[cols])
    return int(reduce(math.gcd, diffs.tolist(), 0))


def stationary_dist(P: np.ndarray | FiniteChainAnalysis) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 by LU with one step of iterative refinement."""
    if isinstance(P, FiniteChainAnalysis):
        return P.pi
    P = np.asarray(P, dtype=float)
    if not is_irreducible(P):
        raise ChainPropertyError("chain is not irreducible")
    d = period(P)
    if d != 1:
        raise ChainPropertyError(f"chain is periodic with period {d}")
    pi, _ = _solve_stationary(P)
    return pi


def _solve_stationary(P: np.ndarray) -> tuple[np.ndarray, float | None]:
    S = len(P)
    A = P.T - np.eye(S)
    A[-1, :] = 1.0
    rhs = np.zeros(S)
    rhs[-1] = 1.0
    lu = linalg.lu_factor(A)
    pi = linalg.lu_solve(lu, rhs)
    pi += linalg.lu_solve(lu, rhs - A @ pi)
    cond = None
    if S <= 2048:
        c = float(np.linalg.cond(A))
        if c > 1e8:
            cond = c
            log.warning("stationary system is ill-conditioned (cond=%.3e)", c)
    pi = np.where(np.abs(pi) < 1e-300, 0.0, pi)
    if np.any(pi < -1e-12):
        raise ChainPropertyError("stationary solve produced negative mass")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum(), cond


def from_matrix(P, states: Sequence | None = None, name: str = "matrix",
                truncation: dict | None = None) -> FiniteChainAnalysis:
    P = np.array(P, dtype=float)
    _check_stochastic(P)
    if len(P) > MAX_LINALG_STATES:
        raise ValueError(f"{len(P)} states exceeds the dense linear-algebra cap")
    if not is_irreducible(P):
        raise ChainPropertyError("chain is not irreducible")
    d = period(P)
    if d != 1:
        raise ChainPropertyError(f"chain is periodic with period {d}")
    pi, cond = _solve_stationary(P)
    states = list(range(len(P))) if states is None else list(states)
    if len(states) != len(P):
        raise ValueError("states and matrix size disagree")
    return FiniteChainAnalysis(states, P, pi, name, truncation, cond)


def build_finite(chain: ChainModel, truncation: int | None = None) -> FiniteChainAnalysis:
    """Exact transition matrix of a finite chain, or of a truncated countable one.

    Truncation keeps ``|x| <= L``; the outward move at the cutoff stays put.
    """
    if truncation is not None:
        if chain.truncate is None:
            raise ValueError(f"chain {chain.name!r} is not truncatable")
        tk = chain.truncate(int(truncation))
        index = {s: i for i, s in enumerate(tk.states)}
        P = np.zeros((len(tk.states), len(tk.states)))
        for i, s in enumerate(tk.states):
            for t, p in tk.row(s).items():
                P[i, index[t]] += p
        meta = {"chain": chain.name, "params": dict(chain.params), "cutoff": int(truncation),
                "rule": tk.rule, "tail_bound": tk.tail_bound}
        return from_matrix(P, tk.states, chain.name, meta)
    if chain.states is not None and chain.kernel_row is not None:
        states, P = chain.exact_table()
        return from_matrix(P, states, chain.name)
    raise ValueError(f"chain {chain.name!r} has no exact kernel; pass a truncation cutoff "
                     "for countable chains or discretize it")


# ---------------------------------------------------------------------------
# Total variation and minorization


@dataclass(frozen=True)
class DecayCurve:
    lags: np.ndarray
    values: np.ndarray
    rate: float
    constant: float


def fit_geometric_rate(lags: np.ndarray, values: np.ndarray, floor: float = 1e-11) -> tuple[float, float]:
    """Least-squares fit of log(value) = log(c) + n log(t) over the tail half
    of the points still above ``floor``."""
    lags, values = np.asarray(lags, float), np.asarray(values, float)
    keep = values > floor
    lags, values = lags[keep], values[keep]
    if len(lags) < 2:
        return math.nan, math.nan
    h = max(len(lags) // 2, 2)
    x, y = lags[-h:], np.log(values[-h:])
    slope, icept = np.polyfit(x, y, 1)
    return float(math.exp(slope)), float(math.exp(icept))


def tv_matrix(analysis: FiniteChainAnalysis, n_max: int) -> np.ndarray:
    """tv[n-1, x] = ||P^n(x, .) - pi||_TV for n = 1..n_max."""
    out = np.empty((n_max, analysis.size))
    for n in range(1, n_max + 1):
        out[n - 1] = 0.5 * np.abs(analysis.power(n) - analysis.pi[None, :]).sum(axis=1)
    return out


def tv_decay(analysis: FiniteChainAnalysis, x0, n_max: int) -> DecayCurve:
    i = analysis.index(x0)
    row = np.zeros(analysis.size)
    row[i] = 1.0
    vals = np.empty(n_max)
    for n in range(n_max):
        row = row @ analysis.P
        vals[n] = 0.5 * np.abs(row - analysis.pi).sum()
    lags = np.arange(1, n_max + 1)
    t, c = fit_geometric_rate(lags, vals)
    return DecayCurve(lags, vals, t, c)


def second_eigenvalue_modulus(analysis: FiniteChainAnalysis) -> float:
    ev = np.sort(np.abs(linalg.eigvals(analysis.P)))[::-1]
    return float(ev[1]) if len(ev) > 1 else 0.0


@dataclass(frozen=True)
class Minorization:
    epsilon: float
    Q: np.ndarray | None
    n0: int
    C: tuple

    @property
    def small(self) -> bool:
        return self.epsilon > 0

    def tv_bound(self, n: int) -> float:
        return (1.0 - self.epsilon) ** (n // self.n0)


def minorization_search(analysis: FiniteChainAnalysis, C: Sequence | None, n0: int) -> Minorization:
    """epsilon = sum_y min_{x in C} P^n0(x, y); Q the normalized column minima.

    ``C=None`` means the whole state space. epsilon == 0 means C is not
    small at this n0; that is reported, not raised.
    """
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    idx = list(range(analysis.size)) if C is None else [analysis.index(c) for c in C]
    if not idx:
        raise ValueError("C must be nonempty")
    mins = analysis.power(n0)[idx].min(axis=0)
    eps = float(mins.sum())
    Q = mins / eps if eps > 0 else None
    return Minorization(min(eps, 1.0), Q, n0, tuple(analysis.states[i] for i in idx))


def smallest_minorizing_lag(analysis: FiniteChainAnalysis, C: Sequence | None = None, n_max: int = 100) -> Minorization:
    for n0 in range(1, n_max + 1):
        m = minorization_search(analysis, C, n0)
        if m.small:
            return m
    return m


# ---------------------------------------------------------------------------
# Mixing coefficients


def _subset_bits(start: int, stop: int, width: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(width, dtype=np.int64)) & 1).astype(float)


def _check_event_size(analysis: FiniteChainAnalysis) -> None:
    if analysis.size > MAX_EVENT_STATES:
        raise ValueError(f"exhaustive event search needs <= {MAX_EVENT_STATES} states, "
                         f"got {analysis.size}; truncate the chain further")


def _joint_deviation(analysis: FiniteChainAnalysis, n: int) -> np.ndarray:
    # J[x, y] = pi(x) (P^n(x, y) - pi(y)); row sums over A give the signed
    # column profile of Pr(X_0 in A, X_n = y) - pi(A) pi(y)
    pi = analysis.pi
    return pi[:, None] * (analysis.power(n) - pi[None, :])


def alpha_mixing(analysis: FiniteChainAnalysis, n: int) -> float:
    """max over events A, B of |Pr(X_0 in A, X_n in B) - pi(A) pi(B)|.

    For fixed A the best B collects the positive (or negative) part of the
    signed column profile, giving half its L1 norm. A and its complement give
    the same value, so only subsets excluding the last state are scanned.
    """
    _check_event_size(analysis)
    J = _joint_deviation(analysis, n)
    S = analysis.size
    best = 0.0
    total = 1 << (S - 1)
    for lo in range(0, total, _BLOCK):
        bits = _subset_bits(lo, min(lo + _BLOCK, total), S - 1)
        c = bits @ J[:-1]
        best = max(best, float(0.5 * np.abs(c).sum(axis=1).max()))
    return best


def phi_mixing(analysis: FiniteChainAnalysis, n: int) -> float:
    """max over A with pi(A) > 0 and B of |Pr(X_n in B | X_0 in A) - pi(B)|."""
    _check_event_size(analysis)
    J = _joint_deviation(analysis, n)
    S = analysis.size
    pi = analysis.pi
    best = 0.0
    total = 1 << S
    for lo in range(1, total, _BLOCK):
        bits = _subset_bits(lo, min(lo + _BLOCK, total), S)
        mass = bits @ pi
        c = 0.5 * np.abs(bits @ J).sum(axis=1)
        ok = mass > 0
        if ok.any():
            best = max(best, float((c[ok] / mass[ok]).max()))
    return best


def _symmetrized(analysis: FiniteChainAnalysis, n: int) -> tuple[np.ndarray, np.ndarray]:
    s = np.sqrt(analysis.pi)
    if np.any(s <= 0):
        raise ChainPropertyError("stationary distribution has zero mass states")
    return s[:, None] * analysis.power(n) / s[None, :], s


def rho_mixing(analysis: FiniteChainAnalysis, n: int) -> float:
    """Maximal correlation of X_0 and X_n: the second singular value of
    D^(1/2) P^n D^(-1/2), D = diag(pi). The top one is 1, with vector sqrt(pi)."""
    A, _ = _symmetrized(analysis, n)
    sv = linalg.svdvals(A)
    return float(sv[1]) if len(sv) > 1 else 0.0


def rosenblatt_norm(analysis: FiniteChainAnalysis, n: int) -> float:
    """Operator norm of T^n on mean-zero functions in L2(pi)."""
    A, s = _symmetrized(analysis, n)
    return float(linalg.svdvals(A - np.outer(s, s))[0])


def detailed_balance_check(analysis: FiniteChainAnalysis, tol: float = 1e-10) -> tuple[bool, float]:
    F = analysis.pi[:, None] * analysis.P
    viol = float(np.abs(F - F.T).max())
    return viol < tol, viol


# ---------------------------------------------------------------------------
# Asymptotic variance


def _centered(analysis: FiniteChainAnalysis, f) -> np.ndarray:
    v = analysis.values(f)
    return v - float(analysis.pi @ v)


def asymptotic_variance_exact(analysis: FiniteChainAnalysis, f) -> float:
    """sigma^2 = 2 <f~, Z f~>_pi - <f~, f~>_pi with Z = (I - P + 1 pi)^-1."""
    ft = _centered(analysis, f)
    S = analysis.size
    A = np.eye(S) - analysis.P + np.outer(np.ones(S), analysis.pi)
    try:
        lu = linalg.lu_factor(A, check_finite=True)
    except linalg.LinAlgError as exc:
        raise ChainPropertyError("fundamental matrix is singular") from exc
    g = linalg.lu_solve(lu, ft)
    g += linalg.lu_solve(lu, ft - A @ g)
    pi = analysis.pi
    return float(2.0 * np.dot(pi * ft, g) - np.dot(pi * ft, ft))


def autocovariances(analysis: FiniteChainAnalysis, f, max_lag: int) -> np.ndarray:
    """cov_pi(f(X_0), f(X_k)) for k = 0..max_lag."""
    ft = _centered(analysis, f)
    w = analysis.pi * ft
    out = np.empty(max_lag + 1)
    g = ft.copy()
    for k in range(max_lag + 1):
        out[k] = float(w @ g)
        g = analysis.P @ g
    return out


def lag_series_variance(analysis: FiniteChainAnalysis, f, max_lag: int = 200) -> float:
    """var_pi f + 2 sum_{k=1}^{max_lag} cov_pi(f(X_0), f(X_k))."""
    ac = autocovariances(analysis, f, max_lag)
    return float(ac[0] + 2.0 * ac[1:].sum())


def stationary_mean(analysis: FiniteChainAnalysis, f) -> float:
    return float(analysis.pi @ analysis.values(f))


# ---------------------------------------------------------------------------
# Curves


@dataclass(frozen=True)
class MixingCurve:
    lags: np.ndarray
    alpha: np.ndarray
    rho: np.ndarray
    phi: np.ndarray
    tv_worst: np.ndarray
    tv_mean: np.ndarray
    bound_minorization: np.ndarray
    rate: dict[str, float]
    minorization: Minorization

    def rows(self):
        for i, n in enumerate(self.lags):
            yield (int(n), self.alpha[i], self.rho[i], self.phi[i], self.tv_worst[i],
                   self.bound_minorization[i])

    def inequality_slacks(self) -> dict[str, np.ndarray]:
        """Non-negative entries mean the inequality holds at that lag."""
        return {
            "4alpha<=rho": self.rho - 4 * self.alpha,
            "rho<=2sqrt(phi)": 2 * np.sqrt(self.phi) - self.rho,
            "alpha<=E_pi tv": self.tv_mean - self.alpha,
            "E_pi tv<=max tv": self.tv_worst - self.tv_mean,
            "tv<=minorization": self.bound_minorization - self.tv_worst,
        }

    def monotone(self, tol: float = 1e-12) -> dict[str, bool]:
        out = {}
        for name in ("alpha", "rho", "phi", "tv_worst"):
            v = getattr(self, name)
            out[name] = bool(np.all(np.diff(v) <= tol))
        return out


def mixing_curve(analysis: FiniteChainAnalysis, n_max: int, C: Sequence | None = None,
                 n0: int | None = None) -> MixingCurve:
    """alpha, rho, phi and worst-case TV for lags 1..n_max, with the
    minorization bound on C (whole space by default). ``n0=None`` picks the
    smallest lag at which C is small."""
    lags = np.arange(1, n_max + 1)
    tv = tv_matrix(analysis, n_max)
    alpha = np.array([alpha_mixing(analysis, n) for n in lags])
    rho = np.array([rho_mixing(analysis, n) for n in lags])
    phi = np.array([phi_mixing(analysis, n) for n in lags])
    mino = smallest_minorizing_lag(analysis, C) if n0 is None else minorization_search(analysis, C, n0)
    bound = np.array([mino.tv_bound(int(n)) for n in lags])
    tv_worst = tv.max(axis=1)
    rates = {}
    for name, v in (("alpha", alpha), ("rho", rho), ("phi", phi), ("tv", tv_worst)):
        rates[name] = fit_geometric_rate(lags, v)[0]
    return MixingCurve(lags, alpha, rho, phi, tv_worst, tv @ analysis.pi, bound, rates, mino)


def describe(analysis: FiniteChainAnalysis) -> dict[str, Any]:
    ok, viol = detailed_balance_check(analysis)
    return {
        "name": analysis.name,
        "states": analysis.size,
        "detailed_balance": ok,
        "detailed_balance_violation": viol,
        "second_eigenvalue_modulus": second_eigenvalue_modulus(analysis),
        "stationary_residual_l1": float(np.abs(analysis.pi @ analysis.P - analysis.pi).sum()),
        "truncation": analysis.truncation,
        "condition_number": analysis.condition,
    }
