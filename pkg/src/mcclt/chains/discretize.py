"""Finite-state versions of the continuous samplers, for exact analysis.

Each builder returns ``(states, P)`` with ``P`` row-stochastic.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy import stats


def independence_on_grid(target: Callable[[float], float], proposal: Callable[[float], float],
                         grid: Sequence[float]) -> tuple[list, np.ndarray]:
    """Independence Metropolis-Hastings on grid points.

    Target and proposal weights are the densities at the grid points,
    normalized over the grid.
    """
    grid = np.asarray(grid, dtype=float)
    pi = np.array([target(x) for x in grid])
    p = np.array([proposal(x) for x in grid])
    if np.any(p <= 0) or np.any(pi <= 0):
        raise ValueError("densities must be positive on the grid")
    pi, p = pi / pi.sum(), p / p.sum()
    w = pi / p
    acc = np.minimum(1.0, w[None, :] / w[:, None])
    P = p[None, :] * acc
    np.fill_diagonal(P, 0.0)
    P[np.diag_indices_from(P)] = 1.0 - P.sum(axis=1)
    return grid.tolist(), P


def rw_on_grid(target: Callable[[float], float], grid: Sequence[float], half_width: int = 1) -> tuple[list, np.ndarray]:
    """Random-walk Metropolis on grid points; proposals are uniform over the
    2*half_width nearest neighbours and off-grid proposals are rejected."""
    grid = np.asarray(grid, dtype=float)
    S = len(grid)
    pi = np.array([target(x) for x in grid])
    if np.any(pi <= 0):
        raise ValueError("target must be positive on the grid")
    P = np.zeros((S, S))
    q = 1.0 / (2 * half_width)
    for i in range(S):
        for k in range(1, half_width + 1):
            for j in (i - k, i + k):
                if 0 <= j < S:
                    P[i, j] = q * min(1.0, pi[j] / pi[i])
        P[i, i] = 1.0 - P[i].sum()
    return grid.tolist(), P


def _gamma_cells(shape: float, rate: float, edges: np.ndarray) -> np.ndarray:
    cdf = stats.gamma.cdf(edges, shape, scale=1.0 / rate)
    sf = stats.gamma.sf(edges, shape, scale=1.0 / rate)
    # differencing survival values keeps far-tail cells from underflowing to 0
    probs = np.where(cdf[:-1] < 0.5, np.diff(cdf), -np.diff(sf))
    probs[-1] += sf[-1]
    probs[0] += cdf[0]
    return probs


def gamma_gibbs_on_grid(alpha1: float, a: float, b: float, alpha2: float, t: float,
                        x_edges: Sequence[float], y_edges: Sequence[float]):
    """Gamma two-block Gibbs sampler (one y coordinate, beta(x) = t + x) on cells.

    Conditionals are evaluated at cell midpoints (the last cell absorbs the
    tail). Returns ``(states, P_joint, x_mid, P_x)`` where ``P_x`` is the
    marginal x-chain x' -> y -> x.
    """
    xe, ye = np.asarray(x_edges, float), np.asarray(y_edges, float)
    x_mid = 0.5 * (xe[:-1] + xe[1:])
    y_mid = 0.5 * (ye[:-1] + ye[1:])
    # x | y ~ Gamma(alpha1, a + b y);  y | x ~ Gamma(alpha2, t + x)
    Px_given_y = np.array([_gamma_cells(alpha1, a + b * y, xe) for y in y_mid])
    Py_given_x = np.array([_gamma_cells(alpha2, t + x, ye) for x in x_mid])
    nx, ny = len(x_mid), len(y_mid)
    states = [(float(x), float(y)) for x in x_mid for y in y_mid]
    # (x', y') -> (x, y) with probability Px|y'(x) Py|x(y)
    P = np.zeros((nx * ny, nx * ny))
    for i in range(nx):
        for j in range(ny):
            P[i * ny + j] = (Px_given_y[j][:, None] * Py_given_x).ravel()
    P /= P.sum(axis=1, keepdims=True)
    P_x = Py_given_x @ Px_given_y
    P_x /= P_x.sum(axis=1, keepdims=True)
    return states, P, x_mid, P_x


def point_process_cardinality_chain(volume: float, count_density: Callable[[int], float],
                                    n_max: int) -> tuple[list, np.ndarray]:
    """Birth-death sampler for a density depending on the pattern only through
    its cardinality; the count process is then itself Markov. Births from
    ``n_max`` are rejected."""
    S = n_max + 1
    P = np.zeros((S, S))
    for n in range(S):
        if n < n_max:
            P[n, n + 1] = 0.5 * min(1.0, volume * count_density(n + 1) / ((n + 1) * count_density(n)))
        if n > 0:
            P[n, n - 1] = 0.5 * min(1.0, n * count_density(n - 1) / (volume * count_density(n)))
        P[n, n] = 1.0 - P[n].sum()
    return list(range(S)), P
