"""Catalog of named chains: constructors, parameter schemas and finite versions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .chains import (Box, Density1D, HierarchicalModelSpec, IncrementDistribution, LinearRates, gamma_gibbs,
                     hardcore_chain, hierarchical_gibbs, independence_sampler, point_process_mhg,
                     reflected_random_walk, rw_mhg, signed_geometric_chain)
from .chains.discretize import (gamma_gibbs_on_grid, independence_on_grid, point_process_cardinality_chain,
                                rw_on_grid)
from .chains.gibbs import synthetic_hierarchical_data
from .chains.metropolis import normal_increment, poisson_density, strauss_density, uniform_increment
from .exact import FiniteChainAnalysis, build_finite, from_matrix
from .kernel import ChainModel


@dataclass(frozen=True)
class Param:
    kind: str
    default: Any
    doc: str


@dataclass(frozen=True)
class ChainEntry:
    name: str
    example: str
    description: str
    params: dict[str, Param]
    builder: Callable[[dict], ChainModel]
    finite_builder: Callable[[dict, int | None], FiniteChainAnalysis] | None = None

    def resolve(self, params: dict | None) -> dict:
        params = dict(params or {})
        unknown = set(params) - set(self.params)
        if unknown:
            raise ValueError(f"unknown parameter(s) for chain {self.name!r}: {sorted(unknown)}")
        return {k: params.get(k, p.default) for k, p in self.params.items()}

    def build(self, params: dict | None = None) -> ChainModel:
        return self.builder(self.resolve(params))

    def finite(self, params: dict | None = None, truncation: int | None = None) -> FiniteChainAnalysis:
        if self.finite_builder is None:
            raise ValueError(f"chain {self.name!r} has no finite version for exact analysis")
        return self.finite_builder(self.resolve(params), truncation)

    def catalog_entry(self) -> dict:
        return {
            "name": self.name,
            "example": self.example,
            "description": self.description,
            "exact": self.finite_builder is not None,
            "params": {k: {"type": p.kind, "default": p.default, "doc": p.doc} for k, p in self.params.items()},
        }


def _density(d: dict) -> Density1D:
    return Density1D(**d)


def _grid(params: dict) -> np.ndarray:
    h = params["grid_step"]
    lo, hi = params["grid_min"], params["grid_max"]
    k = int(round((hi - lo) / h))
    return lo + h * (np.arange(k + 1) + params["grid_offset"])


# builders ------------------------------------------------------------------


def _hardcore(p):
    return hardcore_chain(p["n1"], p["n2"], p["p"])


def _hardcore_finite(p, _):
    return build_finite(_hardcore(p))


def _signed(p):
    return signed_geometric_chain(p["theta"])


def _signed_finite(p, L):
    return build_finite(_signed(p), L if L is not None else p["cutoff"])


def _increment(p) -> IncrementDistribution:
    if p["increment"] == "two-point":
        return IncrementDistribution.two_point(p["q"])
    if p["increment"] == "normal":
        return IncrementDistribution.normal(p["mu"], p["sigma"])
    return IncrementDistribution.shifted_exponential(p["rate"], p["shift"])


def _reflected(p):
    return reflected_random_walk(_increment(p))


def _reflected_finite(p, L):
    if p["increment"] != "two-point":
        raise ValueError("only the two-point reflected walk has a finite version")
    return build_finite(_reflected(p), L if L is not None else p["cutoff"])


def _gamma(p):
    return gamma_gibbs(p["alpha1"], p["a"], p["b"], p["alpha2"], LinearRates(tuple([p["t"]] * len(p["b"]))))


def _gamma_finite(p, _):
    if len(p["b"]) != 1:
        raise ValueError("the finite gamma Gibbs version needs a single y coordinate")
    xe = np.linspace(0.0, p["x_max"], p["cells"] + 1)
    ye = np.linspace(0.0, p["y_max"], p["cells"] + 1)
    states, P, _, _ = gamma_gibbs_on_grid(p["alpha1"], p["a"], p["b"][0], p["alpha2"][0], p["t"], xe, ye)
    return from_matrix(P, states, name="gamma-gibbs-grid")


def _hier_spec(p) -> HierarchicalModelSpec:
    y = p["y"] if p["y"] is not None else synthetic_hierarchical_data(p["K"], p["m"], p["data_seed"])
    return HierarchicalModelSpec(y, p["a1"], p["b1"], p["a2"], p["b2"], p["m0"], p["s0"])


def _hier(p):
    return hierarchical_gibbs(_hier_spec(p))


def _indep(p):
    t, q = _density(p["target"]), _density(p["proposal"])
    c = independence_sampler(t.pdf, q.pdf, q.sample)
    return _with_initial(c, (p["initial"],))


def _indep_finite(p, _):
    t, q = _density(p["target"]), _density(p["proposal"])
    states, P = independence_on_grid(t.pdf, q.pdf, _grid(p))
    return from_matrix(P, states, name="independence-sampler-grid")


def _rw_target(p) -> Callable:
    d = _density(p["target"])
    return lambda x: math.prod(d.pdf(v) for v in x)


def _rw(p):
    inc = uniform_increment(p["width"], p["dim"]) if p["increment"] == "uniform" else normal_increment(p["width"], p["dim"])
    return _with_initial(rw_mhg(_rw_target(p), inc), tuple([p["initial"]] * p["dim"]))


def _rw_finite(p, _):
    d = _density(p["target"])
    states, P = rw_on_grid(d.pdf, _grid(p), p["half_width"])
    return from_matrix(P, states, name="rw-mhg-grid")


def _pp_density(p):
    if p["density"] == "poisson":
        return poisson_density(p["beta"]), p["beta"]
    return strauss_density(p["beta"], p["gamma"], p["r"]), p["beta"]


def _pp(p):
    dens, M = _pp_density(p)
    return point_process_mhg(Box(tuple(p["lower"]), tuple(p["upper"])), dens, M)


def _pp_finite(p, L):
    if p["density"] != "poisson":
        raise ValueError("the finite point-process version needs a density depending on cardinality only")
    vol = Box(tuple(p["lower"]), tuple(p["upper"])).volume
    beta = p["beta"]
    states, P = point_process_cardinality_chain(vol, lambda n: beta ** n, L if L is not None else p["cutoff"])
    return from_matrix(P, states, name="point-process-cardinality")


def _with_initial(chain: ChainModel, x0) -> ChainModel:
    from dataclasses import replace
    return replace(chain, default_initial=x0)


# catalog --------------------------------------------------------------------

_EXP1 = {"kind": "exponential", "rate": 1.0}
_EXP_HALF = {"kind": "exponential", "rate": 0.5}
_NORMAL = {"kind": "normal", "mu": 0.0, "sigma": 1.0}

_GRID = {
    "grid_min": Param("float", 0.0, "first grid point of the finite version"),
    "grid_max": Param("float", 40.0, "last grid point of the finite version"),
    "grid_step": Param("float", 0.05, "grid spacing of the finite version"),
    "grid_offset": Param("float", 0.5, "offset of grid points in units of grid_step"),
}

CHAINS: dict[str, ChainEntry] = {}


def _register(entry: ChainEntry) -> None:
    CHAINS[entry.name] = entry


_register(ChainEntry(
    "hardcore", "Example 1, §1 and §5.1",
    "single-site hard-core sampler on an n1 x n2 grid; states are bitsets of white sites",
    {"n1": Param("int", 2, "rows"), "n2": Param("int", 2, "columns"),
     "p": Param("float", 0.5, "probability of proposing white")},
    _hardcore, _hardcore_finite))
_register(ChainEntry(
    "signed-geometric", "Example 2, §2.1 and Appendix A",
    "chain on the integers that steps outward w.p. theta and otherwise returns to 0",
    {"theta": Param("float", 0.5, "outward step probability"),
     "cutoff": Param("int", 30, "truncation level L for exact analysis")},
    _signed, _signed_finite))
_register(ChainEntry(
    "reflected-walk", "Example 3, §2.1",
    "random walk on [0, inf) reflected at 0, X' = max(X + W, 0)",
    {"increment": Param("str", "two-point", "two-point | normal | shifted-exponential"),
     "q": Param("float", 0.25, "P(W = +1) for the two-point law"),
     "mu": Param("float", -0.5, "normal mean"), "sigma": Param("float", 1.0, "normal sd"),
     "rate": Param("float", 1.0, "exponential rate"), "shift": Param("float", 2.0, "exponential shift"),
     "cutoff": Param("int", 60, "truncation level for exact analysis")},
    _reflected, _reflected_finite))
_register(ChainEntry(
    "gamma-gibbs", "§5.2",
    "two-block Gibbs sampler with gamma conditionals and linear rates beta(x) = t + x",
    {"alpha1": Param("float", 2.0, "shape of x"), "a": Param("float", 1.0, "base rate of x"),
     "b": Param("list[float]", [1.0], "rate loadings of y in x's rate"),
     "alpha2": Param("list[float]", [2.0], "shapes of y"), "t": Param("float", 1.0, "rate intercept"),
     "cells": Param("int", 20, "cells per coordinate in the finite version"),
     "x_max": Param("float", 8.0, "upper edge of the x cells"), "y_max": Param("float", 8.0, "upper edge of the y cells")},
    _gamma, _gamma_finite))
_register(ChainEntry(
    "hierarchical-gibbs", "§5.3, Propositions 1 and 2",
    "Gibbs sampler for the normal random effects model (mu, theta, lambda_theta, lambda_e)",
    {"y": Param("list[list[float]] | null", None, "data by group; synthetic when null"),
     "K": Param("int", 3, "groups for synthetic data"), "m": Param("int", 5, "group size for synthetic data"),
     "data_seed": Param("int", 0, "seed for synthetic data"),
     "a1": Param("float", 2.0, ""), "b1": Param("float", 1.0, ""),
     "a2": Param("float", 1.0, ""), "b2": Param("float", 1.0, ""),
     "m0": Param("float", 0.0, "prior mean of mu"), "s0": Param("float", 1.0, "prior precision of mu")},
    _hier))
_register(ChainEntry(
    "independence-sampler", "§5.4",
    "independence Metropolis-Hastings sampler with a fixed proposal density",
    {"target": Param("density", _EXP1, "target density"),
     "proposal": Param("density", _EXP_HALF, "proposal density"),
     "initial": Param("float", 1.0, "default initial point"), **_GRID},
    _indep, _indep_finite))
_register(ChainEntry(
    "point-process-mhg", "§5.5",
    "birth-death Metropolis-Hastings-Green sampler for a finite point process on a box",
    {"lower": Param("list[float]", [0.0, 0.0], "box lower corner"),
     "upper": Param("list[float]", [1.0, 1.0], "box upper corner"),
     "density": Param("str", "strauss", "strauss | poisson"),
     "beta": Param("float", 5.0, "intensity"), "gamma": Param("float", 0.5, "interaction"),
     "r": Param("float", 0.1, "interaction radius"),
     "cutoff": Param("int", 40, "maximal count in the finite (poisson) version")},
    _pp, _pp_finite))
_register(ChainEntry(
    "rw-mhg", "§5.6",
    "random-walk Metropolis on R^k with a product target",
    {"target": Param("density", _NORMAL, "one-dimensional target, applied to each coordinate"),
     "increment": Param("str", "uniform", "uniform | normal"),
     "width": Param("float", 1.0, "uniform width or normal scale"),
     "dim": Param("int", 1, "dimension k"), "initial": Param("float", 0.0, "default initial coordinate"),
     "half_width": Param("int", 1, "neighbours per side in the finite version"),
     "grid_min": Param("float", -6.0, "first grid point of the finite version"),
     "grid_max": Param("float", 6.0, "last grid point of the finite version"),
     "grid_step": Param("float", 0.1, "grid spacing of the finite version"),
     "grid_offset": Param("float", 0.0, "offset of grid points in units of grid_step")},
    _rw, _rw_finite))


def get_chain(name: str) -> ChainEntry:
    try:
        return CHAINS[name]
    except KeyError:
        raise KeyError(f"unknown chain {name!r}; known: {sorted(CHAINS)}") from None


def catalog() -> list[dict]:
    return [CHAINS[k].catalog_entry() for k in sorted(CHAINS)]


def hierarchical_spec(params: dict | None = None) -> HierarchicalModelSpec:
    """Model spec behind a ``hierarchical-gibbs`` parameter set."""
    return _hier_spec(CHAINS["hierarchical-gibbs"].resolve(params))


def target_density(name: str, params: dict | None = None) -> Callable:
    """Target density on states of a Metropolis-type chain."""
    entry = get_chain(name)
    p = entry.resolve(params)
    if name == "rw-mhg":
        return _rw_target(p)
    if name == "independence-sampler":
        d = _density(p["target"])
        return lambda x: d.pdf(x[0])
    raise ValueError(f"chain {name!r} has no declared target density")
