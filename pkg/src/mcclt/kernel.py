"""Chain abstraction, trajectories and ergodic averaging."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .rng import RandomStream, rng_stream

State = Any
StepRule = Callable[[State, RandomStream], State]


class StateKind(str, Enum):
    FINITE = "finite-enumerable"
    LATTICE = "integer-lattice"
    NONNEGATIVE = "nonnegative-real"
    VECTOR = "real-vector"
    POINTS = "point-pattern"


class TruncatedKernel(NamedTuple):
    """A finite restriction of a countable kernel.

    ``row(x)`` maps each state to its one-step distribution inside ``states``;
    ``tail_bound`` bounds the stationary mass cut off by the truncation.
    """

    states: list
    row: Callable[[State], dict]
    tail_bound: float
    rule: str


@dataclass(frozen=True, eq=False)
class ChainModel:
    """A simulable Markov kernel plus whatever exact structure is known.

    ``kernel_row`` gives the exact one-step law as ``{next_state: prob}``
    for discrete chains. ``states`` enumerates a finite state space.
    ``truncate(L)`` returns a :class:`TruncatedKernel` for countable chains.
    ``expectation(x, g)`` computes ``E[g(X_1) | X_0 = x]`` by quadrature
    for one-dimensional continuous kernels, returning ``(value, abs_error)``.
    """

    name: str
    state_kind: StateKind
    step: StepRule
    params: Mapping[str, Any] = field(default_factory=dict)
    kernel_row: Callable[[State], dict] | None = None
    states: tuple | None = None
    truncate: Callable[[int], TruncatedKernel] | None = None
    expectation: Callable[[State, Callable[[State], float]], tuple[float, float]] | None = None
    stationary_reference: Callable[[State], float] | None = None
    detailed_balance_declared: bool = False
    validate: Callable[[State], None] | None = None
    default_initial: State = None
    section: str = ""

    def check_state(self, x: State) -> None:
        if self.validate is not None:
            self.validate(x)

    def exact_table(self) -> tuple[list, np.ndarray]:
        """Full transition matrix over ``states`` (finite chains only)."""
        if self.states is None or self.kernel_row is None:
            raise ValueError(f"chain {self.name!r} has no finite exact kernel")
        states = list(self.states)
        index = {s: i for i, s in enumerate(states)}
        P = np.zeros((len(states), len(states)))
        for i, s in enumerate(states):
            for t, p in self.kernel_row(s).items():
                P[i, index[t]] += p
        return states, P


# ---------------------------------------------------------------------------
# Functionals


@dataclass(frozen=True)
class Functional:
    name: str
    fn: Callable[[State], float]
    kinds: frozenset

    def __call__(self, x: State) -> float:
        return self.fn(x)


class FunctionalRegistry:
    """Named real-valued state functions, each declared total on some kinds.

    Names of the form ``coord:i`` are resolved on the fly to the i-th
    coordinate of a vector state.
    """

    def __init__(self):
        self._items: dict[str, Functional] = {}

    def register(self, name: str, fn: Callable[[State], float], kinds: Sequence[StateKind]) -> None:
        if name in self._items:
            raise ValueError(f"functional {name!r} already registered")
        self._items[name] = Functional(name, fn, frozenset(kinds))

    def get(self, name: str, kind: StateKind | None = None) -> Functional:
        if name.startswith("coord:"):
            i = int(name.split(":", 1)[1])
            item = Functional(name, lambda x, i=i: float(x[i]), frozenset({StateKind.VECTOR}))
        elif name.startswith("const:"):
            c = float(name.split(":", 1)[1])
            item = Functional(name, lambda x, c=c: c, frozenset(StateKind))
        else:
            try:
                item = self._items[name]
            except KeyError:
                raise KeyError(f"unknown functional {name!r}; known: {sorted(self._items)}") from None
        if kind is not None and kind not in item.kinds:
            raise ValueError(f"functional {name!r} is not defined on {kind.value} states")
        return item

    def names(self) -> list[str]:
        return sorted(self._items)

    def __contains__(self, name: str) -> bool:
        return name in self._items


def _cardinality(x) -> float:
    return float(len(x))


FUNCTIONALS = FunctionalRegistry()
FUNCTIONALS.register("identity", float, [StateKind.LATTICE, StateKind.NONNEGATIVE])
FUNCTIONALS.register("square", lambda x: float(x) * float(x), [StateKind.LATTICE, StateKind.NONNEGATIVE])
FUNCTIONALS.register("indicator-zero", lambda x: 1.0 if x == 0 else 0.0,
                     [StateKind.LATTICE, StateKind.NONNEGATIVE])
FUNCTIONALS.register("abs", lambda x: abs(float(x)), [StateKind.LATTICE, StateKind.NONNEGATIVE])
# finite-enumerable states are bitsets (hard-core) or grid indices
FUNCTIONALS.register("white-count", lambda x: float(int(x).bit_count()), [StateKind.FINITE])
FUNCTIONALS.register("cardinality", _cardinality, [StateKind.POINTS])
FUNCTIONALS.register("first", lambda x: float(x[0]), [StateKind.VECTOR])


def resolve_functional(f: str | Callable[[State], float], kind: StateKind | None = None) -> Callable[[State], float]:
    if isinstance(f, str):
        return FUNCTIONALS.get(f, kind)
    return f


# ---------------------------------------------------------------------------
# Trajectories


@dataclass(frozen=True)
class Trajectory:
    """A seeded realization X_1..X_n of a chain started at ``initial``.

    Either ``states`` is materialized, or only ``values`` of a single
    functional (named ``functional``) were folded in while stepping.
    """

    chain: str
    seed: int
    stream_id: int
    initial: State
    n: int
    states: tuple | None
    values: np.ndarray | None = None
    functional: str | None = None
    final_state: State = None
    wall_time: float = 0.0

    def __len__(self) -> int:
        return self.n


def simulate(chain: ChainModel, initial: State, n: int, seed: int, stream_id: int = 0) -> Trajectory:
    """Iterate the step rule ``n`` times from ``initial``; keep every state."""
    if n < 1:
        raise ValueError("n must be >= 1")
    chain.check_state(initial)
    rng = rng_stream(seed, stream_id)
    step = chain.step
    out = [None] * n
    x = initial
    t0 = time.perf_counter()
    for i in range(n):
        x = step(x, rng)
        out[i] = x
    return Trajectory(chain.name, seed, stream_id, initial, n, tuple(out),
                      final_state=x, wall_time=time.perf_counter() - t0)


def simulate_values(chain: ChainModel, initial: State, n: int, f: str | Callable, seed: int,
                    stream_id: int = 0) -> Trajectory:
    """Streaming variant of :func:`simulate`: only f(X_i) is retained."""
    if n < 1:
        raise ValueError("n must be >= 1")
    chain.check_state(initial)
    fn = resolve_functional(f, chain.state_kind)
    rng = rng_stream(seed, stream_id)
    step = chain.step
    vals = np.empty(n)
    x = initial
    t0 = time.perf_counter()
    for i in range(n):
        x = step(x, rng)
        vals[i] = fn(x)
    name = f if isinstance(f, str) else getattr(f, "__name__", "anonymous")
    return Trajectory(chain.name, seed, stream_id, initial, n, None, vals, name,
                      final_state=x, wall_time=time.perf_counter() - t0)


def trajectory_values(traj: Trajectory, f: str | Callable) -> np.ndarray:
    if traj.states is not None:
        fn = resolve_functional(f)
        return np.fromiter((fn(x) for x in traj.states), dtype=float, count=traj.n)
    if traj.values is None:
        raise ValueError("trajectory holds neither states nor values")
    name = f if isinstance(f, str) else getattr(f, "__name__", "anonymous")
    if name != traj.functional:
        raise ValueError(f"trajectory was folded over {traj.functional!r}, not {name!r}")
    return traj.values


def ergodic_average(traj: Trajectory, f: str | Callable) -> float:
    """n^-1 * sum f(X_i), accumulated with compensated summation."""
    if traj.n == 0:
        raise ValueError("empty trajectory")
    vals = trajectory_values(traj, f)
    if len(vals) == 0:
        raise ValueError("empty trajectory")
    return math.fsum(vals.tolist()) / len(vals)
