"""Hard-core (hard-shell) lattice gas on an n1 x n2 grid.

Configurations are bitsets over grid sites, site ``(i, j)`` being bit
``i * n2 + j``; a set bit means white.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernel import ChainModel, StateKind

MAX_EXACT_SITES = 20


@dataclass(frozen=True)
class Grid:
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("grid dimensions must be positive")

    @property
    def sites(self) -> int:
        return self.n1 * self.n2

    @property
    def row_mask(self) -> int:
        # bits s whose right neighbour s+1 lies in the same row
        m = 0
        for s in range(self.sites):
            if s % self.n2 != self.n2 - 1:
                m |= 1 << s
        return m

    def neighbour_masks(self) -> list[int]:
        out = []
        for s in range(self.sites):
            i, j = divmod(s, self.n2)
            m = 0
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                a, b = i + di, j + dj
                if 0 <= a < self.n1 and 0 <= b < self.n2:
                    m |= 1 << (a * self.n2 + b)
            out.append(m)
        return out

    def is_proper(self, x: int) -> bool:
        if x < 0 or x >> self.sites:
            return False
        return (x & (x >> 1) & self.row_mask) == 0 and (x & (x >> self.n2)) == 0


@dataclass(frozen=True)
class HardCoreConfig:
    """A proper coloring of the grid (no two 4-adjacent white sites)."""

    n1: int
    n2: int
    bits: int

    def __post_init__(self):
        if not Grid(self.n1, self.n2).is_proper(self.bits):
            raise ValueError(f"improper hard-core configuration {self.bits:#b} on {self.n1}x{self.n2}")

    @property
    def white_count(self) -> int:
        return self.bits.bit_count()

    @classmethod
    def from_rows(cls, rows: list[list[int]]) -> HardCoreConfig:
        n1, n2 = len(rows), len(rows[0])
        bits = 0
        for i, row in enumerate(rows):
            if len(row) != n2:
                raise ValueError("ragged grid")
            for j, c in enumerate(row):
                if c:
                    bits |= 1 << (i * n2 + j)
        return cls(n1, n2, bits)

    def rows(self) -> list[list[int]]:
        return [[(self.bits >> (i * self.n2 + j)) & 1 for j in range(self.n2)] for i in range(self.n1)]


def proper_configurations(n1: int, n2: int) -> list[int]:
    """All proper configurations, as sorted bitsets."""
    g = Grid(n1, n2)
    if g.sites > MAX_EXACT_SITES:
        raise ValueError(f"{n1}x{n2} grid has {g.sites} sites; exhaustive enumeration capped at {MAX_EXACT_SITES}")
    x = np.arange(1 << g.sites, dtype=np.int64)
    ok = ((x & (x >> 1) & g.row_mask) == 0) & ((x & (x >> n2)) == 0)
    return [int(v) for v in x[ok]]


@dataclass(frozen=True)
class HardCoreEnumeration:
    n1: int
    n2: int
    activity: float
    configs: tuple[int, ...]
    white_counts: np.ndarray
    probabilities: np.ndarray

    @property
    def count(self) -> int:
        return len(self.configs)

    @property
    def expected_white(self) -> float:
        return float(np.dot(self.white_counts, self.probabilities))

    def csv_rows(self):
        for i, (w, p) in enumerate(zip(self.white_counts, self.probabilities)):
            yield i, int(w), float(p)


def hardcore_enumerate(n1: int, n2: int, activity: float = 1.0) -> HardCoreEnumeration:
    """Exhaustive enumeration of proper configurations weighted by activity^W."""
    if activity <= 0:
        raise ValueError("activity must be positive")
    configs = proper_configurations(n1, n2)
    w = np.array([c.bit_count() for c in configs], dtype=float)
    logw = w * np.log(activity)
    weights = np.exp(logw - logw.max())
    return HardCoreEnumeration(n1, n2, float(activity), tuple(configs), w, weights / weights.sum())


def hardcore_chain(n1: int, n2: int, p: float) -> ChainModel:
    """Single-site heat-bath-style update: pick a site, whiten w.p. p if allowed."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    g = Grid(n1, n2)
    S = g.sites
    nbr = g.neighbour_masks()
    bit = [1 << s for s in range(S)]

    def step(x: int, rng) -> int:
        s = int(rng.uniform() * S)
        u = rng.uniform()
        if u <= p and not (x & nbr[s]):
            return x | bit[s]
        return x & ~bit[s]

    def kernel_row(x: int) -> dict:
        row: dict[int, float] = {}
        for s in range(S):
            if x & nbr[s]:
                row[x] = row.get(x, 0.0) + 1.0 / S
                continue
            on, off = x | bit[s], x & ~bit[s]
            row[on] = row.get(on, 0.0) + p / S
            row[off] = row.get(off, 0.0) + (1.0 - p) / S
        return row

    def validate(x) -> None:
        if not isinstance(x, (int, np.integer)) or not g.is_proper(int(x)):
            raise ValueError(f"initial state {x!r} is not a proper {n1}x{n2} hard-core configuration")

    states = tuple(proper_configurations(n1, n2)) if S <= MAX_EXACT_SITES else None
    return ChainModel(
        name="hardcore",
        state_kind=StateKind.FINITE,
        step=step,
        params={"n1": n1, "n2": n2, "p": p},
        kernel_row=kernel_row if states is not None else None,
        states=states,
        validate=validate,
        default_initial=0,
        section="Example 1 (hard-shell model), sections 1 and 5.1",
    )
