"""Decision procedure for sufficient CLT conditions.

The six mixing-based conditions are tried in order, then the two drift
routes. Inputs are declarations about the chain and f; nothing here checks
them. An unmatched input yields "not established", never "no CLT".

Declared classes are closed under two implications only:
uniform ergodicity implies geometric ergodicity, and the moment levels nest
as bounded => 2+delta (any delta) => 2 log => 2.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum


class Ergodicity(str, Enum):
    HARRIS = "harris"
    POLYNOMIAL = "polynomial"
    GEOMETRIC = "geometric"
    UNIFORM = "uniform"


class Moment(str, Enum):
    NONE = "none"
    TWO = "2"
    TWO_LOG = "2log"
    TWO_PLUS_DELTA = "2+delta"
    BOUNDED = "bounded"


_MOMENT_RANK = {Moment.NONE: 0, Moment.TWO: 1, Moment.TWO_LOG: 2, Moment.TWO_PLUS_DELTA: 3, Moment.BOUNDED: 4}

HOLDS = "CLT holds"
NOT_ESTABLISHED = "not established"


@dataclass(frozen=True)
class DriftInfo:
    """Declared drift facts for the drift-based routes.

    geometric: ``f_squared_le_V`` means f^2 <= V everywhere.
    polynomial: ``f_bounded_by_V_power`` means |f| <= V^(tau + eta - 1), and
    ``E_pi_V_2eta_finite`` means E_pi V^(2 eta) < inf. ``eta`` defaults to 1 - tau.
    """

    kind: str
    f_squared_le_V: bool = False
    tau: float | None = None
    eta: float | None = None
    f_bounded_by_V_power: bool = False
    E_pi_V_2eta_finite: bool = False

    def __post_init__(self):
        if self.kind not in ("geometric", "polynomial"):
            raise ValueError("drift kind must be 'geometric' or 'polynomial'")
        if self.kind == "polynomial":
            if self.tau is None or not 0.0 <= self.tau < 1.0:
                raise ValueError("polynomial drift needs 0 <= tau < 1")
            if self.eta is None:
                object.__setattr__(self, "eta", 1.0 - self.tau)


@dataclass(frozen=True)
class CltVerdict:
    condition: str | None
    conclusion: str
    inputs: dict
    reason: str

    @property
    def holds(self) -> bool:
        return self.conclusion == HOLDS

    def to_dict(self) -> dict:
        return asdict(self)


def _moment_at_least(level: Moment, need: Moment) -> bool:
    return _MOMENT_RANK[level] >= _MOMENT_RANK[need]


def clt_condition_check(ergodicity: Ergodicity | str, order_m: float | None = None,
                        E_pi_M_finite: bool = False, detailed_balance: bool = False,
                        f_moments: Moment | str = Moment.NONE, delta: float | None = None,
                        drift_info: DriftInfo | None = None) -> CltVerdict:
    """First matching sufficient condition, or "not established".

    Conditions, in order:
      1  polynomial of order m > 1, E_pi M < inf, f bounded
      2  polynomial of order m, E_pi M < inf, E|f|^(2+delta) < inf, m delta > 2 + delta
      3  geometric, E|f|^(2+delta) < inf
      4  geometric, E[f^2 log+ |f|] < inf
      5  geometric, detailed balance, E f^2 < inf
      6  uniform, E f^2 < inf
      T1.1  geometric drift with f^2 <= V
      T1.2  polynomial drift with |f| <= V^(tau+eta-1), 1-tau <= eta <= 1, E_pi V^(2 eta) < inf
    """
    erg = Ergodicity(ergodicity)
    mom = Moment(f_moments)
    if mom == Moment.TWO_PLUS_DELTA and (delta is None or delta <= 0):
        raise ValueError("moment level 2+delta needs delta > 0")
    inputs = {
        "ergodicity": erg.value, "order_m": order_m, "E_pi_M_finite": E_pi_M_finite,
        "detailed_balance": detailed_balance, "f_moments": mom.value, "delta": delta,
        "drift_info": asdict(drift_info) if drift_info else None,
    }
    geometric = erg in (Ergodicity.GEOMETRIC, Ergodicity.UNIFORM)
    polynomial = erg == Ergodicity.POLYNOMIAL and order_m is not None

    def verdict(cond: str, reason: str) -> CltVerdict:
        return CltVerdict(cond, HOLDS, inputs, reason)

    if polynomial and order_m > 1 and E_pi_M_finite and mom == Moment.BOUNDED:
        return verdict("1", "polynomially ergodic of order m > 1, E_pi M finite, f bounded")
    if polynomial and E_pi_M_finite and mom == Moment.TWO_PLUS_DELTA and order_m * delta > 2 + delta:
        return verdict("2", f"polynomial order {order_m}, E_pi M finite, m*delta = {order_m * delta} > 2 + delta")
    if geometric and _moment_at_least(mom, Moment.TWO_PLUS_DELTA):
        return verdict("3", "geometrically ergodic with a 2+delta moment")
    if geometric and _moment_at_least(mom, Moment.TWO_LOG):
        return verdict("4", "geometrically ergodic with E[f^2 log+|f|] finite")
    if geometric and detailed_balance and _moment_at_least(mom, Moment.TWO):
        return verdict("5", "geometrically ergodic, reversible, finite second moment")
    if erg == Ergodicity.UNIFORM and _moment_at_least(mom, Moment.TWO):
        return verdict("6", "uniformly ergodic with finite second moment")

    if drift_info is not None:
        if drift_info.kind == "geometric" and drift_info.f_squared_le_V:
            return verdict("T1.1", "geometric drift holds and f^2 <= V")
        if drift_info.kind == "polynomial":
            tau, eta = drift_info.tau, drift_info.eta
            if (1.0 - tau <= eta <= 1.0 and drift_info.f_bounded_by_V_power
                    and drift_info.E_pi_V_2eta_finite):
                return verdict("T1.2", f"polynomial drift, |f| <= V^(tau+eta-1) with tau={tau}, eta={eta}")

    return CltVerdict(None, NOT_ESTABLISHED, inputs, "no sufficient condition matched the declared inputs")
