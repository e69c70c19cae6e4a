"""Experiment configuration: one JSON document per experiment.

Unknown keys are rejected at every level. ``parse(serialize(c)) == c``.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, ValidationError, model_validator

from .registry import get_chain

Kind = Literal["simulate", "exact", "drift", "mixing", "clt", "condition-check"]
KINDS: tuple[str, ...] = Kind.__args__


class ConfigError(ValueError):
    """A malformed or inconsistent experiment configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChainSpec(_Strict):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _known(self):
        try:
            get_chain(self.name).resolve(self.params)
        except KeyError as e:
            raise ValueError(str(e.args[0])) from None
        return self


class Range(_Strict):
    """Inclusive arithmetic grid start, start + step, ..., stop."""

    start: float
    stop: float
    step: float = 1.0

    @model_validator(mode="after")
    def _order(self):
        if self.step <= 0 or self.stop < self.start:
            raise ValueError("range needs step > 0 and stop >= start")
        return self

    def values(self) -> list:
        k = int(round((self.stop - self.start) / self.step))
        if all(float(v).is_integer() for v in (self.start, self.step)):
            return [int(self.start) + i * int(self.step) for i in range(k + 1)]
        return [self.start + i * self.step for i in range(k + 1)]


class HierarchicalGrid(_Strict):
    """Product grid over (lambda_theta, lambda_e, theta - ybar) for the random
    effects sampler; mu sits at the grand mean unless given."""

    lambda_theta: list[float]
    lambda_e: list[float]
    theta_shift: list[float]
    mu: float | None = None


class DriftFunctionSpec(_Strict):
    family: Literal["exp-abs", "power", "cardinality-exp", "inverse-sqrt-target",
                    "hierarchical", "hierarchical-residual"]
    params: dict[str, float] = Field(default_factory=dict)


class DriftSection(_Strict):
    V: DriftFunctionSpec
    kind: Literal["geometric", "polynomial"] = "geometric"
    tau: float | None = None
    C: list[Any] | None = None
    C_rule: Literal["explicit", "level-set", "target-d"] = "explicit"
    target_d: float | None = None
    d: float | None = None
    b: float | None = None
    method: Literal["exact", "quadrature", "monte-carlo"] = "exact"
    budget: PositiveInt = 100_000
    grid: Union[Range, HierarchicalGrid, list[Any]]

    @model_validator(mode="after")
    def _consistent(self):
        if self.kind == "polynomial" and self.tau is None:
            raise ValueError("polynomial drift needs tau")
        if self.C_rule == "explicit" and self.C is None:
            raise ValueError("C_rule 'explicit' needs C")
        if self.C_rule == "target-d" and self.target_d is None:
            raise ValueError("C_rule 'target-d' needs target_d")
        return self


class SimulateSection(_Strict):
    n: PositiveInt
    functional: str
    initial: Any = None
    batches: PositiveInt | None = None
    window: NonNegativeInt = 50
    mean_oracle: float | Literal["exact"] | None = None
    sigma2_oracle: float | Literal["exact"] | None = None
    sigma2_rel_tol: float | None = None
    se_multiple: float = 3.0
    truncation: PositiveInt | None = None


class ExactSection(_Strict):
    truncation: PositiveInt | None = None
    functional: str | None = None
    max_lag: PositiveInt = 200
    x0: Any = None
    tv_lags: PositiveInt = 50
    n0: PositiveInt | None = None
    rho_lags: PositiveInt = 10
    reference_tol: float | None = None
    variance_tol: float | None = None
    rho_power_tol: float | None = None
    expect_detailed_balance: bool | None = None
    enumerate_activity: float | None = None


class MixingSection(_Strict):
    n_max: PositiveInt = 10
    truncation: PositiveInt | None = None
    C: list[Any] | None = None
    n0: PositiveInt | None = None
    slack_tol: float = 1e-10


class CltSection(_Strict):
    n: PositiveInt
    R: PositiveInt
    functional: str
    initial: Any = None
    mu: float | Literal["exact"] = "exact"
    sigma2: float | Literal["exact"] = "exact"
    truncation: PositiveInt | None = None
    window: NonNegativeInt | None = None
    allow_reseed: bool = True


class DriftInfoSection(_Strict):
    kind: Literal["geometric", "polynomial"]
    f_squared_le_V: bool = False
    tau: float | None = None
    eta: float | None = None
    f_bounded_by_V_power: bool = False
    E_pi_V_2eta_finite: bool = False


class ConditionSection(_Strict):
    ergodicity: Literal["harris", "polynomial", "geometric", "uniform"]
    order_m: float | None = None
    E_pi_M_finite: bool = False
    detailed_balance: bool = False
    f_moments: Literal["none", "2", "2log", "2+delta", "bounded"] = "none"
    delta: float | None = None
    drift_info: DriftInfoSection | None = None
    expect: Literal["CLT holds", "not established"] | None = None


class ExperimentConfig(_Strict):
    kind: Kind
    chain: ChainSpec | None = None
    seed: NonNegativeInt = 0
    out: str | None = None
    threads: PositiveInt = 1
    simulate: SimulateSection | None = None
    exact: ExactSection | None = None
    drift: DriftSection | None = None
    mixing: MixingSection | None = None
    clt: CltSection | None = None
    condition: ConditionSection | None = None

    @model_validator(mode="after")
    def _sections(self):
        section = "condition" if self.kind == "condition-check" else self.kind
        if getattr(self, section) is None:
            raise ValueError(f"experiment kind {self.kind!r} needs a {section!r} section")
        others = [k for k in ("simulate", "exact", "drift", "mixing", "clt", "condition")
                  if k != section and getattr(self, k) is not None]
        if others:
            raise ValueError(f"sections {others} do not belong to a {self.kind!r} experiment")
        if self.kind != "condition-check" and self.chain is None:
            raise ValueError(f"experiment kind {self.kind!r} needs a chain")
        return self

    @property
    def section(self):
        return self.condition if self.kind == "condition-check" else getattr(self, self.kind)


def _describe(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(text: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(_describe(e)) from None


def serialize_config(cfg: ExperimentConfig) -> str:
    return cfg.model_dump_json(indent=2, exclude_none=True)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"{p}: {e.strerror}") from None
    try:
        json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: line {e.lineno} column {e.colno}: {e.msg}") from None
    try:
        return parse_config(text)
    except ConfigError as e:
        raise ConfigError(f"{p}: {e}") from None


def config_schema() -> dict:
    return ExperimentConfig.model_json_schema()
