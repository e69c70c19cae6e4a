"""Config-driven experiments writing CSV/JSON artifacts and a manifest."""
from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .chains import hardcore_enumerate, signed_geometric_pi
from .cltstats import batch_means, lag_window_variance, replicate_clt_test
from .conditions import DriftInfo, clt_condition_check
from .config import ConfigError, ExperimentConfig, HierarchicalGrid, Range
from .drift import (DriftSpec, cardinality_exp, check_geometric_drift, check_polynomial_drift, evaluate_grid,
                    exp_abs, fit_level_set, fit_small_set, hierarchical_drift, hierarchical_drift_residual,
                    inverse_sqrt_target, power, signed_geometric_feasibility)
from .exact import (asymptotic_variance_exact, describe, detailed_balance_check, lag_series_variance,
                    minorization_search, mixing_curve, rho_mixing, smallest_minorizing_lag, stationary_mean,
                    tv_decay, tv_matrix)
from .kernel import ergodic_average, resolve_functional, simulate_values
from .registry import get_chain, hierarchical_spec, target_density

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED = 2
MANIFEST = "manifest.json"


# ---------------------------------------------------------------------------
# Formatting


def fmt(v: Any) -> str:
    """Locale-independent cell text; floats carry 17 significant digits."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (tuple, list)):
        return "(" + " ".join(fmt(x) for x in v) + ")"
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    return v


def write_json(path: Path, obj: Any) -> None:
    path.write_bytes((json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n").encode("utf-8"))


def as_state(v: Any) -> Any:
    """JSON lists become tuples so they match chain states."""
    if isinstance(v, list):
        return tuple(as_state(x) for x in v)
    return v


# ---------------------------------------------------------------------------
# Result


@dataclass
class ExperimentResult:
    exit_code: int
    summary: dict
    primary: list[str] = field(default_factory=list)
    secondary: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_OK


def _versions() -> dict:
    import pydantic
    import scipy
    return {"mcclt": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pydantic": pydantic.__version__}


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None, threads: int | None = None) -> ExperimentResult:
    """Execute one experiment, write its artifacts and manifest under ``out_dir``."""
    out = Path(out_dir if out_dir is not None else (cfg.out or f"runs/{cfg.kind}"))
    out.mkdir(parents=True, exist_ok=True)
    threads = threads if threads is not None else cfg.threads
    t0 = time.perf_counter()
    try:
        result = _RUNNERS[cfg.kind](cfg, out, threads)
    except (KeyError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{cfg.kind}: {e.args[0] if e.args else e}") from e
    wall = time.perf_counter() - t0
    write_json(out / "summary.json", result.summary)
    manifest = {
        "config": cfg.model_dump(mode="json", exclude_none=True),
        "seed": cfg.seed,
        "threads": threads,
        "versions": _versions(),
        "wall_time_seconds": wall,
        "primary_outputs": result.primary,
        "secondary_outputs": result.secondary + ["summary.json"],
        "exit_code": result.exit_code,
    }
    write_json(out / MANIFEST, manifest)
    return result


# ---------------------------------------------------------------------------
# simulate


def _finite_oracle(cfg: ExperimentConfig, functional: str, truncation: int | None):
    entry = get_chain(cfg.chain.name)
    a = entry.finite(cfg.chain.params, truncation)
    f = resolve_functional(functional, entry.build(cfg.chain.params).state_kind)
    return a, stationary_mean(a, f), asymptotic_variance_exact(a, f)


def _run_simulate(cfg: ExperimentConfig, out: Path, threads: int) -> ExperimentResult:
    s = cfg.simulate
    chain = get_chain(cfg.chain.name).build(cfg.chain.params)
    x0 = chain.default_initial if s.initial is None else as_state(s.initial)
    traj = simulate_values(chain, x0, s.n, s.functional, cfg.seed)
    vals = traj.values
    mean = ergodic_average(traj, s.functional)
    bm = batch_means(vals, s.batches)
    lw = lag_window_variance(vals, s.window)
    summary: dict[str, Any] = {
        "chain": chain.name, "functional": s.functional, "n": s.n, "initial": x0, "mean": mean,
        "sigma2_bm": bm.sigma2, "batches": bm.batches, "batch_length": bm.length,
        "standard_error": bm.se, "ci95": list(bm.ci),
        "sigma2_lw": lw.sigma2, "window": lw.window, "lw_negative": lw.negative,
    }
    checks = {}
    mu_o, s2_o = s.mean_oracle, s.sigma2_oracle
    if "exact" in (mu_o, s2_o):
        _, mu_e, s2_e = _finite_oracle(cfg, s.functional, s.truncation)
        mu_o = mu_e if mu_o == "exact" else mu_o
        s2_o = s2_e if s2_o == "exact" else s2_o
    if mu_o is not None:
        dev = abs(mean - mu_o)
        summary.update(mean_oracle=mu_o, mean_deviation_in_se=dev / bm.se if bm.se > 0 else math.inf)
        checks["mean_within_se_band"] = dev <= s.se_multiple * bm.se
    if s2_o is not None:
        rel = abs(bm.sigma2 - s2_o) / s2_o if s2_o > 0 else (0.0 if bm.sigma2 == 0 else math.inf)
        summary.update(sigma2_oracle=s2_o, sigma2_bm_relative_error=rel)
        if s.sigma2_rel_tol is not None:
            checks["sigma2_within_tolerance"] = rel <= s.sigma2_rel_tol
    summary["checks"] = checks
    summary["passed"] = all(checks.values())
    ybar = vals[: bm.batches * bm.length].reshape(bm.batches, bm.length).mean(axis=1)
    write_csv(out / "batches.csv", ["batch", "mean"], enumerate(ybar.tolist()))
    return ExperimentResult(EXIT_OK if summary["passed"] else EXIT_FAILED, summary, ["batches.csv"])


# ---------------------------------------------------------------------------
# exact


def _reference(cfg: ExperimentConfig, a) -> tuple[np.ndarray, np.ndarray] | None:
    """Closed-form stationary law on the states it pins down exactly."""
    name, params = cfg.chain.name, get_chain(cfg.chain.name).resolve(cfg.chain.params)
    if name == "hardcore":
        p = params["p"]
        en = hardcore_enumerate(params["n1"], params["n2"], p / (1 - p))
        ref = dict(zip(en.configs, en.probabilities.tolist()))
        return np.array([ref[s] for s in a.states]), np.ones(a.size, dtype=bool)
    if name == "signed-geometric":
        L = a.truncation["cutoff"]
        ref = np.array([signed_geometric_pi(params["theta"], s) for s in a.states])
        # the cutoff states absorb the truncated tail
        return ref, np.array([abs(s) < L for s in a.states])
    return None


def _run_exact(cfg: ExperimentConfig, out: Path, threads: int) -> ExperimentResult:
    s = cfg.exact
    entry = get_chain(cfg.chain.name)
    chain = entry.build(cfg.chain.params)
    a = entry.finite(cfg.chain.params, s.truncation)
    summary: dict[str, Any] = describe(a)
    checks: dict[str, bool] = {}
    primary = ["stationary.csv", "tv.csv"]

    ref = _reference(cfg, a)
    if ref is not None:
        r, mask = ref
        err = np.abs(a.pi - r)
        summary["reference_max_abs_error"] = float(err[mask].max())
        if s.reference_tol is not None:
            checks["stationary_matches_reference"] = bool(err[mask].max() <= s.reference_tol)
        write_csv(out / "stationary.csv", ["state", "pi", "reference", "abs_error", "compared"],
                  zip(a.states, a.pi.tolist(), r.tolist(), err.tolist(), mask.tolist()))
    else:
        write_csv(out / "stationary.csv", ["state", "pi"], zip(a.states, a.pi.tolist()))

    if cfg.chain.name == "hardcore":
        p = entry.resolve(cfg.chain.params)
        act = s.enumerate_activity if s.enumerate_activity is not None else 1.0
        en = hardcore_enumerate(p["n1"], p["n2"], act)
        summary["enumeration"] = {"activity": act, "count": en.count, "expected_white": en.expected_white}
        write_csv(out / "enumeration.csv", ["config_id", "white_count", "probability"], en.csv_rows())
        primary.append("enumeration.csv")

    if s.functional is not None:
        f = resolve_functional(s.functional, chain.state_kind)
        s2 = asymptotic_variance_exact(a, f)
        s2_lag = lag_series_variance(a, f, s.max_lag)
        summary.update(functional=s.functional, mean=stationary_mean(a, f), sigma2_fundamental=s2,
                       sigma2_lag_series=s2_lag, max_lag=s.max_lag, sigma2_difference=abs(s2 - s2_lag))
        if s.variance_tol is not None:
            checks["variance_methods_agree"] = abs(s2 - s2_lag) <= s.variance_tol

    x0 = as_state(s.x0) if s.x0 is not None else chain.default_initial
    if x0 not in a.states:
        x0 = a.states[0]
    decay = tv_decay(a, x0, s.tv_lags)
    tv = tv_matrix(a, s.tv_lags)
    mino = smallest_minorizing_lag(a) if s.n0 is None else minorization_search(a, None, s.n0)
    bound = np.array([mino.tv_bound(n) for n in range(1, s.tv_lags + 1)])
    worst = tv.max(axis=1)
    summary.update(tv_from=x0, tv_fitted_rate=decay.rate, minorization_epsilon=mino.epsilon,
                   minorization_n0=mino.n0, minorization_epsilon_lag1=minorization_search(a, None, 1).epsilon,
                   tv_bound_margin=float((bound - worst).min()))
    checks["tv_within_minorization_bound"] = bool(np.all(worst <= bound + 1e-12))
    write_csv(out / "tv.csv", ["lag", "tv_from_x0", "tv_worst", "bound_minorization"],
              zip(range(1, s.tv_lags + 1), decay.values.tolist(), worst.tolist(), bound.tolist()))

    db, _ = detailed_balance_check(a)
    if s.expect_detailed_balance is not None:
        checks["detailed_balance_as_expected"] = db == s.expect_detailed_balance
    if db and s.rho_power_tol is not None:
        rho1 = rho_mixing(a, 1)
        dev = max(abs(rho_mixing(a, n) - rho1 ** n) for n in range(1, s.rho_lags + 1))
        summary.update(rho1=rho1, rho_power_max_deviation=dev)
        checks["rho_is_power_of_rho1"] = dev <= s.rho_power_tol

    summary["checks"] = checks
    summary["passed"] = all(checks.values())
    return ExperimentResult(EXIT_OK if summary["passed"] else EXIT_FAILED, summary, primary)


# ---------------------------------------------------------------------------
# drift


def _drift_function(cfg: ExperimentConfig):
    V = cfg.drift.V
    p = dict(V.params)
    if V.family == "exp-abs":
        return exp_abs(p["a"])
    if V.family == "power":
        return power(p["m"])
    if V.family == "cardinality-exp":
        return cardinality_exp(p["A"])
    if V.family == "inverse-sqrt-target":
        target = target_density(cfg.chain.name, cfg.chain.params)
        c = p.get("c")
        if c is None:
            x0 = get_chain(cfg.chain.name).build(cfg.chain.params).default_initial
            c = math.sqrt(target(x0))
        return inverse_sqrt_target(target, c)
    spec = hierarchical_spec(cfg.chain.params)
    if V.family == "hierarchical":
        return hierarchical_drift(spec, p["c1"])
    return hierarchical_drift_residual(spec, p["c1"], p["vartheta"])


def _drift_grid(cfg: ExperimentConfig) -> list:
    g = cfg.drift.grid
    if isinstance(g, Range):
        vals = g.values()
        if cfg.chain.name in ("rw-mhg", "independence-sampler"):
            return [(v,) for v in vals]
        return vals
    if isinstance(g, HierarchicalGrid):
        spec = hierarchical_spec(cfg.chain.params)
        mu = spec.grand_mean if g.mu is None else g.mu
        return [(mu, *(spec.ybar + s).tolist(), lt, le)
                for lt in g.lambda_theta for le in g.lambda_e for s in g.theta_shift]
    return [as_state(x) for x in g]


def _run_drift(cfg: ExperimentConfig, out: Path, threads: int) -> ExperimentResult:
    s = cfg.drift
    chain = get_chain(cfg.chain.name).build(cfg.chain.params)
    V = _drift_function(cfg)
    grid = _drift_grid(cfg)
    kappa = 1.0 if s.kind == "geometric" else s.tau
    values = evaluate_grid(chain, V, grid, s.method, s.budget, cfg.seed, threads)
    extra: dict[str, Any] = {}
    if s.C_rule == "explicit":
        C = [as_state(c) for c in s.C]
    elif s.C_rule == "level-set":
        v_star, C = fit_level_set(values, kappa)
        extra["level_set_V"] = v_star
    else:
        C = fit_small_set(chain, V, grid, s.target_d, kappa, values=values)
    spec = DriftSpec(V, s.kind, s.tau if s.tau is not None else 1.0, C, s.d, s.b)
    check = check_geometric_drift if s.kind == "geometric" else check_polynomial_drift
    report = check(chain, spec, grid, s.method, s.budget, cfg.seed, values=values)
    summary = {"chain": chain.name, "V": {"family": V.name, **V.params}, "C_rule": s.C_rule,
               **report.summary(), **extra}
    if chain.name == "signed-geometric" and V.name == "exp-abs":
        summary["family_feasibility"] = signed_geometric_feasibility(chain.params["theta"], V.params["a"])
    summary["passed"] = report.certified
    write_csv(out / "drift.csv", ["state", "V", "PV", "deltaV", "bound_rhs", "slack", "in_C"], report.rows())
    return ExperimentResult(EXIT_OK if report.certified else EXIT_FAILED, summary, ["drift.csv"])


# ---------------------------------------------------------------------------
# mixing


def _run_mixing(cfg: ExperimentConfig, out: Path, threads: int) -> ExperimentResult:
    s = cfg.mixing
    a = get_chain(cfg.chain.name).finite(cfg.chain.params, s.truncation)
    C = [as_state(c) for c in s.C] if s.C is not None else None
    curve = mixing_curve(a, s.n_max, C, s.n0)
    slacks = {k: float(v.min()) for k, v in curve.inequality_slacks().items()}
    mono = curve.monotone()
    ok = all(v >= -s.slack_tol for v in slacks.values()) and all(mono.values())
    summary = {"chain": a.name, "states": a.size, "n_max": s.n_max, "min_slack": slacks, "monotone": mono,
               "fitted_rates": curve.rate, "minorization_epsilon": curve.minorization.epsilon,
               "minorization_n0": curve.minorization.n0, "slack_tol": s.slack_tol, "passed": ok}
    write_csv(out / "mixing.csv", ["lag", "alpha", "rho", "phi", "tv_worst", "bound_minorization"], curve.rows())
    return ExperimentResult(EXIT_OK if ok else EXIT_FAILED, summary, ["mixing.csv"])


# ---------------------------------------------------------------------------
# clt


def _run_clt(cfg: ExperimentConfig, out: Path, threads: int) -> ExperimentResult:
    s = cfg.clt
    chain = get_chain(cfg.chain.name).build(cfg.chain.params)
    mu, s2 = s.mu, s.sigma2
    s2_exact = None
    if "exact" in (mu, s2):
        _, mu_e, s2_exact = _finite_oracle(cfg, s.functional, s.truncation)
        mu = mu_e if mu == "exact" else mu
        s2 = s2_exact if s2 == "exact" else s2
    x0 = chain.default_initial if s.initial is None else as_state(s.initial)
    report = replicate_clt_test(chain, s.functional, s.n, s.R, s2, mu, cfg.seed, x0, s2_exact, s.window,
                                threads, s.allow_reseed)
    (out / "zscores.csv").write_bytes(report.z_csv().encode("utf-8"))
    summary = report.summary()
    degenerate = report.status != "tested"
    code = EXIT_OK if (report.passed or degenerate) else EXIT_FAILED
    return ExperimentResult(code, summary, ["zscores.csv"])


# ---------------------------------------------------------------------------
# condition-check


def _run_condition(cfg: ExperimentConfig, out: Path, threads: int) -> ExperimentResult:
    s = cfg.condition
    di = DriftInfo(**s.drift_info.model_dump()) if s.drift_info is not None else None
    v = clt_condition_check(s.ergodicity, s.order_m, s.E_pi_M_finite, s.detailed_balance, s.f_moments,
                            s.delta, di)
    summary = v.to_dict()
    ok = s.expect is None or v.conclusion == s.expect
    summary["expected"] = s.expect
    summary["passed"] = ok
    write_csv(out / "verdict.csv", ["condition", "conclusion"], [(v.condition or "", v.conclusion)])
    return ExperimentResult(EXIT_OK if ok else EXIT_FAILED, summary, ["verdict.csv"])


_RUNNERS = {
    "simulate": _run_simulate,
    "exact": _run_exact,
    "drift": _run_drift,
    "mixing": _run_mixing,
    "clt": _run_clt,
    "condition-check": _run_condition,
}


# ---------------------------------------------------------------------------
# reproduce


def reproduce(manifest_path: str | Path, scratch: str | Path) -> tuple[int, dict]:
    """Re-run the experiment recorded in a manifest and byte-compare its
    primary CSV outputs with the recorded ones."""
    from .config import ExperimentConfig as _EC, _describe
    from pydantic import ValidationError

    mp = Path(manifest_path)
    if not mp.is_file():
        raise ConfigError(f"manifest {mp} not found")
    try:
        manifest = json.loads(mp.read_text())
        cfg_dict = dict(manifest["config"])
        cfg_dict["seed"] = manifest.get("seed", cfg_dict.get("seed", 0))
        cfg = _EC.model_validate(cfg_dict)
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ConfigError(f"manifest {mp} is malformed: {e}") from None
    except ValidationError as e:
        raise ConfigError(f"manifest {mp}: {_describe(e)}") from None
    res = run(cfg, scratch, manifest.get("threads", 1))
    diffs = {}
    for name in manifest.get("primary_outputs", []):
        old, new = mp.parent / name, Path(scratch) / name
        same = old.is_file() and new.is_file() and old.read_bytes() == new.read_bytes()
        diffs[name] = "identical" if same else "differs"
    identical = bool(diffs) and all(v == "identical" for v in diffs.values())
    return (EXIT_OK if identical else EXIT_FAILED), {"outputs": diffs, "rerun_exit_code": res.exit_code}
