"""Asymptotic-variance estimation and replicate tests of the Markov chain CLT."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .kernel import ChainModel, ergodic_average, resolve_functional, simulate_values

KS_LEVEL = 0.01
COVERAGE_BAND = (0.93, 0.97)
MIN_REPLICATES = 100
DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class BatchMeans:
    sigma2: float
    mean: float
    ci: tuple[float, float]
    batches: int
    length: int
    n_used: int

    @property
    def se(self) -> float:
        """Standard error of the mean implied by the variance estimate."""
        return math.sqrt(self.sigma2 / self.n_used)


def default_batch_count(n: int) -> int:
    """min(100, floor(sqrt(n)/10)*10)."""
    return min(100, int(math.isqrt(n) // 10) * 10)


def batch_means(values: Sequence[float], B: int | None = None) -> BatchMeans:
    """Non-overlapping batch means estimate of sigma^2 and a t-interval for the mean.

    With batch length ``l = n // B``, the estimate is
    ``l/(B-1) * sum_b (ybar_b - ybar)^2``. Trailing ``n mod B`` values are dropped.

    Parameters
    ----------
    values : sequence of float
        f(X_1), ..., f(X_n).
    B : int, optional
        Batch count; defaults to :func:`default_batch_count`.
    """
    y = np.asarray(values, dtype=float)
    n = y.size
    if B is None:
        B = default_batch_count(n)
    if B < 10:
        raise ValueError(f"need at least 10 batches, got B={B} (n={n})")
    length = n // B
    if length < 10:
        raise ValueError(f"batches of length {length} are too short; need >= 10 (n={n}, B={B})")
    used = y[: B * length]
    ybar_b = used.reshape(B, length).mean(axis=1)
    ybar = float(ybar_b.mean())
    sigma2 = float(length * np.sum((ybar_b - ybar) ** 2) / (B - 1))
    half = float(stats.t.ppf(0.975, B - 1)) * math.sqrt(sigma2 / used.size)
    return BatchMeans(sigma2, ybar, (ybar - half, ybar + half), B, length, used.size)


@dataclass(frozen=True)
class LagWindow:
    sigma2: float
    window: int
    negative: bool


def sample_autocovariances(values: Sequence[float], max_lag: int) -> np.ndarray:
    """gamma_hat(k) for k = 0..max_lag with divisor n."""
    y = np.asarray(values, dtype=float)
    n = y.size
    c = y - y.mean()
    return np.array([float(np.dot(c[: n - k], c[k:])) / n for k in range(max_lag + 1)])


def lag_window_variance(values: Sequence[float], window: int) -> LagWindow:
    """Sample variance plus twice the sample autocovariances at lags 1..window.

    A negative result is returned as is with ``negative=True``.
    """
    n = len(values)
    if window < 0:
        raise ValueError("window must be non-negative")
    if window >= n / 10:
        raise ValueError(f"window {window} must be below n/10 = {n / 10}")
    g = sample_autocovariances(values, window)
    s = float(g[0] + 2.0 * math.fsum(g[1:].tolist()))
    return LagWindow(s, window, s < 0)


# ---------------------------------------------------------------------------
# Replicate test


@dataclass
class CltReport:
    chain: str
    functional: str
    n: int
    replicates: int
    seed: int
    mean_oracle: float
    sigma2_oracle: float
    estimate: float
    sigma2_bm: float | None = None
    batches: int | None = None
    sigma2_lw: float | None = None
    window: int | None = None
    lw_negative: bool = False
    sigma2_exact: float | None = None
    z_scores: list[float] = field(default_factory=list)
    ks_statistic: float | None = None
    ks_pvalue: float | None = None
    coverage: float | None = None
    reseeded: bool = False
    status: str = "tested"

    @property
    def ks_pass(self) -> bool:
        return self.ks_pvalue is not None and self.ks_pvalue > KS_LEVEL

    @property
    def coverage_pass(self) -> bool:
        return self.coverage is not None and COVERAGE_BAND[0] <= self.coverage <= COVERAGE_BAND[1]

    @property
    def passed(self) -> bool:
        return self.status == "tested" and self.ks_pass and self.coverage_pass

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("z_scores")
        d.update(ks_pass=self.ks_pass, coverage_pass=self.coverage_pass, passed=self.passed)
        return d

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def z_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "z"])
        for r, z in enumerate(self.z_scores):
            w.writerow([r, format(z, ".17g")])
        return buf.getvalue()


def _replicate_means(chain, initial, n, f, seed, R, threads) -> list[float]:
    def one(r: int) -> float:
        return ergodic_average(simulate_values(chain, initial, n, f, seed, stream_id=r), f)

    if threads <= 1:
        return [one(r) for r in range(R)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        # map preserves stream order, so results do not depend on thread count
        return list(ex.map(one, range(R)))


def _z_test(means: list[float], n: int, mu: float, sigma: float) -> tuple[list[float], float, float, float]:
    z = [math.sqrt(n) * (m - mu) / sigma for m in means]
    ks = stats.kstest(z, "norm")
    crit = float(stats.norm.ppf(0.975))
    coverage = sum(1 for v in z if abs(v) <= crit) / len(z)
    return z, float(ks.statistic), float(ks.pvalue), coverage


def replicate_clt_test(chain: ChainModel, f: str | Callable, n: int, R: int, sigma2: float, mu: float,
                       seed: int, initial=None, sigma2_exact: float | None = None, window: int | None = None,
                       threads: int = 1, allow_reseed: bool = True) -> CltReport:
    """Test sqrt(n)(fbar_n - mu)/sigma ~ N(0, 1) across R independent replicates.

    Replicate r runs on stream r of ``seed`` from the fixed ``initial`` state
    with no burn-in. If the KS test rejects at level 0.01 the whole experiment
    is rerun once with ``seed + 1`` and ``reseeded`` is set; the second
    outcome is final.
    """
    if R < MIN_REPLICATES:
        raise ValueError(f"need R >= {MIN_REPLICATES} replicates, got {R}")
    if n < 1:
        raise ValueError("n must be >= 1")
    initial = chain.default_initial if initial is None else initial
    fname = f if isinstance(f, str) else getattr(f, "__name__", "anonymous")
    report = CltReport(chain.name, fname, n, R, seed, mu, sigma2, float("nan"), sigma2_exact=sigma2_exact)

    if sigma2 <= DEGENERATE_TOL:
        probe = simulate_values(chain, initial, min(n, 1000), f, seed).values
        if np.ptp(probe) > 0:
            raise ValueError("sigma^2 is zero but f is not constant along the chain; choose a different f")
        report.status = "degenerate, not tested"
        report.estimate = float(probe[0])
        return report

    sigma = math.sqrt(sigma2)
    used_seed = seed
    means = _replicate_means(chain, initial, n, f, used_seed, R, threads)
    z, ks_stat, ks_p, cov = _z_test(means, n, mu, sigma)
    if ks_p <= KS_LEVEL and allow_reseed:
        used_seed = seed + 1
        means = _replicate_means(chain, initial, n, f, used_seed, R, threads)
        z, ks_stat, ks_p, cov = _z_test(means, n, mu, sigma)
        report.reseeded = True

    report.seed = used_seed
    report.estimate = math.fsum(means) / R
    report.z_scores = z
    report.ks_statistic, report.ks_pvalue, report.coverage = ks_stat, ks_p, cov

    # variance estimators on the first replicate, for comparison with the oracle
    vals = simulate_values(chain, initial, n, f, used_seed, stream_id=0).values
    if default_batch_count(n) >= 10 and n // default_batch_count(n) >= 10:
        bm = batch_means(vals)
        report.sigma2_bm, report.batches = bm.sigma2, bm.batches
    w = window if window is not None else min(50, max(0, n // 10 - 1))
    lw = lag_window_variance(vals, w)
    report.sigma2_lw, report.window, report.lw_negative = lw.sigma2, lw.window, lw.negative
    return report


def variance_consistency(chain: ChainModel, f: str | Callable, n_grid: Sequence[int], seed: int,
                         sigma2_exact: float, initial=None, B: int | None = None) -> list[dict]:
    """Batch-means estimates of sigma^2 along ``n_grid`` with relative error to the oracle.

    Each n uses its own stream (index in the grid) of ``seed``.
    """
    initial = chain.default_initial if initial is None else initial
    resolve_functional(f, chain.state_kind)
    rows = []
    for i, n in enumerate(n_grid):
        vals = simulate_values(chain, initial, int(n), f, seed, stream_id=i).values
        bm = batch_means(vals, B)
        if sigma2_exact == 0:
            rel = 0.0 if bm.sigma2 == 0 else math.inf
        else:
            rel = abs(bm.sigma2 - sigma2_exact) / sigma2_exact
        rows.append({"n": int(n), "batches": bm.batches, "sigma2_bm": bm.sigma2,
                     "sigma2_exact": sigma2_exact, "relative_error": rel})
    return rows
