"""Building n x n clusters from linear chains by weaving.

n cross-chains of length m = a n are fused onto a long thread at n sites
each. A failed attempt costs a bounded number of edges without splitting
a chain, so weaving one cross-chain succeeds exactly when n successes
arrive within the m-attempt budget; the per-gate model counts two lost
edges per involved chain per failure, and all lengths here are in those
double-edge units. The whole carpet succeeds when all n cross-chains do.

For a > 1/ps the per-chain probability tends to one fast enough that the
overall success probability does too, giving quadratic total resource
use; for a < 1/ps it collapses to zero instead, with the threshold at
ps = 1/a.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import binom

from .montecarlo import wilson_interval


@dataclass(frozen=True)
class WeaveParameters:
    """Cluster side ``n`` (fusion sites per cross-chain), overhead factor
    ``a`` (cross-chain length a n, rounded to the nearest integer), and
    per-attempt success probability ``ps``."""

    n: int
    a: float
    ps: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("cluster side must be at least 1")
        if not self.a > 1:
            raise ValueError("overhead factor must exceed 1")
        if not 0 < self.ps <= 1:
            raise ValueError("success probability must be in (0, 1]")

    @property
    def attempt_budget(self) -> int:
        """Cross-chain length: fusion attempts available per chain."""
        return int(round(self.a * self.n))

    @property
    def thread_length(self) -> int:
        """Length of the single long thread, n (l + 1) with l = m - n."""
        return self.n * (self.attempt_budget - self.n + 1)


def single_chain_weave_probability(params: WeaveParameters) -> float:
    """Probability that one cross-chain accumulates its n successes
    within the attempt budget: the upper tail of Binomial(m, ps) at n,
    evaluated via the regularized-beta survival function."""
    return float(binom.sf(params.n - 1, params.attempt_budget, params.ps))


def negative_binomial_weave_probability(params: WeaveParameters) -> float:
    """The same probability summed failure-count by failure-count:
    ps^n sum_k (1-ps)^k C(n+k-1, k) over k = 0..m-n, computed exactly in
    rational arithmetic. Cross-check for the tail form."""
    p = Fraction(params.ps)
    n = params.n
    total = Fraction(0)
    for k in range(params.attempt_budget - n + 1):
        total += (1 - p) ** k * math.comb(n + k - 1, k)
    return float(p ** n * total)


def log_overall_success_probability(params: WeaveParameters) -> float:
    """log P with P the probability that all n cross-chains weave in."""
    return params.n * float(binom.logsf(params.n - 1, params.attempt_budget, params.ps))


def overall_success_probability(params: WeaveParameters) -> float:
    """pi^n, evaluated in log space to survive extreme n."""
    return math.exp(log_overall_success_probability(params))


def hoeffding_bound(params: WeaveParameters) -> float:
    """Certified lower bound on the single-chain probability,
    1 - exp(-2 (m ps - n + 1)^2 / m), valid only for a > 1/ps (so that
    the budget's mean success count exceeds the requirement)."""
    if params.a * params.ps <= 1:
        raise ValueError("bound direction requires a > 1/ps")
    m = params.attempt_budget
    gap = m * params.ps - params.n + 1
    return 1.0 - math.exp(-2.0 * gap * gap / m)


def resource_count(params: WeaveParameters) -> int:
    """Total input edges (double-edge units): n cross-chains of length m
    plus the thread of length n (m - n + 1). Grows like (2a - 1) n^2, so
    quadratically at fixed a; preparing the redundantly encoded fusion
    sites costs a further ~2 n^2 edges on top, a constant factor."""
    return params.n * params.attempt_budget + params.thread_length


@dataclass(frozen=True)
class WeaveReport:
    n: int
    a: float
    ps: float
    trials: int
    seed: int
    successes: int
    fraction: float
    wilson_low: float
    wilson_high: float

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_weave(params: WeaveParameters, trials: int, seed: int) -> WeaveReport:
    """Monte Carlo of the per-chain counting model: each cross-chain
    draws Bernoulli(ps) attempts until n successes or the budget runs
    out; a trial succeeds when every chain does."""
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.Generator(np.random.Philox(key=seed))
    # stopping early never changes whether n successes fit in the budget,
    # so each chain reduces to one binomial draw
    counts = rng.binomial(params.attempt_budget, params.ps, size=(trials, params.n))
    successes = int((counts >= params.n).all(axis=1).sum())
    low, high = wilson_interval(successes, trials)
    return WeaveReport(
        n=params.n,
        a=params.a,
        ps=params.ps,
        trials=trials,
        seed=seed,
        successes=successes,
        fraction=successes / trials,
        wilson_low=low,
        wilson_high=high,
    )


@dataclass(frozen=True)
class ScanPoint:
    a: float
    ps: float
    n: int
    single_chain: float
    overall: float
    log_overall: float


@dataclass(frozen=True)
class PercolationScan:
    """Overall success probabilities over a (a or ps) grid and a list of
    cluster sides, with the per-point trend in n and the empirical
    crossover bracket around the analytic threshold."""

    points: tuple[ScanPoint, ...]
    trends: dict[tuple[float, float], str]
    threshold: float
    bracket_low: float | None
    bracket_high: float | None

    @property
    def bracket_contains_threshold(self) -> bool | None:
        if self.bracket_low is None or self.bracket_high is None:
            return None
        return self.bracket_low < self.threshold < self.bracket_high


def _trend(log_values: list[float]) -> str:
    if len(log_values) < 2:
        return "degenerate"
    diffs = [b - a for a, b in zip(log_values, log_values[1:])]
    if all(d >= 0 for d in diffs) and log_values[-1] > log_values[0]:
        return "increasing"
    if all(d <= 0 for d in diffs) and log_values[-1] < log_values[0]:
        return "decreasing"
    if all(d == 0 for d in diffs):
        return "flat"
    return "mixed"


def percolation_scan(
    n_values: list[int],
    a: float | None = None,
    ps: float | None = None,
    a_values: list[float] | None = None,
    ps_values: list[float] | None = None,
) -> PercolationScan:
    """Scan ps at fixed a (pass ``a`` and ``ps_values``) or a at fixed ps
    (pass ``ps`` and ``a_values``). Grid points sitting exactly on the
    threshold are labeled ``critical`` and excluded from the bracket; a
    single-entry n list yields ``degenerate`` trends and no bracket."""
    if (a is None) == (ps is None):
        raise ValueError("fix exactly one of a and ps")
    if a is not None:
        if not ps_values:
            raise ValueError("scanning ps requires ps_values")
        grid = [(a, p) for p in ps_values]
        threshold = 1.0 / a
        varying = [p for _, p in grid]
    else:
        if not a_values:
            raise ValueError("scanning a requires a_values")
        grid = [(av, ps) for av in a_values]
        threshold = 1.0 / ps
        varying = [av for av, _ in grid]

    if not n_values:
        raise ValueError("need at least one cluster side")
    ns = sorted(n_values)
    points: list[ScanPoint] = []
    trends: dict[tuple[float, float], str] = {}
    below: list[float] = []
    above: list[float] = []
    for (av, pv), var in zip(grid, varying):
        logs = []
        for n in ns:
            params = WeaveParameters(n=n, a=av, ps=pv)
            lo = log_overall_success_probability(params)
            logs.append(lo)
            points.append(
                ScanPoint(
                    a=av, ps=pv, n=n,
                    single_chain=single_chain_weave_probability(params),
                    overall=math.exp(lo),
                    log_overall=lo,
                )
            )
        if av * pv == 1.0:
            trends[(av, pv)] = "critical"
            continue
        trend = _trend(logs)
        trends[(av, pv)] = trend
        if trend == "decreasing":
            below.append(var)
        elif trend == "increasing":
            above.append(var)

    bracket_low = max(below) if below else None
    bracket_high = min(above) if above else None
    return PercolationScan(
        points=tuple(points),
        trends=trends,
        threshold=threshold,
        bracket_low=bracket_low,
        bracket_high=bracket_high,
    )
