"""Rigorous lower and upper bounds on the optimal quality.

Lower bounds come from explicit constructions: any computed strategy
performance is one, and block constructions extend small exact values to
arbitrary input sizes at a linear rate. Upper bounds come from the razor
model, a relaxation in which chains are capped at length R after every
step. Capping only removes edges, and fewer edges never demand more
fusion attempts, so the razor model's minimal expected attempt count
lower-bounds the true one; the edge-loss identity then turns it into an
upper bound on quality: quality <= N - attempts at success probability
one half. The R = 2 razor model reduces further to a three-action walk
on a quarter-plane whose attempt count is bounded by a tiny linear
program, solved here exactly with a verified optimality certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .configuration import Configuration, _partitions
from .exact import HALF, _check_ps, _evaluate, _stateless_classifier
from .strategies import MODESTY


class CertificateMismatch(RuntimeError):
    """Solver and closed-form certificate disagree; indicates a bug."""


class HypothesisViolated(ValueError):
    """A bound's verified precondition failed for the supplied data."""

    def __init__(self, message: str, failing: list[int]):
        super().__init__(message)
        self.failing = failing


# ---------------------------------------------------------------------------
# razor model


@dataclass(frozen=True)
class RazorState:
    """Counts per capped length: counts[i] chains of length i + 1.

    With cap r and at most n edges there are fewer than (n + 1)^r such
    states, so the relaxed model is polynomial where the full one is
    exponential.
    """

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError(f"counts must be non-negative: {self.counts}")

    @classmethod
    def initial(cls, n: int, r: int) -> "RazorState":
        """n elementary pairs under cap r."""
        return cls(tuple([n] + [0] * (r - 1))) if n else cls((0,) * r)

    @property
    def total_edges(self) -> int:
        return sum((i + 1) * c for i, c in enumerate(self.counts))

    @property
    def chain_count(self) -> int:
        return sum(self.counts)

    @property
    def vertex_count(self) -> int:
        return sum((i + 2) * c for i, c in enumerate(self.counts))


def _razor_states(n: int, r: int) -> list[tuple[int, ...]]:
    """All capped count vectors with at most n edges, in an order where
    every fusion successor precedes its sources."""
    states = []
    for total in range(n + 1):
        for items in _partitions(total, r):
            counts = [0] * r
            for part, mult in items:
                counts[part - 1] = mult
            states.append(tuple(counts))
    states.sort(key=lambda c: (sum((i + 2) * x for i, x in enumerate(c)), c))
    return states


def _razor_fuse(counts: tuple[int, ...], i: int, j: int, success: bool, r: int) -> tuple[int, ...]:
    """Fuse lengths i and j (1-based); the merged chain is capped at r."""
    out = list(counts)
    out[i - 1] -= 1
    out[j - 1] -= 1
    if success:
        out[min(i + j, r) - 1] += 1
    else:
        if i > 1:
            out[i - 2] += 1
        if j > 1:
            out[j - 2] += 1
    return tuple(out)


def razor_quality(n: int, r: int, ps=HALF) -> tuple[Fraction, Fraction]:
    """Optimal quality and minimal expected attempts in the razor model.

    With r >= n no chain is ever capped and both numbers match the full
    problem. Bound claims are made at ps = 1/2 only; other values are
    informational.
    """
    if r < 2:
        raise ValueError("razor parameter must be at least 2")
    _check_ps(ps)
    exact = isinstance(ps, Fraction)
    cast = Fraction if exact else float
    pf = 1 - ps
    quality: dict[tuple[int, ...], object] = {}
    attempts: dict[tuple[int, ...], object] = {}
    for counts in _razor_states(n, r):
        if sum(counts) <= 1:
            quality[counts] = cast(sum((i + 1) * c for i, c in enumerate(counts)))
            attempts[counts] = cast(0)
            continue
        best_q = None
        best_t = None
        for i in range(1, r + 1):
            if counts[i - 1] == 0:
                continue
            for j in range(i, r + 1):
                if counts[j - 1] < (2 if i == j else 1):
                    continue
                succ = _razor_fuse(counts, i, j, True, r)
                fail = _razor_fuse(counts, i, j, False, r)
                q = ps * quality[succ] + pf * quality[fail]
                t = 1 + ps * attempts[succ] + pf * attempts[fail]
                if best_q is None or q > best_q:
                    best_q = q
                if best_t is None or t < best_t:
                    best_t = t
        quality[counts] = best_q
        attempts[counts] = best_t
    start = RazorState.initial(n, r).counts
    return quality[start], attempts[start]


def razor_upper_bound(n: int, r: int) -> Fraction:
    """Upper bound on the optimal quality of n EPR pairs: n minus the
    razor model's minimal expected attempts, at ps = 1/2."""
    _, attempts = razor_quality(n, r, HALF)
    return n - attempts


# ---------------------------------------------------------------------------
# the R = 2 linear program


@dataclass(frozen=True)
class LinearProgramInstance:
    """min cost . x  subject to  x matrix <= rhs, x >= 0 (x in R^3).

    The matrix rows are the mean displacement vectors of the three
    available moves in the R = 2 state space (fuse 1+1, 1+2, 2+2); the
    right-hand side encodes that any play from (n, 0) must end within
    distance one of the origin.
    """

    cost: tuple[Fraction, ...]
    matrix: tuple[tuple[Fraction, ...], ...]
    rhs: tuple[Fraction, ...]

    @classmethod
    def for_pairs(cls, n: int) -> "LinearProgramInstance":
        return cls(
            cost=(Fraction(1), Fraction(1), Fraction(1)),
            matrix=(
                (Fraction(-2), Fraction(1, 2)),
                (Fraction(-1, 2), Fraction(-1, 2)),
                (Fraction(1), Fraction(-3, 2)),
            ),
            rhs=(Fraction(1 - n), Fraction(1)),
        )


def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    pivot = tableau[row][col]
    tableau[row] = [v / pivot for v in tableau[row]]
    for r, line in enumerate(tableau):
        if r != row and line[col] != 0:
            factor = line[col]
            tableau[r] = [v - factor * w for v, w in zip(line, tableau[row])]
    basis[row] = col


def _run_simplex(
    tableau: list[list[Fraction]],
    basis: list[int],
    cost: list[Fraction],
    allowed: int | None = None,
) -> None:
    """Minimize with Bland's rule; cost has one entry per column (no rhs).
    Only the first ``allowed`` columns may enter the basis."""
    m = len(tableau)
    if allowed is None:
        allowed = len(cost)
    while True:
        cb = [cost[basis[i]] for i in range(m)]
        entering = None
        for j in range(allowed):
            reduced = cost[j] - sum(cb[i] * tableau[i][j] for i in range(m))
            if reduced < 0:
                entering = j
                break
        if entering is None:
            return
        leaving = None
        ratio = None
        for i in range(m):
            if tableau[i][entering] > 0:
                r = tableau[i][-1] / tableau[i][entering]
                if ratio is None or r < ratio or (r == ratio and basis[i] < basis[leaving]):
                    ratio = r
                    leaving = i
        if leaving is None:
            raise CertificateMismatch("linear program unbounded; bug in setup")
        _pivot(tableau, basis, leaving, entering)


def simplex_minimize(
    cost: Sequence[Fraction],
    rows: Sequence[Sequence[Fraction]],
    rhs: Sequence[Fraction],
) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Exact two-phase simplex for min cost.x, rows.x <= rhs, x >= 0."""
    n = len(cost)
    m = len(rows)
    negate = [rhs[i] < 0 for i in range(m)]
    n_art = sum(negate)
    width = n + m + n_art + 1
    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    art = n + m
    for i in range(m):
        line = [Fraction(0)] * width
        sign = -1 if negate[i] else 1
        for j in range(n):
            line[j] = sign * Fraction(rows[i][j])
        line[n + i] = Fraction(sign)
        line[-1] = sign * Fraction(rhs[i])
        if negate[i]:
            line[art] = Fraction(1)
            basis.append(art)
            art += 1
        else:
            basis.append(n + i)
        tableau.append(line)

    if n_art:
        phase1 = [Fraction(0)] * (width - 1)
        for j in range(n + m, width - 1):
            phase1[j] = Fraction(1)
        _run_simplex(tableau, basis, phase1)
        infeasibility = sum(
            tableau[i][-1] for i in range(m) if basis[i] >= n + m
        )
        if infeasibility != 0:
            raise CertificateMismatch("linear program infeasible; bug in setup")
        for i in range(m):
            if basis[i] >= n + m:
                for j in range(n + m):
                    if tableau[i][j] != 0:
                        _pivot(tableau, basis, i, j)
                        break

    phase2 = [Fraction(c) for c in cost] + [Fraction(0)] * (m + n_art)
    _run_simplex(tableau, basis, phase2, allowed=n + m)

    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tableau[i][-1]
    value = sum(c * v for c, v in zip(cost, x))
    return value, tuple(x)


def lp_closed_form(n: int) -> Fraction:
    if n < 1:
        raise ValueError("need at least one pair")
    if n == 1:
        return Fraction(0)
    if n <= 5:
        return Fraction(n - 1, 2)
    return Fraction(4 * (n - 1) - 6, 5)


def lp_certificate(n: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Primal and dual solutions that certify the closed form."""
    if n == 1:
        return (Fraction(0),) * 3, (Fraction(0),) * 2
    if n <= 5:
        return (
            (Fraction(n - 1, 2), Fraction(0), Fraction(0)),
            (Fraction(1, 2), Fraction(0)),
        )
    return (
        (Fraction(2 * n, 5), 2 * (Fraction(n, 5) - 1), Fraction(0)),
        (Fraction(4, 5), Fraction(6, 5)),
    )


def lp_attempts_bound(n: int) -> Fraction:
    """Lower bound on the expected attempts of any R = 2 razor strategy
    on n pairs, with the optimum certified three ways: simplex solution,
    closed form, and an explicit primal/dual pair whose objectives
    coincide and which are feasible for their respective programs."""
    instance = LinearProgramInstance.for_pairs(n)
    closed = lp_closed_form(n)
    x, y = lp_certificate(n)

    if any(v < 0 for v in x):
        raise CertificateMismatch(f"primal certificate not nonnegative for N={n}")
    for j in range(2):
        lhs = sum(x[i] * instance.matrix[i][j] for i in range(3))
        if lhs > instance.rhs[j]:
            raise CertificateMismatch(f"primal certificate infeasible for N={n}")
    if any(v < 0 for v in y):
        raise CertificateMismatch(f"dual certificate not nonnegative for N={n}")
    for i in range(3):
        lhs = -sum(y[j] * instance.matrix[i][j] for j in range(2))
        if lhs > instance.cost[i]:
            raise CertificateMismatch(f"dual certificate infeasible for N={n}")

    primal_value = sum(c * v for c, v in zip(instance.cost, x))
    dual_value = (n - 1) * y[0] - y[1]
    rows = [[instance.matrix[i][j] for i in range(3)] for j in range(2)]
    simplex_value, _ = simplex_minimize(instance.cost, rows, instance.rhs)
    if not (primal_value == dual_value == closed == simplex_value):
        raise CertificateMismatch(
            f"objective mismatch for N={n}: primal={primal_value} "
            f"dual={dual_value} closed={closed} simplex={simplex_value}"
        )
    return closed


def analytic_upper_bound(n: int) -> Fraction:
    """Quality of n pairs is at most n/5 + 2, for n >= 6."""
    if n < 6:
        raise ValueError(
            "the n/5 + 2 bound needs n >= 6; use lp_attempts_bound for the small cases"
        )
    return Fraction(n, 5) + 2


# ---------------------------------------------------------------------------
# lower bounds from constructions


def combine_lower_bound(parts: Iterable[Fraction]) -> Fraction:
    """Quality bound for processing k groups independently and then
    fusing the resulting chains insistently: sum of the per-group bounds
    minus 2 (k - 1)."""
    values = list(parts)
    if not values:
        raise ValueError("need at least one part")
    return sum(values) - 2 * (len(values) - 1)


def modesty_quality_range(max_n: int, ps=HALF) -> dict[int, Fraction]:
    """Exact smallest-first quality for every start of 1..max_n pairs,
    sharing one memo across the whole sweep."""
    exact = isinstance(ps, Fraction)
    classify = _stateless_classifier(
        MODESTY, Fraction if exact else float, Fraction(0) if exact else 0.0
    )
    memo: dict = {}
    return {
        n: _evaluate(Configuration.epr_pairs(n).items, classify, ps, memo=memo)
        for n in range(1, max_n + 1)
    }


def modesty_lower_bound(
    n: int, n0: int, values: Mapping[int, Fraction], step: int = 1
) -> Fraction:
    """Linear lower bound on the optimal quality of n pairs, n >= n0,
    anchored at exact data: values[n0] + alpha (n - n0) with
    alpha = (values[n0] - 2) / n0.

    ``values`` must supply the exact smallest-first quality on the
    checked range n0..2 n0 and satisfy (values[m] - 2)/m >= alpha there;
    the hypothesis is checked and a violation reported with the failing
    sizes. With ``step=2`` only sizes of the anchor's parity are checked
    and covered: the block decomposition then never needs an off-parity
    size, but ``n`` must share the anchor's parity. (Large anchors need
    this: quality has parity steps, so odd sizes sag below a slope fitted
    at an even anchor.)
    """
    if n < n0:
        raise ValueError(f"bound is valid for n >= n0 = {n0}")
    if step not in (1, 2):
        raise ValueError("step must be 1 or 2")
    if step == 2 and n0 % 2:
        raise ValueError("step=2 needs an even anchor so all block sizes share its parity")
    if (n - n0) % step:
        raise ValueError(f"with step={step}, n must have the anchor's parity")
    checked = range(n0, 2 * n0 + 1, step)
    missing = [m for m in checked if m not in values]
    if missing:
        raise ValueError(f"need exact values for all of {n0}..{2 * n0}; missing {missing}")
    alpha = (Fraction(values[n0]) - 2) / n0
    failing = [m for m in checked if (Fraction(values[m]) - 2) / m < alpha]
    if failing:
        raise HypothesisViolated(
            f"(value - 2)/m >= alpha fails for m in {failing}", failing
        )
    return Fraction(values[n0]) + alpha * (n - n0)


def static_lower_bound(n: int) -> Fraction:
    """Yield bound for the block-then-insistent-pairing strategy at
    n = 2**(3+m) input pairs: (137/2048) n + 2."""
    if n < 8 or n & (n - 1):
        raise ValueError(f"bound is stated for n = 2**(3+m), got {n}")
    return Fraction(137, 2048) * n + 2


def general_ps_initial_length(ps) -> Fraction | float:
    """Chain length above which insistent pairwise combination grows the
    total linearly, for a gate of success probability ps: 2 (1 - ps)/ps."""
    _check_ps(ps)
    return 2 * (1 - ps) / ps


def inverse_resource_bounds(target_length, alpha, epsilon) -> tuple:
    """Pair counts that asymptotically suffice / cannot suffice to reach
    ``target_length`` with probability approaching one, given a linear
    rate alpha: ((1/alpha + eps) L, (1/alpha - eps) L). Requires
    eps > 0: both statements need strict headroom."""
    if epsilon <= 0:
        raise ValueError("epsilon must be strictly positive")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (
        (1 / alpha + epsilon) * target_length,
        (1 / alpha - epsilon) * target_length,
    )


# ---------------------------------------------------------------------------
# largest-first closed forms


def greed_closed_form(n: int) -> Fraction:
    """Exact expected final length of largest-first fusing of n pairs at
    success probability one half: twice the reflected-walk tail sum."""
    if n < 1:
        raise ValueError("need at least one pair")
    scale = Fraction(2, 2 ** n)
    return scale * sum(math.comb(n, k) * (n - 2 * k) for k in range((n - 1) // 2 + 1))


def greed_closed_form_float(n: int) -> float:
    """Log-space evaluation of the same sum, usable for very large n."""
    if n < 1:
        raise ValueError("need at least one pair")
    log2 = math.log(2.0)
    terms = []
    for k in range((n - 1) // 2 + 1):
        if n - 2 * k == 0:
            continue
        terms.append(
            (1 - n) * log2
            + math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
            + math.log(n - 2 * k)
        )
    peak = max(terms)
    return math.exp(peak) * sum(math.exp(t - peak) for t in terms)


def greed_asymptotic(n: int) -> float:
    """Leading asymptotic of the largest-first yield: sqrt(2 n / pi)."""
    return math.sqrt(2 * n / math.pi)
