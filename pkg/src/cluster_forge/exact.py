"""Exact expectation values and the globally optimal dynamic program.

All exact computation runs on arbitrary-precision rationals
(:class:`fractions.Fraction`); pass a float success probability to get a
floating-point evaluation instead. The per-attempt success probability
``ps`` weights the two branches of every fusion:

    value(C) = ps * value(C_success) + (1 - ps) * value(C_failure)

The optimal quality maximizes this recursion over all feasible fusion
pairs, anchored at value(single chain of length k) = k and value(empty)
= 0. Because every attempt strictly decreases the vertex count, the
recursion is well-founded and can be tabulated level by level.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterator

from .configuration import (
    FAILURE,
    STOP,
    SUCCESS,
    Action,
    Configuration,
    Fuse,
    IdentityConfiguration,
    Stop,
    _fuse_items,
    canonical_key,
    enumerate_configurations,
    parse_key,
)
from .strategies import LookupStrategy, StatefulStrategy, Strategy, format_action, parse_action

HALF = Fraction(1, 2)


class TableBudgetExceeded(RuntimeError):
    """Quality-table build ran past its entry budget."""

    def __init__(self, n: int, vertex_level: int, entries: int, budget: int):
        super().__init__(
            f"table build for N={n} exceeded budget of {budget} entries "
            f"at vertex-count level {vertex_level} ({entries} entries stored)"
        )
        self.n = n
        self.vertex_level = vertex_level
        self.entries = entries
        self.budget = budget


def _check_ps(ps) -> None:
    if not 0 < ps <= 1:
        raise ValueError(f"success probability must be in (0, 1], got {ps}")


def _evaluate(start: Hashable, classify: Callable, ps, memo: dict | None = None):
    """Memoized expectation of an additive value over the event DAG.

    ``classify(state)`` returns ``("leaf", value)`` for terminal states or
    ``("node", success_state, failure_state, base)`` with
    value = base + ps * value(success) + (1 - ps) * value(failure).
    Iterative so that deep event chains cannot hit the recursion limit.
    A caller-supplied ``memo`` is reused across related starts.
    """
    pf = 1 - ps
    if memo is None:
        memo = {}
    stack: list[tuple[Hashable, tuple | None]] = [(start, None)]
    while stack:
        state, node = stack.pop()
        if node is None:
            if state in memo:
                continue
            node = classify(state)
            if node[0] == "leaf":
                memo[state] = node[1]
                continue
            _, succ, fail, _ = node
            stack.append((state, node))
            if fail not in memo:
                stack.append((fail, None))
            if succ not in memo:
                stack.append((succ, None))
        else:
            _, succ, fail, base = node
            memo[state] = base + ps * memo[succ] + pf * memo[fail]
    return memo[start]


def _stateless_classifier(strategy: Strategy, terminal, base):
    """classify() over raw (length, count) item tuples."""

    def classify(items):
        config = Configuration(items)
        action = strategy.decide(config)
        if isinstance(action, Stop):
            if config.chain_count > 1:
                raise ValueError(
                    f"invalid strategy {strategy.name}: premature stop on '{config}'"
                )
            return ("leaf", terminal(config.total_length))
        config.fuse(action.a, action.b, SUCCESS)  # availability check
        succ = _fuse_items(items, action.a, action.b, True)
        fail = _fuse_items(items, action.a, action.b, False)
        return ("node", succ, fail, base)

    return classify


def _stateful_classifier(strategy: StatefulStrategy, terminal, base):
    """classify() over (identity chains, memory) pairs."""

    def classify(state):
        chains, memory = state
        action = strategy.decide(chains, memory)
        if isinstance(action, Stop):
            if chains.chain_count > 1:
                raise ValueError(
                    f"invalid strategy {strategy.name}: premature stop on {chains.chains}"
                )
            return ("leaf", terminal(chains.total_length))
        succ = chains.fuse_at(action.a, action.b, SUCCESS)
        fail = chains.fuse_at(action.a, action.b, FAILURE)
        succ_state = (succ, strategy.next_memory(chains, memory, action, SUCCESS, succ))
        fail_state = (fail, strategy.next_memory(chains, memory, action, FAILURE, fail))
        return ("node", succ_state, fail_state, base)

    return classify


def _numeric_kit(ps):
    """(terminal length cast, zero/one base) matching the type of ps."""
    if isinstance(ps, Fraction):
        return Fraction, Fraction(0), Fraction(1)
    return float, 0.0, 1.0


def _stateful_start(strategy: StatefulStrategy, start: Configuration | IdentityConfiguration):
    if isinstance(start, Configuration):
        chains = IdentityConfiguration.from_configuration(start)
    else:
        chains = start
    return (chains, strategy.initial_memory(chains))


def strategy_quality(
    strategy: Strategy | StatefulStrategy,
    start: Configuration | IdentityConfiguration,
    ps=HALF,
):
    """Expected final total length of ``strategy`` run from ``start``.

    Exact (a Fraction) whenever ``ps`` is a Fraction.
    """
    _check_ps(ps)
    cast, zero, _ = _numeric_kit(ps)
    if strategy.stateful:
        classify = _stateful_classifier(strategy, cast, zero)
        return _evaluate(_stateful_start(strategy, start), classify, ps)
    if isinstance(start, IdentityConfiguration):
        start = start.to_configuration()
    classify = _stateless_classifier(strategy, cast, zero)
    return _evaluate(start.items, classify, ps)


def expected_attempts(
    strategy: Strategy | StatefulStrategy,
    start: Configuration | IdentityConfiguration,
    ps=HALF,
):
    """Expected number of fusion attempts of ``strategy`` from ``start``.

    Satisfies quality = total_length - 2 * (1 - ps) * attempts, since a
    failed attempt loses exactly two edges and a successful one none.
    """
    _check_ps(ps)
    cast, zero, one = _numeric_kit(ps)
    if strategy.stateful:
        classify = _stateful_classifier(strategy, lambda _: zero, one)
        return _evaluate(_stateful_start(strategy, start), classify, ps)
    if isinstance(start, IdentityConfiguration):
        start = start.to_configuration()
    classify = _stateless_classifier(strategy, lambda _: zero, one)
    return _evaluate(start.items, classify, ps)


@dataclass
class QualityTable:
    """Optimal quality and an optimal action for every configuration with
    at most ``n`` edges, keyed by canonical key."""

    n: int
    ps: Fraction
    entries: dict[str, tuple[Fraction, Action]]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, config: Configuration) -> bool:
        return canonical_key(config) in self.entries

    def quality(self, config: Configuration) -> Fraction:
        return self.entries[canonical_key(config)][0]

    def action(self, config: Configuration) -> Action:
        return self.entries[canonical_key(config)][1]

    def items(self) -> Iterator[tuple[Configuration, Fraction, Action]]:
        for key, (quality, action) in self.entries.items():
            yield parse_key(key), quality, action

    def as_strategy(self, name: str = "optimal") -> LookupStrategy:
        return LookupStrategy({k: a for k, (_, a) in self.entries.items()}, name=name)

    def save(self, path) -> None:
        """Header ``N=<n> ps=<num>/<den>`` then one sorted line per entry:
        ``key<TAB>num/den<TAB>a,b|stop``. Byte-reproducible."""
        if not isinstance(self.ps, Fraction):
            raise TypeError("only exact-rational tables are persisted")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"N={self.n} ps={self.ps.numerator}/{self.ps.denominator}\n")
            for key in sorted(self.entries):
                quality, action = self.entries[key]
                fh.write(
                    f"{key}\t{quality.numerator}/{quality.denominator}\t"
                    f"{format_action(action)}\n"
                )

    @classmethod
    def load(cls, path) -> "QualityTable":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            fields = dict(part.split("=", 1) for part in header.split())
            n = int(fields["N"])
            num, _, den = fields["ps"].partition("/")
            ps = Fraction(int(num), int(den))
            entries: dict[str, tuple[Fraction, Action]] = {}
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                key, value, action = line.split("\t")
                num, _, den = value.partition("/")
                entries[key] = (Fraction(int(num), int(den)), parse_action(action))
        return cls(n=n, ps=ps, entries=entries)


def build_quality_table(n: int, ps=HALF, max_entries: int | None = None) -> QualityTable:
    """Tabulate the optimal quality over every configuration with at most
    ``n`` edges, working up through vertex-count levels so that both
    successors of every fusion are already known.

    Among maximizing actions the lexicographically smallest length pair
    is stored, so tables are deterministic. Raises
    :class:`TableBudgetExceeded` when ``max_entries`` is hit, naming the
    vertex-count level that was being filled.
    """
    _check_ps(ps)
    cast, _, _ = _numeric_kit(ps)
    pf = 1 - ps
    values: dict[tuple, object] = {}
    entries: dict[str, tuple[object, Action]] = {}
    for config in enumerate_configurations(n):
        if max_entries is not None and len(entries) >= max_entries:
            raise TableBudgetExceeded(n, config.vertex_count, len(entries), max_entries)
        items = config.items
        if config.chain_count <= 1:
            best = cast(config.total_length)
            best_action: Action = STOP
        else:
            best = None
            best_action = STOP
            for a, b in config.fusion_pairs():
                value = (
                    ps * values[_fuse_items(items, a, b, True)]
                    + pf * values[_fuse_items(items, a, b, False)]
                )
                if best is None or value > best:
                    best = value
                    best_action = Fuse(a, b)
        values[items] = best
        entries[canonical_key(config)] = (best, best_action)
    return QualityTable(n=n, ps=ps, entries=entries)


_table_cache: dict[tuple[int, object], QualityTable] = {}


def cached_quality_table(n: int, ps=HALF) -> QualityTable:
    """Reuse (or build and cache) a table covering total length ``n``.

    A previously built table for a larger bound is reused directly.
    """
    for (cached_n, cached_ps), table in _table_cache.items():
        if cached_ps == ps and cached_n >= n:
            return table
    table = build_quality_table(n, ps)
    _table_cache[(n, ps)] = table
    return table


def clear_table_cache() -> None:
    _table_cache.clear()


def optimal_quality(config: Configuration, ps=HALF):
    """Best possible expected final total length from ``config``."""
    _check_ps(ps)
    return cached_quality_table(config.total_length, ps).quality(config)


def optimal_attempts(config: Configuration, ps=HALF):
    """Expected fusion attempts of the quality-optimal strategy.

    Uses the edge-loss identity quality = L - 2 (1 - ps) attempts, which
    pins down the attempt count whenever ps < 1.
    """
    _check_ps(ps)
    if ps == 1:
        raise ValueError("attempts are not determined by quality at ps = 1")
    return (config.total_length - optimal_quality(config, ps)) / (2 * (1 - ps))


@dataclass
class OracleResult:
    """Exhaustive event-tree statistics for one strategy and start."""

    distribution: dict[Configuration, Fraction]
    mean_length: Fraction
    expected_attempts: Fraction
    paths: int

    @property
    def total_probability(self) -> Fraction:
        return sum(self.distribution.values(), Fraction(0))


def event_tree_oracle(
    strategy: Strategy | StatefulStrategy,
    start: Configuration | IdentityConfiguration,
    ps=HALF,
    max_total_length: int = 14,
) -> OracleResult:
    """Enumerate every event string explicitly, with no memoization.

    Ground truth for the memoized expectation code, at exponential cost;
    refuses starts longer than ``max_total_length`` edges.
    """
    _check_ps(ps)
    total = start.total_length
    if total > max_total_length:
        raise ValueError(
            f"oracle is exhaustive; start has {total} > {max_total_length} edges"
        )
    if not isinstance(ps, Fraction):
        ps = Fraction(ps)
    pf = 1 - ps

    distribution: dict[Configuration, Fraction] = {}
    stats = {"mean": Fraction(0), "attempts": Fraction(0), "paths": 0}

    if strategy.stateful:
        root = _stateful_start(strategy, start)
    else:
        config0 = start.to_configuration() if isinstance(start, IdentityConfiguration) else start
        root = config0

    def record(final: Configuration, prob: Fraction, depth: int) -> None:
        distribution[final] = distribution.get(final, Fraction(0)) + prob
        stats["mean"] += prob * final.total_length
        stats["attempts"] += prob * depth
        stats["paths"] += 1

    def walk(state, prob: Fraction, depth: int) -> None:
        if strategy.stateful:
            chains, memory = state
            action = strategy.decide(chains, memory)
            if isinstance(action, Stop):
                record(chains.to_configuration(), prob, depth)
                return
            for outcome, weight in ((SUCCESS, ps), (FAILURE, pf)):
                nxt = chains.fuse_at(action.a, action.b, outcome)
                mem = strategy.next_memory(chains, memory, action, outcome, nxt)
                walk((nxt, mem), prob * weight, depth + 1)
        else:
            action = strategy.decide(state)
            if isinstance(action, Stop):
                record(state, prob, depth)
                return
            for outcome, weight in ((SUCCESS, ps), (FAILURE, pf)):
                walk(state.fuse(action.a, action.b, outcome), prob * weight, depth + 1)

    walk(root, Fraction(1), 0)
    return OracleResult(
        distribution=distribution,
        mean_length=stats["mean"],
        expected_attempts=stats["attempts"],
        paths=stats["paths"],
    )
