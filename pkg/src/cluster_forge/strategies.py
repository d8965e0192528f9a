"""Control strategies: which chains to fuse next.

A valid strategy never references absent chains (no null fusions) and
stops exactly when at most one chain remains (no premature stops).

Stateless strategies decide from the anonymous configuration alone.
Strategies that need to address individual chains and remember them
(insistent pairings, block structure) implement the stateful interface
on identity configurations with an explicit, hashable memory value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping

from .configuration import (
    FAILURE,
    STOP,
    SUCCESS,
    Action,
    Configuration,
    Fuse,
    IdentityConfiguration,
    Stop,
    canonical_key,
    key_from_counts,
)


class Strategy:
    """Stateless decision rule on anonymous configurations."""

    name = "strategy"
    stateful = False

    def decide(self, config: Configuration) -> Action:
        raise NotImplementedError

    def decide_counts(self, counts: Mapping[int, int]) -> Action:
        """Decision from a raw length -> count mapping.

        Hot path for simulation; the default just wraps ``decide``.
        """
        return self.decide(Configuration.from_counts(counts))

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class Greed(Strategy):
    """Always fuse the two largest available chains."""

    name = "greed"

    def decide(self, config: Configuration) -> Action:
        return self.decide_counts(config.counts())

    def decide_counts(self, counts: Mapping[int, int]) -> Action:
        total = sum(counts.values())
        if total <= 1:
            return STOP
        a = max(counts)
        b = a if counts[a] >= 2 else max(k for k in counts if k != a)
        return Fuse(a, b)


class Modesty(Strategy):
    """Always fuse the two smallest available chains."""

    name = "modesty"

    def decide(self, config: Configuration) -> Action:
        return self.decide_counts(config.counts())

    def decide_counts(self, counts: Mapping[int, int]) -> Action:
        total = sum(counts.values())
        if total <= 1:
            return STOP
        a = min(counts)
        b = a if counts[a] >= 2 else min(k for k in counts if k != a)
        return Fuse(a, b)


class LookupStrategy(Strategy):
    """Strategy given extensionally by a canonical-key -> action table."""

    name = "lookup"

    def __init__(self, table: Mapping[str, Action], name: str = "lookup"):
        self.table = dict(table)
        self.name = name

    def decide(self, config: Configuration) -> Action:
        key = canonical_key(config)
        try:
            return self.table[key]
        except KeyError:
            raise KeyError(f"lookup table has no entry for configuration '{key}'") from None

    def decide_counts(self, counts: Mapping[int, int]) -> Action:
        key = key_from_counts(counts)
        try:
            return self.table[key]
        except KeyError:
            raise KeyError(f"lookup table has no entry for configuration '{key}'") from None

    def save(self, path) -> None:
        """One line per entry: ``key<TAB>a,b`` or ``key<TAB>stop``."""
        with open(path, "w", encoding="ascii") as fh:
            for key in sorted(self.table):
                fh.write(f"{key}\t{format_action(self.table[key])}\n")

    @classmethod
    def load(cls, path, name: str = "lookup") -> "LookupStrategy":
        table: dict[str, Action] = {}
        with open(path, "r", encoding="ascii") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                key, _, act = line.partition("\t")
                table[key] = parse_action(act)
        return cls(table, name=name)


def format_action(action: Action) -> str:
    if isinstance(action, Fuse):
        return f"{action.a},{action.b}"
    return "stop"


def parse_action(text: str) -> Action:
    if text == "stop":
        return STOP
    a, _, b = text.partition(",")
    return Fuse(int(a), int(b))


class StatefulStrategy:
    """Decision rule on identity configurations with persistent memory.

    Memory values must be hashable and are advanced functionally, so the
    exact engine can memoize on (chains, memory) and simulations can
    replay deterministically. ``Fuse`` actions carry chain indices here.
    """

    name = "stateful"
    stateful = True

    def initial_memory(self, chains: IdentityConfiguration) -> Hashable:
        raise NotImplementedError

    def decide(self, chains: IdentityConfiguration, memory: Hashable) -> Action:
        raise NotImplementedError

    def next_memory(
        self,
        chains: IdentityConfiguration,
        memory: Hashable,
        action: Fuse,
        outcome: str,
        result: IdentityConfiguration,
    ) -> Hashable:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class IdentityAdapter(StatefulStrategy):
    """Run a stateless strategy in the identity picture.

    Ties among chains of the decided lengths go to the lowest indices,
    so event trees are reproducible.
    """

    def __init__(self, inner: Strategy):
        self.inner = inner
        self.name = inner.name

    def initial_memory(self, chains: IdentityConfiguration) -> Hashable:
        return None

    def decide(self, chains: IdentityConfiguration, memory: Hashable) -> Action:
        action = self.inner.decide(chains.to_configuration())
        if not isinstance(action, Fuse):
            return action
        return _lowest_indices(chains.chains, action.a, action.b)

    def next_memory(self, chains, memory, action, outcome, result) -> Hashable:
        return None


def _lowest_indices(chains: tuple[int, ...], a: int, b: int, offset: int = 0) -> Fuse:
    """Lowest chain indices realizing the length pair (a, b)."""
    i = chains.index(a)
    if b == a:
        j = chains.index(a, i + 1)
    else:
        j = chains.index(b)
    return Fuse(offset + i, offset + j)


class TwoStage(StatefulStrategy):
    """Block stage followed by rounds of insistent pairwise fusion.

    Stage one partitions the chain lineup into consecutive blocks of
    ``block_size`` chains (a final short block is allowed) and runs the
    inner strategy to completion inside each block; no fusion ever
    crosses a block boundary. Stage two repeatedly pairs the surviving
    chains (1st with 2nd, 3rd with 4th, ...) and fuses each pair
    insistently: after a failure that both partners survive, the same
    pair is retried. Once every pair of a round is resolved, survivors
    are renumbered in order and a new round starts, until at most one
    chain remains.

    With ``block_size=8`` and the smallest-first inner strategy this is
    the feed-forward-minimizing strategy whose yield grows linearly in
    the input size.
    """

    def __init__(self, block_size: int = 8, inner: Strategy | None = None, name: str | None = None):
        if block_size < 2:
            raise ValueError("block_size must be at least 2")
        self.block_size = block_size
        self.inner = inner if inner is not None else Modesty()
        self.name = name if name is not None else f"two-stage-{block_size}-{self.inner.name}"

    # memory is ("blocks", sizes) during stage one, ("pairs", pos) in
    # stage two; pos counts the chains already resolved this round.

    def initial_memory(self, chains: IdentityConfiguration) -> Hashable:
        sizes = []
        remaining = chains.chain_count
        while remaining > 0:
            take = min(self.block_size, remaining)
            sizes.append(take)
            remaining -= take
        return self._normalize(("blocks", tuple(sizes)))

    @staticmethod
    def _normalize(memory):
        if memory[0] == "blocks" and all(s <= 1 for s in memory[1]):
            return ("pairs", 0)
        return memory

    def decide(self, chains: IdentityConfiguration, memory: Hashable) -> Action:
        if chains.chain_count <= 1:
            return STOP
        kind, state = memory
        if kind == "blocks":
            offset = 0
            for size in state:
                if size >= 2:
                    block = chains.chains[offset:offset + size]
                    inner_action = self.inner.decide(Configuration.from_lengths(block))
                    assert isinstance(inner_action, Fuse)
                    return _lowest_indices(block, inner_action.a, inner_action.b, offset)
                offset += size
            raise AssertionError("block memory with no active block")
        pos = state
        return Fuse(pos, pos + 1)

    def next_memory(self, chains, memory, action, outcome, result) -> Hashable:
        kind, state = memory
        removed = chains.chain_count - result.chain_count
        if kind == "blocks":
            sizes = list(state)
            offset = 0
            for bi, size in enumerate(sizes):
                if offset <= action.a < offset + size:
                    sizes[bi] -= removed
                    break
                offset += size
            return self._normalize(("blocks", tuple(sizes)))
        pos = state
        x = chains.chains[action.a]
        y = chains.chains[action.b]
        if outcome == SUCCESS:
            pos += 1
        elif x == 1 and y == 1:
            pass  # pair annihilated; the next pair slides into pos
        elif x == 1 or y == 1:
            pos += 1  # survivor is resolved for this round
        # else: both partners survive, insist on the same pair
        if pos >= result.chain_count - 1:
            pos = 0  # round over; survivors renumbered in order
        return ("pairs", pos)


GREED = Greed()
MODESTY = Modesty()
STATIC = TwoStage(block_size=8, inner=MODESTY, name="static")

BUILTIN_STRATEGIES: dict[str, Strategy | StatefulStrategy] = {
    "greed": GREED,
    "modesty": MODESTY,
    "static": STATIC,
}


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    event: str | None = None
    message: str | None = None


def validate_strategy(
    strategy: Strategy | StatefulStrategy,
    start: Configuration,
    max_steps: int | None = None,
) -> ValidationResult:
    """Exhaustively walk the event tree from ``start`` and check validity.

    Verifies both rules on every reachable state (no null fusions, stop
    exactly when at most one chain remains) and that every branch
    terminates within ``max_steps`` (default: the vertex count of the
    start, an upper bound on any fusion sequence). Returns the first
    violation's event string, if any.
    """
    if max_steps is None:
        max_steps = start.vertex_count

    if strategy.stateful:
        chains0 = IdentityConfiguration.from_configuration(start)
        root = (chains0, strategy.initial_memory(chains0))
    else:
        root = start

    seen: set = set()
    # stack of (state, event string so far)
    stack: list[tuple[object, str]] = [(root, "")]
    while stack:
        state, event = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        if len(event) > max_steps:
            return ValidationResult(False, event, "did not terminate within the step bound")
        try:
            if strategy.stateful:
                chains, memory = state
                n_chains = chains.chain_count
                action = strategy.decide(chains, memory)
            else:
                n_chains = state.chain_count
                action = strategy.decide(state)
        except KeyError as exc:
            return ValidationResult(False, event, f"no decision available: {exc}")
        if isinstance(action, Stop):
            if n_chains > 1:
                return ValidationResult(False, event, f"premature stop with {n_chains} chains")
            continue
        if n_chains <= 1:
            return ValidationResult(False, event, "fusion attempted on a terminal configuration")
        for outcome in (SUCCESS, FAILURE):
            try:
                if strategy.stateful:
                    nxt = chains.fuse_at(action.a, action.b, outcome)
                    mem = strategy.next_memory(chains, memory, action, outcome, nxt)
                    child = (nxt, mem)
                else:
                    child = state.fuse(action.a, action.b, outcome)
            except (ValueError, IndexError) as exc:
                return ValidationResult(False, event + outcome, f"null fusion: {exc}")
            stack.append((child, event + outcome))
    return ValidationResult(True)
