"""Chain configurations and the elementary fusion rule.

A linear cluster chain is fully characterized by its length, counted in
edges (an EPR pair is a chain of length 1). A *configuration* is the
multiset of chain lengths currently available. Two views are provided:

* :class:`Configuration` -- the anonymous picture: counts per length.
  This is the state of the exact dynamic program.
* :class:`IdentityConfiguration` -- the identity picture: an ordered
  list of chains, needed by strategies that address individual chains
  and remember them between steps.

A fusion attempt on chains of lengths ``a`` and ``b`` merges them into a
single chain of length ``a + b`` on success.  On failure each loses one
edge; a chain reduced to length 0 is destroyed and disappears from the
configuration.  Either way the number of vertices strictly decreases, so
every process terminates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

SUCCESS = "S"
FAILURE = "F"

#: An event is a string over {"S", "F"}, one letter per attempted fusion.
Event = str


class InvalidFusionError(ValueError):
    """A fusion referenced chains that are not present (a null fusion)."""


@dataclass(frozen=True)
class Fuse:
    """Fuse a chain of length ``a`` with one of length ``b``.

    The pair is unordered: ``Fuse(3, 2) == Fuse(2, 3)``. In the identity
    picture the fields are chain indices instead of lengths.
    """

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    def __repr__(self) -> str:
        return f"Fuse({self.a},{self.b})"


@dataclass(frozen=True)
class Stop:
    """Do nothing. Only valid when at most one chain remains."""

    def __repr__(self) -> str:
        return "Stop"


STOP = Stop()

Action = Fuse | Stop


@dataclass(frozen=True)
class Configuration:
    """Anonymous multiset of chain lengths.

    ``items`` holds ``(length, count)`` pairs, strictly increasing in
    length, with every count >= 1. The empty configuration (total
    annihilation) is ``Configuration()``.
    """

    items: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        prev = 0
        for length, count in self.items:
            if length <= prev:
                raise ValueError(f"lengths must be strictly increasing: {self.items}")
            if count < 1:
                raise ValueError(f"counts must be positive: {self.items}")
            prev = length

    @classmethod
    def from_counts(cls, counts: Mapping[int, int]) -> "Configuration":
        return cls(tuple(sorted((k, n) for k, n in counts.items() if n > 0)))

    @classmethod
    def from_lengths(cls, lengths: Iterable[int]) -> "Configuration":
        counts: dict[int, int] = {}
        for k in lengths:
            if k > 0:
                counts[k] = counts.get(k, 0) + 1
        return cls.from_counts(counts)

    @classmethod
    def single_chain(cls, length: int) -> "Configuration":
        """The configuration holding exactly one chain of the given length."""
        return cls(((length, 1),))

    @classmethod
    def epr_pairs(cls, n: int) -> "Configuration":
        """n chains of length 1, the canonical starting configuration."""
        return cls(((1, n),)) if n else cls()

    @property
    def total_length(self) -> int:
        """Total number of edges."""
        return sum(k * n for k, n in self.items)

    @property
    def vertex_count(self) -> int:
        """Total number of vertices; a chain of length k has k + 1."""
        return sum(n * (k + 1) for k, n in self.items)

    @property
    def chain_count(self) -> int:
        return sum(n for _, n in self.items)

    @property
    def is_terminal(self) -> bool:
        """True when no further fusion is possible (at most one chain)."""
        return self.chain_count <= 1

    def count(self, length: int) -> int:
        for k, n in self.items:
            if k == length:
                return n
        return 0

    def lengths(self) -> tuple[int, ...]:
        """Distinct occupied lengths, ascending."""
        return tuple(k for k, _ in self.items)

    def counts(self) -> dict[int, int]:
        return dict(self.items)

    def add(self, length: int, n: int = 1) -> "Configuration":
        counts = self.counts()
        counts[length] = counts.get(length, 0) + n
        if counts[length] < 0:
            raise ValueError(f"cannot remove {abs(n)} chains of length {length}")
        return Configuration.from_counts(counts)

    def fusion_pairs(self) -> Iterator[tuple[int, int]]:
        """All feasible unordered length pairs (a, b) with a <= b."""
        for i, (k1, n1) in enumerate(self.items):
            if n1 >= 2:
                yield (k1, k1)
            for k2, _ in self.items[i + 1:]:
                yield (k1, k2)

    def fuse(self, a: int, b: int, outcome: str) -> "Configuration":
        """Apply one fusion attempt to chains of lengths ``a`` and ``b``.

        Raises :class:`InvalidFusionError` when the requested chains are
        not available (if ``a == b`` two such chains are required).
        """
        need_two = a == b
        if self.count(a) < (2 if need_two else 1) or (not need_two and self.count(b) < 1):
            raise InvalidFusionError(f"no chains of lengths ({a},{b}) in {self}")
        return Configuration(_fuse_items(self.items, a, b, outcome == SUCCESS))

    def __str__(self) -> str:
        return canonical_key(self) or "(empty)"


def _fuse_items(
    items: tuple[tuple[int, int], ...], a: int, b: int, success: bool
) -> tuple[tuple[int, int], ...]:
    """Elementary rule on raw (length, count) tuples; no availability check."""
    counts = dict(items)
    counts[a] -= 1
    counts[b] = counts.get(b, 0) - 1
    if success:
        counts[a + b] = counts.get(a + b, 0) + 1
    else:
        if a > 1:
            counts[a - 1] = counts.get(a - 1, 0) + 1
        if b > 1:
            counts[b - 1] = counts.get(b - 1, 0) + 1
    return tuple(sorted((k, n) for k, n in counts.items() if n > 0))


@dataclass(frozen=True)
class IdentityConfiguration:
    """Ordered list of chain lengths (the identity picture)."""

    chains: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if any(k < 1 for k in self.chains):
            raise ValueError(f"chain lengths must be positive: {self.chains}")

    @classmethod
    def from_configuration(cls, config: Configuration) -> "IdentityConfiguration":
        """Deterministic lineup: chains sorted ascending."""
        out: list[int] = []
        for k, n in config.items:
            out.extend([k] * n)
        return cls(tuple(out))

    @classmethod
    def epr_pairs(cls, n: int) -> "IdentityConfiguration":
        return cls((1,) * n)

    @property
    def total_length(self) -> int:
        return sum(self.chains)

    @property
    def vertex_count(self) -> int:
        return sum(k + 1 for k in self.chains)

    @property
    def chain_count(self) -> int:
        return len(self.chains)

    def to_configuration(self) -> Configuration:
        return Configuration.from_lengths(self.chains)

    def fuse_at(self, i: int, j: int, outcome: str) -> "IdentityConfiguration":
        """Fuse the chains at positions ``i`` and ``j``; destroyed chains
        are pruned, so surviving chains are renumbered."""
        n = len(self.chains)
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise InvalidFusionError(f"bad chain indices ({i},{j}) for {n} chains")
        i, j = min(i, j), max(i, j)
        out = list(self.chains)
        if outcome == SUCCESS:
            out[i] = out[i] + out[j]
            del out[j]
        else:
            out[i] -= 1
            out[j] -= 1
            out = [k for k in out if k > 0]
        return IdentityConfiguration(tuple(out))


def canonical_key(config: Configuration) -> str:
    """Injective text encoding: ``"1^2,3^1"``; the empty configuration
    encodes as the empty string. Used in persisted tables and CLI I/O."""
    return ",".join(f"{k}^{n}" for k, n in config.items)


def key_from_counts(counts: Mapping[int, int]) -> str:
    return ",".join(f"{k}^{counts[k]}" for k in sorted(counts) if counts[k] > 0)


def parse_key(key: str) -> Configuration:
    if not key:
        return Configuration()
    items = []
    for part in key.split(","):
        k, _, n = part.partition("^")
        items.append((int(k), int(n)))
    return Configuration(tuple(items))


def _partitions(total: int, max_part: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Integer partitions of ``total`` with parts <= max_part, as sorted
    (part, multiplicity) tuples. Tails recurse on strictly smaller parts,
    so the tuples come out sorted by construction."""
    if total == 0:
        yield ()
        return
    for part in range(min(total, max_part), 0, -1):
        mult = 1
        rest = total - part
        while rest >= 0:
            for tail in _partitions(rest, part - 1):
                yield tail + ((part, mult),)
            mult += 1
            rest -= part


def enumerate_configurations(max_total_length: int) -> Iterator[Configuration]:
    """Yield every configuration with total_length <= the given bound,
    exactly once, in non-decreasing vertex-count order (ties broken by
    canonical key). Dependencies of the quality recursion always precede
    their dependents in this order."""
    levels: dict[int, list[Configuration]] = {}
    for total in range(max_total_length + 1):
        for items in _partitions(total, total):
            config = Configuration(items)
            levels.setdefault(config.vertex_count, []).append(config)
    for v in sorted(levels):
        for config in sorted(levels[v], key=canonical_key):
            yield config
