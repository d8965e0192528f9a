import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cluster_forge.configuration import (
    FAILURE,
    SUCCESS,
    Configuration,
    Fuse,
    IdentityConfiguration,
    InvalidFusionError,
    canonical_key,
    enumerate_configurations,
    parse_key,
)


def partition_count_oracle(n: int) -> list[int]:
    """Independent partition counts via the coin-change recurrence."""
    counts = [1] + [0] * n
    for part in range(1, n + 1):
        for total in range(part, n + 1):
            counts[total] += counts[total - part]
    return counts


def epr(n):
    return Configuration.epr_pairs(n)


class TestCounts:
    def test_total_length(self):
        assert Configuration().total_length == 0
        assert epr(4).total_length == 4
        assert Configuration.from_lengths([3, 2, 2]).total_length == 7

    def test_vertex_count(self):
        assert Configuration.single_chain(1).vertex_count == 2
        assert epr(4).vertex_count == 8
        assert Configuration.single_chain(3).vertex_count == 4

    def test_chain_count_and_terminal(self):
        assert Configuration().is_terminal
        assert Configuration.single_chain(5).is_terminal
        assert not epr(2).is_terminal
        assert Configuration.from_lengths([3, 2, 2]).chain_count == 3

    def test_validation(self):
        with pytest.raises(ValueError):
            Configuration(((2, 1), (1, 1)))  # not sorted
        with pytest.raises(ValueError):
            Configuration(((1, 0),))  # zero count


class TestFusionRule:
    def test_merge_two_pairs(self):
        assert epr(2).fuse(1, 1, SUCCESS) == Configuration.single_chain(2)

    def test_two_pairs_annihilate(self):
        assert epr(2).fuse(1, 1, FAILURE) == Configuration()

    def test_failure_loses_one_edge_each(self):
        start = Configuration.from_lengths([3, 2])
        assert start.fuse(3, 2, FAILURE) == Configuration.from_lengths([2, 1])

    def test_rejects_absent_chains(self):
        with pytest.raises(InvalidFusionError):
            epr(2).fuse(3, 1, SUCCESS)
        with pytest.raises(InvalidFusionError):
            Configuration.from_lengths([2, 1]).fuse(2, 2, SUCCESS)

    def test_fuse_is_unordered(self):
        assert Fuse(3, 2) == Fuse(2, 3)
        start = Configuration.from_lengths([3, 2])
        assert start.fuse(2, 3, SUCCESS) == start.fuse(3, 2, SUCCESS)


configurations = st.lists(st.integers(1, 8), min_size=0, max_size=8).map(
    Configuration.from_lengths
)


@st.composite
def config_with_pair(draw):
    config = draw(configurations.filter(lambda c: c.chain_count >= 2))
    pairs = list(config.fusion_pairs())
    return config, draw(st.sampled_from(pairs))


@given(config_with_pair(), st.sampled_from([SUCCESS, FAILURE]))
@settings(max_examples=200, deadline=None)
def test_fusion_invariants(config_pair, outcome):
    config, (a, b) = config_pair
    after = config.fuse(a, b, outcome)
    assert after.vertex_count < config.vertex_count
    assert after.total_length % 2 == config.total_length % 2
    if outcome == SUCCESS:
        assert after.total_length == config.total_length
        assert after.chain_count == config.chain_count - 1
    else:
        assert after.total_length == config.total_length - 2


class TestEnumeration:
    def test_zero(self):
        assert list(enumerate_configurations(0)) == [Configuration()]

    def test_small_count(self):
        assert len(list(enumerate_configurations(4))) == 12

    @pytest.mark.parametrize("n", [10, 20, 30])
    def test_count_matches_partition_oracle(self, n):
        expected = sum(partition_count_oracle(n))
        assert sum(1 for _ in enumerate_configurations(n)) == expected

    def test_unique_and_ordered(self):
        seen = set()
        last_v = -1
        for config in enumerate_configurations(9):
            assert config not in seen
            seen.add(config)
            assert config.vertex_count >= last_v
            last_v = config.vertex_count
            assert config.total_length <= 9

    def test_dependencies_precede(self):
        order = {c: i for i, c in enumerate(enumerate_configurations(8))}
        for config, position in order.items():
            for a, b in config.fusion_pairs():
                for outcome in (SUCCESS, FAILURE):
                    assert order[config.fuse(a, b, outcome)] < position


class TestCanonicalKey:
    def test_empty(self):
        assert canonical_key(Configuration()) == ""
        assert parse_key("") == Configuration()

    def test_text_form(self):
        config = Configuration.from_lengths([1, 1, 3])
        assert canonical_key(config) == "1^2,3^1"

    def test_same_multiset_same_key(self):
        assert canonical_key(Configuration.from_lengths([1, 1])) == canonical_key(epr(2))

    def test_distinct_multisets_distinct_keys(self):
        a = Configuration.from_lengths([2, 1])
        b = Configuration.single_chain(3)
        assert canonical_key(a) != canonical_key(b)

    def test_round_trip_over_small_space(self):
        for config in enumerate_configurations(12):
            assert parse_key(canonical_key(config)) == config


class TestIdentityConfiguration:
    def test_projection(self):
        ident = IdentityConfiguration((3, 1, 1))
        assert ident.to_configuration() == Configuration.from_lengths([1, 1, 3])
        assert ident.total_length == 5
        assert ident.vertex_count == 8

    def test_from_configuration_is_sorted(self):
        ident = IdentityConfiguration.from_configuration(Configuration.from_lengths([3, 1, 2]))
        assert ident.chains == (1, 2, 3)

    def test_fuse_at_success(self):
        ident = IdentityConfiguration((2, 3, 1))
        assert ident.fuse_at(0, 1, SUCCESS).chains == (5, 1)

    def test_fuse_at_failure_prunes_destroyed(self):
        ident = IdentityConfiguration((2, 1, 4))
        assert ident.fuse_at(1, 2, FAILURE).chains == (2, 3)
        assert ident.fuse_at(0, 1, FAILURE).chains == (1, 4)

    def test_fuse_at_rejects_bad_indices(self):
        ident = IdentityConfiguration((2, 1))
        with pytest.raises(InvalidFusionError):
            ident.fuse_at(0, 0, SUCCESS)
        with pytest.raises(InvalidFusionError):
            ident.fuse_at(0, 5, SUCCESS)


@given(st.lists(st.integers(1, 9), min_size=2, max_size=7), st.data())
@settings(max_examples=150, deadline=None)
def test_identity_projects_to_valid_configuration(lengths, data):
    ident = IdentityConfiguration(tuple(lengths))
    i = data.draw(st.integers(0, len(lengths) - 2))
    j = data.draw(st.integers(i + 1, len(lengths) - 1))
    outcome = data.draw(st.sampled_from([SUCCESS, FAILURE]))
    after = ident.fuse_at(i, j, outcome)
    projected = after.to_configuration()
    assert projected.total_length == after.total_length
    assert ident.to_configuration().fuse(lengths[i], lengths[j], outcome) == projected
