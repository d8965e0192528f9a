import math
from fractions import Fraction

import pytest

from cluster_forge import bounds
from cluster_forge.bounds import (
    CertificateMismatch,
    HypothesisViolated,
    LinearProgramInstance,
    analytic_upper_bound,
    combine_lower_bound,
    general_ps_initial_length,
    greed_asymptotic,
    greed_closed_form,
    greed_closed_form_float,
    inverse_resource_bounds,
    lp_attempts_bound,
    lp_certificate,
    lp_closed_form,
    modesty_lower_bound,
    modesty_quality_range,
    razor_quality,
    razor_upper_bound,
    simplex_minimize,
    static_lower_bound,
)
from cluster_forge.configuration import Configuration
from cluster_forge.exact import cached_quality_table, event_tree_oracle, strategy_quality
from cluster_forge.strategies import GREED, MODESTY, STATIC


def epr(n):
    return Configuration.epr_pairs(n)


class TestRazor:
    def test_uncapped_recovers_exact_optimum(self):
        table = cached_quality_table(8)
        for n in (4, 6, 8):
            quality, attempts = razor_quality(n, n)
            assert quality == table.quality(epr(n))
            assert attempts == n - table.quality(epr(n))

    def test_four_pairs_r2(self):
        # hand-checkable three-action walk on the quarter plane
        assert razor_quality(4, 2) == (Fraction(11, 8), Fraction(19, 8))

    def test_razor_attempts_bound_exact_attempts(self):
        table = cached_quality_table(12)
        for n in (4, 8, 12):
            exact_attempts = n - table.quality(epr(n))
            for r in (2, 3):
                _, razor_attempts = razor_quality(n, r)
                assert razor_attempts <= exact_attempts

    def test_upper_bound_dominates_quality(self):
        table = cached_quality_table(20)
        for n in range(2, 21):
            q = table.quality(epr(n))
            for r in (2, 3):
                assert razor_upper_bound(n, r) >= q

    def test_monotone_in_r(self):
        prev_ub = None
        prev_q = None
        prev_t = None
        for r in range(2, 6):
            quality, attempts = razor_quality(12, r)
            ub = razor_upper_bound(12, r)
            if prev_ub is not None:
                assert ub <= prev_ub
                assert quality >= prev_q
                assert attempts >= prev_t
            prev_ub, prev_q, prev_t = ub, quality, attempts

    def test_rejects_tiny_r(self):
        with pytest.raises(ValueError):
            razor_quality(4, 1)

    def test_state_type(self):
        from cluster_forge.bounds import RazorState

        state = RazorState.initial(6, 2)
        assert state.counts == (6, 0)
        assert state.total_edges == 6
        assert state.vertex_count == 12
        assert RazorState.initial(0, 3).chain_count == 0
        with pytest.raises(ValueError):
            RazorState((1, -1))


class TestLinearProgram:
    def test_instance_matrix(self):
        inst = LinearProgramInstance.for_pairs(7)
        assert inst.cost == (1, 1, 1)
        assert inst.matrix[0] == (-2, Fraction(1, 2))
        assert inst.matrix[1] == (Fraction(-1, 2), Fraction(-1, 2))
        assert inst.matrix[2] == (1, Fraction(-3, 2))
        assert inst.rhs == (-6, 1)

    def test_closed_form_values(self):
        assert lp_attempts_bound(1) == 0
        assert lp_attempts_bound(5) == 2
        assert lp_attempts_bound(6) == Fraction(14, 5)

    def test_simplex_certificate_closed_form_agree(self):
        for n in range(1, 61):
            assert lp_attempts_bound(n) == lp_closed_form(n)

    def test_certificates_are_tight_for_large_n(self):
        x, y = lp_certificate(100)
        assert sum(x) == lp_closed_form(100)
        assert y == (Fraction(4, 5), Fraction(6, 5))

    def test_simplex_detects_unbounded(self):
        with pytest.raises(CertificateMismatch, match="unbounded"):
            simplex_minimize([Fraction(-1)], [[Fraction(-1)]], [Fraction(0)])

    def test_simplex_standalone(self):
        value, x = simplex_minimize(
            [Fraction(2), Fraction(3)],
            [[Fraction(-1), Fraction(0)], [Fraction(0), Fraction(-1)], [Fraction(-1), Fraction(-1)]],
            [Fraction(-1), Fraction(-1), Fraction(-3)],
        )
        # x, y >= 1 and x + y >= 3, minimize 2x + 3y -> x = 2, y = 1
        assert value == 7
        assert x == (2, 1)

    def test_chain_of_relaxations(self):
        table = cached_quality_table(20)
        for n in range(2, 21):
            _, razor_attempts = razor_quality(n, 2)
            exact_attempts = n - table.quality(epr(n))
            assert lp_attempts_bound(n) <= razor_attempts <= exact_attempts


class TestAnalyticUpperBound:
    def test_formula(self):
        assert analytic_upper_bound(10) == 4
        assert analytic_upper_bound(6) == Fraction(16, 5)

    def test_domain(self):
        with pytest.raises(ValueError, match="lp_attempts_bound"):
            analytic_upper_bound(5)

    def test_dominates_exact_quality(self):
        table = cached_quality_table(20)
        for n in range(6, 21):
            assert table.quality(epr(n)) <= analytic_upper_bound(n)


class TestCombineLowerBound:
    def test_single_part(self):
        assert combine_lower_bound([Fraction(7, 2)]) == Fraction(7, 2)

    def test_two_chains_versus_exact(self):
        for a, b in [(3, 4), (5, 5), (2, 8)]:
            bound = combine_lower_bound([Fraction(a), Fraction(b)])
            assert bound == a + b - 2
            assert bound <= cached_quality_table(16).quality(Configuration.from_lengths([a, b]))

    def test_eight_blocks(self):
        assert combine_lower_bound([Fraction(649, 256)] * 8) == Fraction(201, 32)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            combine_lower_bound([])


class TestModestyLowerBound:
    def test_alpha_at_block_eight(self):
        values = modesty_quality_range(16)
        assert (values[8] - 2) / 8 == Fraction(137, 2048)
        bound = modesty_lower_bound(8, 8, values)
        assert bound == Fraction(649, 256)

    def test_bound_below_exact_quality(self):
        values = modesty_quality_range(16)
        table = cached_quality_table(20)
        for n in range(8, 21):
            assert modesty_lower_bound(n, 8, values) <= table.quality(epr(n))

    def test_hypothesis_violation_reported(self):
        values = dict(modesty_quality_range(16))
        values[11] = Fraction(2)  # sabotage one entry
        with pytest.raises(HypothesisViolated) as err:
            modesty_lower_bound(20, 8, values)
        assert err.value.failing == [11]

    def test_missing_values_rejected(self):
        with pytest.raises(ValueError, match="missing"):
            modesty_lower_bound(20, 8, {8: Fraction(649, 256)})

    def test_needs_n_at_least_n0(self):
        with pytest.raises(ValueError):
            modesty_lower_bound(4, 8, modesty_quality_range(16))

    def test_range_matches_engine(self):
        values = modesty_quality_range(12)
        for n in range(1, 13):
            assert values[n] == strategy_quality(MODESTY, epr(n))

    def test_even_lattice_mode(self):
        values = modesty_quality_range(16)
        assert modesty_lower_bound(20, 8, values, step=2) == modesty_lower_bound(20, 8, values)
        with pytest.raises(ValueError, match="parity"):
            modesty_lower_bound(21, 8, values, step=2)
        with pytest.raises(ValueError, match="even anchor"):
            modesty_lower_bound(21, 7, modesty_quality_range(14), step=2)


class TestStaticLowerBound:
    def test_values(self):
        assert static_lower_bound(16) == Fraction(137, 128) + 2
        assert static_lower_bound(64) == Fraction(137, 32) + 2

    def test_wrong_form_rejected(self):
        for bad in (4, 7, 12, 24):
            with pytest.raises(ValueError):
                static_lower_bound(bad)

    def test_exact_static_beats_bound(self):
        for n in (8, 16):
            assert strategy_quality(STATIC, epr(n)) >= static_lower_bound(n)


class TestGreedForms:
    def test_small_values_match_oracle(self):
        for n in range(1, 11):
            oracle = event_tree_oracle(GREED, epr(n))
            assert greed_closed_form(n) == oracle.mean_length

    def test_parity_pairs_odd_with_next(self):
        # flat steps pair each odd size with its successor, never an even
        # one with its successor: 1 = value(2) != value(3) = 3/2
        for n in range(3, 14, 2):
            assert greed_closed_form(n) == greed_closed_form(n + 1)
        for n in range(2, 14, 2):
            assert greed_closed_form(n) != greed_closed_form(n + 1)

    def test_float_form_matches_exact(self):
        for n in (5, 40, 200):
            exact = float(greed_closed_form(n))
            assert greed_closed_form_float(n) == pytest.approx(exact, rel=1e-12)

    def test_asymptotic_ratio(self):
        ratio = greed_closed_form_float(10 ** 4) / greed_asymptotic(10 ** 4)
        assert abs(ratio - 1) < 0.02

    def test_asymptotic_value(self):
        assert greed_asymptotic(8) == pytest.approx(math.sqrt(16 / math.pi))


class TestSmallHelpers:
    def test_initial_length(self):
        assert general_ps_initial_length(Fraction(1, 2)) == 2
        assert general_ps_initial_length(1) == 0
        assert general_ps_initial_length(Fraction(1, 3)) == 4

    def test_inverse_resource_bounds(self):
        sufficient, insufficient = inverse_resource_bounds(100, Fraction(1, 5), Fraction(1, 2))
        assert sufficient == Fraction(550)
        assert insufficient == Fraction(450)

    def test_inverse_requires_positive_epsilon(self):
        with pytest.raises(ValueError):
            inverse_resource_bounds(100, Fraction(1, 5), 0)

    def test_achievable_rate_value(self):
        sufficient, _ = inverse_resource_bounds(1.0, 0.153336, 0.08)
        assert sufficient == pytest.approx(6.6, abs=0.01)
