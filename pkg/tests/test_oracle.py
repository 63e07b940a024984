"""Tests for the non-crossing partition moment oracle."""

from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projects.free_spectra.algorithms.oracle import (
    CumulantSpec,
    expand_power,
    free_cumulants_to_moments,
    moments_to_free_cumulants,
    non_crossing_partitions,
    poly_moment,
    poly_moments,
    word_moment,
    word_moment_enumerated,
)
from projects.free_spectra.errors import BudgetExceededError
from projects.free_spectra.models.measures import Atomic, MarchenkoPastur, Semicircle
from projects.free_spectra.models.ncpoly import parse


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


class TestMomentCumulant:
    def test_semicircle_moments_are_catalan(self):
        moments = free_cumulants_to_moments([0, 1, 0, 0, 0, 0, 0, 0])
        assert moments == [1, 0, 1, 0, 2, 0, 5, 0, 14]

    def test_free_poisson_moments(self):
        # unit cumulants count all non-crossing partitions
        assert free_cumulants_to_moments([1, 1, 1, 1]) == [1, 1, 2, 5, 14]

    def test_bernoulli_cumulants(self):
        assert moments_to_free_cumulants([1, 0, 1, 0, 1]) == [0, 1, 0, -1]

    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=8))
    def test_inverse_pair(self, kappa):
        assert moments_to_free_cumulants(free_cumulants_to_moments(kappa)) == kappa

    def test_exact_arithmetic(self):
        moments = free_cumulants_to_moments([Fraction(1, 2), Fraction(1, 3)])
        assert moments == [1, Fraction(1, 2), Fraction(1, 3) + Fraction(1, 4)]


class TestWords:
    @pytest.mark.parametrize(
        "word, expected",
        [((1, 2, 1, 2), 0), ((1, 2, 2, 1), 1), ((1, 1, 1, 1), 2), ((1,), 0), ((), 1), ((1, 1, 2, 2), 1)],
    )
    def test_semicircular_words(self, word, expected):
        assert word_moment(word, CumulantSpec.semicircular(2)) == expected

    @pytest.mark.parametrize("n", range(0, 8))
    def test_partition_count_is_catalan(self, n):
        assert sum(1 for _ in non_crossing_partitions(n)) == catalan(n)

    def test_partitions_are_non_crossing(self):
        for partition in non_crossing_partitions(6):
            assert sorted(i for block in partition for i in block) == list(range(6))
            for a in partition:
                for b in partition:
                    if a is b:
                        continue
                    crossing = any(
                        i < k < j < l for i in a for j in a for k in b for l in b
                    )
                    assert not crossing

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(1, 3), max_size=8))
    def test_recursion_matches_enumeration(self, word):
        cumulants = CumulantSpec(((0, 1, 0, 2, 1, 0, 3, 1), (1, 1, 1, 1, 1, 1, 1, 1), (2, -1, 0, 1, 0, 0, 1, 0)))
        assert word_moment(word, cumulants) == word_moment_enumerated(word, cumulants)

    def test_rejects_unknown_variable(self):
        with pytest.raises(ValueError):
            word_moment((1, 3), CumulantSpec.semicircular(2))

    def test_missing_cumulant_order(self):
        with pytest.raises(BudgetExceededError):
            word_moment((1, 1, 1, 1), CumulantSpec(((0, 1),)))

    def test_word_budget(self, config_env):
        config_env(ORACLE_MAX_WORD=4)
        with pytest.raises(BudgetExceededError):
            word_moment((1,) * 6, CumulantSpec.semicircular(1))


class TestPolynomialMoments:
    def test_anticommutator(self, anticommutator):
        assert poly_moments(anticommutator, CumulantSpec.semicircular(2), 4) == pytest.approx([0, 2, 0, 10])

    def test_square_of_semicircular(self):
        p = parse("x1^2", 1)
        assert poly_moments(p, CumulantSpec.semicircular(1), 4) == pytest.approx([1, 2, 5, 14])

    def test_sum_of_semicirculars(self):
        # variance adds under free convolution
        p = parse("x1 + x2", 2)
        assert poly_moments(p, CumulantSpec.semicircular(2), 4) == pytest.approx([0, 2, 0, 8])

    def test_zero_power(self, anticommutator):
        assert poly_moment(anticommutator, CumulantSpec.semicircular(2), 0) == 1.0

    def test_too_few_cumulants(self, anticommutator):
        with pytest.raises(ValueError):
            poly_moment(anticommutator, CumulantSpec.semicircular(1), 2)

    def test_expand_power(self):
        expanded = expand_power(parse("x1 + x2", 2), 2)
        assert expanded == {(1, 1): 1, (1, 2): 1, (2, 1): 1, (2, 2): 1}

    def test_expand_budget(self, anticommutator):
        with pytest.raises(BudgetExceededError):
            expand_power(anticommutator, 8, max_words=100)

    def test_poly_budget_from_config(self, anticommutator, config_env):
        config_env(ORACLE_MAX_WORDS=10)
        with pytest.raises(BudgetExceededError):
            poly_moment(anticommutator, CumulantSpec.semicircular(2), 4)


class TestFromMeasures:
    def test_closed_forms(self):
        spec = CumulantSpec.from_measures((Semicircle(0.0, 1.0), MarchenkoPastur(1.0, 1.0)), order=4)
        assert spec.cumulants == ((0, 1, 0, 0), (1, 1, 1, 1))

    def test_bernoulli_by_recursion(self):
        spec = CumulantSpec.from_measures((Atomic((-1.0, 1.0), (0.5, 0.5)),), order=4)
        assert spec.cumulants == ((0, 1, 0, -1),)

    def test_bernoulli_sum(self):
        # the free sum of two symmetric Bernoullis is the arcsine law on [-2, 2]
        bernoulli = Atomic((-1.0, 1.0), (0.5, 0.5))
        spec = CumulantSpec.from_measures((bernoulli, bernoulli), order=4)
        assert poly_moments(parse("x1 + x2", 2), spec, 4) == pytest.approx([0, 2, 0, 6])

    def test_combine(self):
        spec = CumulantSpec.semicircular(1, order=4).combine(CumulantSpec.free_poisson(order=4))
        assert spec.n_vars == 2
        assert spec.order == 4
