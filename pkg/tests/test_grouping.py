import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tribegames.core import TribePartition, ValidationError
from tribegames.equilibria import UNILATERAL, compute_optimum, compute_pot, enumerate_equilibria, is_equilibrium
from tribegames.grouping import (
    GroupingSpec,
    Variant,
    build_grouping_game,
    gen_k_family,
    random_grouping_spec,
    relabel_cliques,
)
from tribegames.sweeps import grouping_sweep


def _utility_by_hand(spec, profile):
    n = spec.player_count
    return [sum((spec.weights[j][i] for j in range(n) if j != i and profile[j] == profile[i]), Fraction(0))
            for i in range(n)]


specs = st.builds(
    lambda seed, n, k: random_grouping_spec(np.random.default_rng(seed), n, k),
    st.integers(0, 10**6), st.integers(2, 4), st.integers(2, 3),
)


@given(specs)
def test_payoffs_and_table_match_definition(spec):
    game = build_grouping_game(spec)
    table = game.exact_table()
    for idx, profile in enumerate(game.profiles()):
        expected = _utility_by_hand(spec, profile)
        assert list(game.payoffs(profile)) == expected
        assert [table.entry(idx, i) for i in range(game.player_count)] == expected


@given(specs)
def test_everyone_together_is_optimal(spec):
    game = build_grouping_game(spec)
    _, value = compute_optimum(game)
    assert value == spec.total_weight()
    assert sum(game.payoffs((0,) * spec.player_count)) == value


@settings(max_examples=30)
@given(specs, st.data())
def test_relabelling_cliques_preserves_welfare_and_stability(spec, data):
    game = build_grouping_game(spec)
    perm = data.draw(st.permutations(range(spec.clique_count)))
    partition = TribePartition.canonical(data.draw(
        st.lists(st.integers(0, 2), min_size=spec.player_count, max_size=spec.player_count)))
    for profile in game.profiles():
        moved = relabel_cliques(profile, perm)
        assert sum(game.payoffs(profile)) == sum(game.payoffs(moved))
        assert is_equilibrium(game, partition, profile)[0] == is_equilibrium(game, partition, moved)[0]


def test_spec_validation():
    with pytest.raises(ValidationError):
        GroupingSpec(2, ((1,),))
    with pytest.raises(ValidationError):
        GroupingSpec(2, ((0, -1), (0, 0)))
    with pytest.raises(ValidationError):
        GroupingSpec(1, ((0, 1), (1, 0)))
    with pytest.raises(ValidationError):
        GroupingSpec(2, ((0, 1),))


def test_asymmetric_weights_are_directed():
    spec = GroupingSpec(2, ((0, 3), (1, 0)))
    game = build_grouping_game(spec)
    assert game.payoffs((0, 0)) == (Fraction(1), Fraction(3))


@pytest.mark.parametrize("k", [2, 3])
def test_k_family_welfare_bookkeeping(k):
    spec, _, profile = gen_k_family(k, Variant.TRIBAL)
    game = build_grouping_game(spec)
    assert sum(game.payoffs(profile)) == 2 * k
    assert compute_optimum(game)[1] == 4 * k * (k - 1) + 2 * k


def test_k_family_tribal_ratio_over_all_partitions_k3():
    spec, partition, profile = gen_k_family(3, Variant.TRIBAL)
    game = build_grouping_game(spec)
    assert compute_pot(game, [partition]).ratio == 5
    assert profile in {r.profile for r in enumerate_equilibria(game, partition)}


def test_sweep_is_seeded():
    a = grouping_sweep(10, 7)
    b = grouping_sweep(10, 7)
    assert {k: v.to_json() for k, v in a.items()} == {k: v.to_json() for k, v in b.items()}


def test_k3_sweep_respects_bound():
    stats = grouping_sweep(25, 11, k=3)
    assert all(s.passed for s in stats.values())
    assert stats["pot_all"].max_ratio <= 5
