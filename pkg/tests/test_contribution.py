from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tribegames.core import StructuralError, TribePartition, ValidationError, social_welfare
from tribegames.equilibria import (
    COORDINATED,
    UNILATERAL,
    compute_optimum,
    compute_pot,
    is_equilibrium,
    pairwise,
)
from tribegames.contribution import (
    ContributionSpec,
    Edge,
    RewardPolynomial,
    allocation_sets,
    allocations_of,
    build_contribution_game,
    compositions,
    gen_additive_chain,
    gen_altruistic_square,
    gen_convex_path,
    is_tight,
    profile_from_allocations,
    random_contribution_spec,
    square_light_profile,
)
from tribegames.sweeps import contribution_sweep


def _welfare_by_hand(spec, profile):
    allocs = allocations_of(spec, profile)
    total = Fraction(0)
    for k, e in enumerate(spec.edges):
        total += 2 * e.reward(allocs[e.u].get(k, 0), allocs[e.v].get(k, 0))
    return total


def test_polynomial_validation():
    with pytest.raises(ValidationError):
        RewardPolynomial(((1, 0, 0),))
    with pytest.raises(ValidationError):
        RewardPolynomial(((1, 2, 1),))
    with pytest.raises(ValidationError):
        RewardPolynomial(((-1, 1, 1),))
    f = RewardPolynomial(((1, 1, 1), (2, 1, 1)))
    assert f.terms == ((Fraction(3), 1, 1),)
    assert RewardPolynomial.additive(2).is_additive()
    assert RewardPolynomial.product(1).is_coordinate_convex()
    assert not RewardPolynomial.additive(1).is_coordinate_convex()
    assert RewardPolynomial.product(3)(Fraction(1, 2), 2) == 3
    assert RewardPolynomial.additive(1).scaled(2) == RewardPolynomial.additive(2)


def test_spec_validation():
    f = RewardPolynomial.product()
    with pytest.raises(ValidationError):
        ContributionSpec(2, (Edge(0, 0, f),), (1, 1))
    with pytest.raises(ValidationError):
        ContributionSpec(2, (Edge(0, 1, f), Edge(1, 0, f)), (1, 1))
    with pytest.raises(StructuralError):
        ContributionSpec(2, (Edge(0, 2, f),), (1, 1))
    with pytest.raises(ValidationError):
        ContributionSpec(2, (Edge(0, 1, f),), (Fraction(1, 2), 1), grid=1)
    with pytest.raises(StructuralError):
        ContributionSpec(2, (Edge(0, 1, f),), (1,))


def test_compositions():
    assert compositions(2, 2) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)]
    assert compositions(0, 3) == [(0, 0, 0)]
    assert compositions(3, 0) == [()]


specs = st.builds(
    lambda seed, additive: random_contribution_spec(np.random.default_rng(seed), additive=additive,
                                                    max_profiles=3000),
    st.integers(0, 10**6), st.booleans(),
)


@settings(max_examples=30)
@given(specs)
def test_table_matches_direct_evaluation(spec):
    game = build_contribution_game(spec)
    table = game.exact_table()
    for idx, profile in enumerate(game.profiles()):
        payoffs = game.payoffs(profile)
        assert [table.entry(idx, i) for i in range(game.player_count)] == list(payoffs)
        assert sum(payoffs) == _welfare_by_hand(spec, profile)


@settings(max_examples=20)
@given(st.integers(0, 10**6), st.booleans())
def test_grid_refinement_never_lowers_the_optimum(seed, additive):
    spec = random_contribution_spec(np.random.default_rng(seed), additive=additive, grids=(1,), max_profiles=400)
    coarse = compute_optimum(build_contribution_game(spec))[1]
    fine = compute_optimum(build_contribution_game(spec.with_grid(2)))[1]
    assert fine >= coarse


def test_allocation_round_trip_and_tightness():
    spec, _ = gen_additive_chain(grid=2)
    profile = profile_from_allocations(spec, [{}, {0: Fraction(1, 2), 1: Fraction(1, 2)}, {}])
    assert allocations_of(spec, profile)[1] == {0: Fraction(1, 2), 1: Fraction(1, 2)}
    assert not is_tight(spec, profile)
    assert is_tight(spec, profile_from_allocations(spec, [{}, {1: 1}, {}]))
    with pytest.raises(StructuralError):
        profile_from_allocations(spec, [{1: 1}, {}, {}])
    with pytest.raises(ValidationError):
        profile_from_allocations(spec, [{}, {0: 1, 1: 1}, {}])
    assert len(allocation_sets(spec)[1]) == 6


def test_adjacency_is_edge_set():
    spec, _ = gen_convex_path(Fraction(1, 100))
    game = build_contribution_game(spec)
    assert game.adjacency == frozenset((k, k + 1) for k in range(5))


@pytest.mark.parametrize("grid", [1, 2])
def test_additive_chain_constant_partition_is_efficient(grid):
    spec, _ = gen_additive_chain(grid)
    game = build_contribution_game(spec)
    assert compute_pot(game, [TribePartition.constant(3)]).ratio == 1


def test_convex_path_profile_is_stable_at_grid_two():
    spec, partition = gen_convex_path(Fraction(1, 100), 2)
    game = build_contribution_game(spec)
    profile = profile_from_allocations(spec, [{0: 1}, {0: 1}, {2: 1}, {2: 1}, {4: 1}, {4: 1}])
    for concept in (UNILATERAL, pairwise(), COORDINATED):
        assert is_equilibrium(game, partition, profile, concept)[0]
    assert social_welfare(game, profile) == Fraction(106, 100)


def test_square_light_profile_blocked_for_selfish_pairs():
    spec, _ = gen_altruistic_square(Fraction(1, 10))
    game = build_contribution_game(spec)
    ok, witness = is_equilibrium(game, TribePartition.singleton(4), square_light_profile(spec), pairwise())
    assert not ok and len(witness.players) == 2


def test_additive_sweep_small():
    stats = contribution_sweep(12, 5, additive=True)
    assert all(s.passed for s in stats.values())
    assert stats["constant"].max_ratio in (None, 1)
