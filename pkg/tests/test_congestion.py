import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import naive_equilibria, naive_optimum
from tribegames.core import StructuralError, TribePartition, ValidationError, social_welfare
from tribegames.equilibria import DynamicsStatus, best_response_dynamics, compute_optimum, is_equilibrium
from tribegames.congestion import (
    Arc,
    CongestionSpec,
    RoutingSpec,
    SmoothnessParams,
    build_congestion_game,
    build_routing_game,
    check_smoothness,
    gen_gk_tree,
    load_balancing_to_routing,
    quad_inequality_scan,
    quad_margin,
    random_congestion_spec,
    routing_to_congestion,
    simple_paths,
    smoothness_lhs,
    smoothness_pot_bound,
    social_cost_from_loads,
)
from tribegames.partitions import sweep_partitions

LEMMA = SmoothnessParams(Fraction(8, 3), Fraction(1, 3))

specs = st.builds(lambda seed: random_congestion_spec(np.random.default_rng(seed), max_players=3, max_resources=3),
                  st.integers(0, 10**6))


@st.composite
def spec_and_partition(draw):
    spec = draw(specs)
    labels = draw(st.lists(st.integers(0, 2), min_size=spec.player_count, max_size=spec.player_count))
    return spec, TribePartition.canonical(labels)


@given(specs)
def test_costs_match_loads(spec):
    game = build_congestion_game(spec)
    table = game.exact_table()
    for idx, profile in enumerate(game.profiles()):
        loads = spec.loads(profile)
        costs = [sum((spec.alpha[e] * loads[e] for e in spec.strategies[i][s]), Fraction(0))
                 for i, s in enumerate(profile)]
        assert list(game.payoffs(profile)) == costs
        assert [table.entry(idx, i) for i in range(game.player_count)] == costs
        assert social_welfare(game, profile) == social_cost_from_loads(spec, profile)


@given(spec_and_partition())
def test_tribe_loads_sum_to_loads(sp):
    spec, partition = sp
    game = build_congestion_game(spec)
    for profile in game.profiles():
        per_tribe = spec.loads(profile, partition)
        assert [sum(col) for col in zip(*per_tribe)] == spec.loads(profile)


def test_spec_validation():
    with pytest.raises(ValidationError):
        CongestionSpec((Fraction(0),), ((frozenset([0]),),))
    with pytest.raises(StructuralError):
        CongestionSpec((Fraction(1),), ((frozenset([1]),),))
    with pytest.raises(ValidationError):
        CongestionSpec((Fraction(1),), ((),))
    with pytest.raises(ValidationError):
        SmoothnessParams(1, 1)


# ---------------------------------------------------------------------------
# smoothness


def _slack_by_hand(game, partition, params, s, sp):
    return (params.lam * social_welfare(game, sp) + params.mu * social_welfare(game, s)
            - smoothness_lhs(game, partition, s, sp))


@settings(max_examples=30)
@given(spec_and_partition())
def test_exhaustive_smoothness_matches_pairwise_oracle(sp):
    spec, partition = sp
    game = build_congestion_game(spec)
    profiles = list(game.profiles())
    slacks = {(s, t): _slack_by_hand(game, partition, LEMMA, s, t) for s in profiles for t in profiles}
    result = check_smoothness(spec, partition, LEMMA)
    assert result.worst_slack == min(slacks.values())
    assert slacks[result.witness] == result.worst_slack
    assert result.holds and result.pairs_checked == len(profiles) ** 2


@settings(max_examples=30)
@given(spec_and_partition(), st.data())
def test_smoothness_is_invariant_under_resource_relabelling(sp, data):
    spec, partition = sp
    perm = data.draw(st.permutations(range(spec.resource_count)))
    a = check_smoothness(spec, partition, LEMMA)
    b = check_smoothness(spec.relabelled(perm), partition, LEMMA)
    assert a.worst_slack == b.worst_slack


@settings(max_examples=20)
@given(spec_and_partition())
def test_smooth_instances_have_equilibria_within_four(sp):
    spec, partition = sp
    game = build_congestion_game(spec)
    assert check_smoothness(spec, partition, LEMMA).holds
    optimum = naive_optimum(game)
    for profile in naive_equilibria(game, partition, "unilateral"):
        assert social_welfare(game, profile) <= 4 * optimum


def test_bound_from_parameters():
    assert smoothness_pot_bound(LEMMA) == 4
    assert smoothness_pot_bound(SmoothnessParams(Fraction(5, 3), Fraction(1, 3))) == Fraction(5, 2)


def test_unit_parameters_fail_with_witness():
    # each player may share resource 0 or sit alone on its private resource
    one = Fraction(1)
    spec = CongestionSpec((one, one, one), ((frozenset([0]), frozenset([1])), (frozenset([0]), frozenset([2]))))
    result = check_smoothness(spec, TribePartition.singleton(2), SmoothnessParams(1, 0))
    assert not result.holds and result.worst_slack == -1
    s, sp = result.witness
    game = build_congestion_game(spec)
    assert _slack_by_hand(game, TribePartition.singleton(2), SmoothnessParams(1, 0), s, sp) == -1


def test_sampled_mode_is_seeded():
    tree = gen_gk_tree(2)
    a = check_smoothness(tree.spec, tree.partition, LEMMA, sample=200, seed=4)
    b = check_smoothness(tree.spec, tree.partition, LEMMA, sample=200, seed=4)
    assert (a.worst_slack, a.witness, a.seed, a.mode) == (b.worst_slack, b.witness, 4, "sampled")
    assert a.holds
    exhaustive = check_smoothness(tree.spec, tree.partition, LEMMA)
    assert a.worst_slack >= exhaustive.worst_slack


def test_quad_scan():
    result = quad_inequality_scan(60)
    assert result.holds and result.worst_margin == 0
    assert result.equality_points == [(0, 0), (1, 1)]
    assert quad_margin(2, 1) == Fraction(8, 3) + Fraction(4, 3) - (2 * -1 + 2 + 2 + 1)


# ---------------------------------------------------------------------------
# the tree family


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_tree_bookkeeping(k):
    tree = gen_gk_tree(k)
    game = build_congestion_game(tree.spec)
    assert game.player_count == 2 ** (k + 1) - 2
    assert social_welfare(game, tree.nash_profile) == 4 * k
    assert social_welfare(game, tree.down_profile) == k + 3
    assert is_equilibrium(game, tree.partition, tree.nash_profile)[0]


@pytest.mark.parametrize("k,optimum", [(1, 3), (2, 5), (3, 6)])
def test_tree_optimum(k, optimum):
    game = build_congestion_game(gen_gk_tree(k).spec)
    assert compute_optimum(game)[1] == optimum


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_best_response_dynamics_never_cycles_on_trees(k):
    tree = gen_gk_tree(k)
    game = build_congestion_game(tree.spec)
    rng = np.random.default_rng(k)
    for _ in range(5):
        start = tuple(int(x) for x in rng.integers(0, 2, game.player_count))
        run = best_response_dynamics(game, tree.partition, start, 10_000)
        assert run.status is DynamicsStatus.CONVERGED
        assert is_equilibrium(game, tree.partition, run.final)[0]


# ---------------------------------------------------------------------------
# routing


def test_simple_paths_diamond():
    arcs = (Arc(0, 1, 1), Arc(0, 2, 1), Arc(1, 3, 1), Arc(2, 3, 1), Arc(1, 2, 0))
    spec = RoutingSpec(4, arcs, ((0, 3),))
    assert simple_paths(spec, 0, 3) == [(0, 2), (0, 4, 3), (1, 3)]
    congestion, paths = routing_to_congestion(spec)
    assert congestion.resource_count == 4  # the free arc is dropped
    assert len(congestion.strategies[0]) == 3


def test_routing_validation():
    with pytest.raises(ValidationError):
        RoutingSpec(2, (Arc(1, 0, 1),), ((0, 1),))
    with pytest.raises(StructuralError):
        RoutingSpec(2, (Arc(0, 5, 1),), ((0, 1),))


@pytest.mark.parametrize("k", [1, 2])
def test_gadget_preserves_every_cost(k):
    tree = gen_gk_tree(k)
    direct = build_congestion_game(tree.spec)
    routed = build_routing_game(load_balancing_to_routing(tree.spec))
    assert routed.strategy_counts == direct.strategy_counts
    for profile in direct.profiles():
        assert routed.payoffs(profile) == direct.payoffs(profile)


@given(specs)
def test_gadget_on_random_load_balancing(spec):
    singles = CongestionSpec(spec.alpha, tuple(
        tuple(frozenset([e]) for e in sorted({min(s) for s in player})) for player in spec.strategies))
    direct = build_congestion_game(singles)
    routed = build_routing_game(load_balancing_to_routing(singles))
    for profile in itertools.islice(direct.profiles(), 50):
        assert routed.payoffs(profile) == direct.payoffs(profile)


def test_gadget_rejects_unsupported_strategies():
    spec = CongestionSpec((Fraction(1), Fraction(1)), ((frozenset([0, 1]),),))
    with pytest.raises(ValidationError):
        load_balancing_to_routing(spec)
    twice = CongestionSpec((Fraction(1),), ((frozenset([0]), frozenset([0])),))
    with pytest.raises(ValidationError):
        load_balancing_to_routing(twice)


def test_partition_sweep_on_small_instance_smooth_everywhere():
    spec = random_congestion_spec(np.random.default_rng(0), max_players=4)
    for partition in sweep_partitions(spec.player_count):
        assert check_smoothness(spec, partition, LEMMA).holds
