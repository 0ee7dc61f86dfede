from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import game_and_partition, small_table_games
from tribegames.core import (
    BudgetExceeded,
    Orientation,
    StructuralError,
    TribePartition,
    ValidationError,
    as_fraction,
    format_fraction,
    pad_with_null_player,
    social_welfare,
    substitute,
    table_game,
    tribal_extension,
    zero_game,
)
from tribegames.grouping import Variant, build_grouping_game, gen_fig1


def test_as_fraction_accepts_exact_forms():
    assert as_fraction(3) == 3
    assert as_fraction("2/6") == Fraction(1, 3)
    assert as_fraction(" -5 ") == -5
    assert as_fraction(Fraction(7, 2)) == Fraction(7, 2)


@pytest.mark.parametrize("bad", [0.5, True, "x", "1/0", None, [1]])
def test_as_fraction_rejects(bad):
    with pytest.raises(ValidationError):
        as_fraction(bad)


def test_format_fraction_drops_unit_denominator():
    assert format_fraction(Fraction(3)) == "3"
    assert format_fraction(Fraction(-2, 4)) == "-1/2"


def test_partition_validation():
    with pytest.raises(ValidationError):
        TribePartition((0, 2))
    with pytest.raises(ValidationError):
        TribePartition(())
    assert TribePartition.canonical(["x", "y", "x"]).tribe_of == (0, 1, 0)
    assert TribePartition((0, 1, 0)).tribes == ((0, 2), (1,))


def test_orientation_better_is_strict():
    assert Orientation.COST.better(1, 2) and not Orientation.COST.better(2, 2)
    assert Orientation.UTILITY.better(3, 2) and not Orientation.UTILITY.better(2, 2)


@given(game_and_partition())
def test_extension_equals_tribe_sums(gp):
    game, partition = gp
    ext = tribal_extension(game, partition)
    table = ext.exact_table()
    for idx, profile in enumerate(game.profiles()):
        base = game.payoffs(profile)
        expected = [sum((base[j] for j in range(game.player_count)
                         if partition.tribe_of[j] == partition.tribe_of[i]), Fraction(0))
                    for i in range(game.player_count)]
        assert list(ext.payoffs(profile)) == expected
        assert [table.entry(idx, i) for i in range(game.player_count)] == expected


@given(small_table_games())
def test_singleton_extension_is_the_base_game(game):
    ext = tribal_extension(game, TribePartition.singleton(game.player_count))
    for profile in game.profiles():
        assert ext.payoffs(profile) == game.payoffs(profile)


@given(small_table_games())
def test_constant_extension_gives_welfare(game):
    n = game.player_count
    ext = tribal_extension(game, TribePartition.constant(n))
    for profile in game.profiles():
        w = social_welfare(game, profile)
        assert all(v == w for v in ext.payoffs(profile))
        assert social_welfare(ext, profile) == n * w


def test_extension_rejects_length_mismatch():
    game = zero_game((2, 2))
    with pytest.raises(StructuralError):
        tribal_extension(game, TribePartition((0, 1, 2)))


def test_fig1_right_subjective_utility():
    spec, red_blue, split = gen_fig1(Variant.TRIBAL)
    ext = tribal_extension(build_grouping_game(spec), red_blue)
    assert ext.payoffs(split)[0] == 2


def test_welfare_examples():
    left, _, _ = gen_fig1(Variant.SELFISH_ALTRUISTIC)
    right, _, _ = gen_fig1(Variant.TRIBAL)
    assert social_welfare(build_grouping_game(left), (0, 0, 0, 0)) == 8
    assert social_welfare(build_grouping_game(right), (1, 1, 1, 1)) == 12
    assert all(social_welfare(zero_game((2, 3)), p) == 0 for p in zero_game((2, 3)).profiles())


@given(st.lists(st.integers(0, 3), min_size=1, max_size=5), st.data())
def test_substitute(profile, data):
    profile = tuple(profile)
    assert substitute(profile, []) == profile
    n = len(profile)
    i = data.draw(st.integers(0, n - 1))
    moved = substitute(profile, [(i, 9)])
    assert moved[i] == 9 and moved[:i] == profile[:i] and moved[i + 1:] == profile[i + 1:]
    if n >= 2:
        j = (i + 1) % n
        assert substitute(profile, [(i, 7), (j, 8)]) == substitute(profile, [(j, 8), (i, 7)])
    with pytest.raises(StructuralError):
        substitute(profile, [(i, 0), (i, 1)])


@given(small_table_games())
def test_profile_index_roundtrip_is_lexicographic(game):
    profiles = list(game.profiles())
    assert profiles == sorted(profiles)
    for idx, p in enumerate(profiles):
        assert game.index_of(p) == idx and game.profile_at(idx) == p
    assert np.array_equal(game.profile_array(), np.array(profiles))


def test_check_profile_rejects_out_of_range():
    game = zero_game((2, 2))
    with pytest.raises(StructuralError):
        game.check_profile((0, 2))
    with pytest.raises(StructuralError):
        game.check_profile((0,))


def test_table_game_row_count_checked():
    with pytest.raises(StructuralError):
        table_game([[1, 1]], (2, 2), Orientation.COST)


def test_budget_refusal():
    game = zero_game((10,) * 4)
    with pytest.raises(BudgetExceeded) as info:
        game.require_budget(100)
    assert info.value.size == 10_000


def test_budget_environment_override(monkeypatch):
    monkeypatch.setenv("TRIBEGAMES_PROFILE_BUDGET", "50")
    with pytest.raises(BudgetExceeded):
        zero_game((10, 10)).require_budget()


@given(small_table_games(max_players=2))
def test_padding_adds_a_silent_player(game):
    padded = pad_with_null_player(game)
    assert padded.strategy_counts == game.strategy_counts + (1,)
    for p in game.profiles():
        assert padded.payoffs(p + (0,)) == tuple(game.payoffs(p)) + (0,)
