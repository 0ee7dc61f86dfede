"""Shared hypothesis strategies and brute-force oracles.

The oracles here recompute everything from ``Game.payoffs`` with plain loops
and itertools, so they share no code with the vectorised routes under test.
"""

import itertools
from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, settings, strategies as st

from tribegames.core import Orientation, TribePartition, table_game

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


# ---------------------------------------------------------------------------
# strategies


@st.composite
def small_table_games(draw, max_players=3, max_strategies=3):
    n = draw(st.integers(1, max_players))
    counts = tuple(draw(st.lists(st.integers(1, max_strategies), min_size=n, max_size=n)))
    size = int(np.prod(counts))
    values = st.fractions(min_value=0, max_value=4, max_denominator=3)
    rows = draw(st.lists(st.lists(values, min_size=n, max_size=n), min_size=size, max_size=size))
    orientation = draw(st.sampled_from(list(Orientation)))
    return table_game(rows, counts, orientation)


@st.composite
def partitions_of(draw, n):
    labels = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    return TribePartition.canonical(labels)


@st.composite
def game_and_partition(draw, max_players=3, max_strategies=3):
    game = draw(small_table_games(max_players, max_strategies))
    return game, draw(partitions_of(game.player_count))


# ---------------------------------------------------------------------------
# oracles


def naive_tribal(game, partition, profile):
    base = game.payoffs(profile)
    return [sum((base[j] for j in range(game.player_count) if partition.tribe_of[j] == partition.tribe_of[i]),
                Fraction(0)) for i in range(game.player_count)]


def _improves(game, new, old):
    return new < old if game.orientation is Orientation.COST else new > old


def _replace(profile, moves):
    p = list(profile)
    for i, t in moves:
        p[i] = t
    return tuple(p)


def naive_stable(game, partition, profile, kind, pairs=(), both_strict=True):
    """Stability by exhaustive listing of every allowed deviation."""
    n = game.player_count
    before = naive_tribal(game, partition, profile)
    if kind in ("unilateral", "pairwise", "coordinated"):
        for i in range(n):
            for t in range(game.strategy_counts[i]):
                if t != profile[i]:
                    after = naive_tribal(game, partition, _replace(profile, [(i, t)]))
                    if _improves(game, after[i], before[i]):
                        return False
    if kind == "pairwise":
        for i, j in pairs:
            for ti in range(game.strategy_counts[i]):
                for tj in range(game.strategy_counts[j]):
                    if ti == profile[i] or tj == profile[j]:
                        continue
                    after = naive_tribal(game, partition, _replace(profile, [(i, ti), (j, tj)]))
                    gi, gj = _improves(game, after[i], before[i]), _improves(game, after[j], before[j])
                    if both_strict and gi and gj:
                        return False
                    li, lj = _improves(game, before[i], after[i]), _improves(game, before[j], after[j])
                    if not both_strict and (gi or gj) and not (li or lj):
                        return False
    if kind in ("coordinated", "oligopolistic"):
        for members in partition.tribes:
            lead = members[0]
            for choice in itertools.product(*(range(game.strategy_counts[m]) for m in members)):
                moved = _replace(profile, zip(members, choice))
                if moved != profile:
                    after = naive_tribal(game, partition, moved)
                    if _improves(game, after[lead], before[lead]):
                        return False
    return True


def naive_equilibria(game, partition, kind, pairs=(), both_strict=True):
    return [p for p in itertools.product(*(range(c) for c in game.strategy_counts))
            if naive_stable(game, partition, p, kind, pairs, both_strict)]


def naive_optimum(game):
    welfare = [sum(game.payoffs(p), Fraction(0)) for p in itertools.product(*(range(c) for c in game.strategy_counts))]
    return min(welfare) if game.orientation is Orientation.COST else max(welfare)


def naive_set_partitions(items):
    """All set partitions of a list, by the classic insert-into-block recursion."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in naive_set_partitions(rest):
        for k in range(len(smaller)):
            yield smaller[:k] + [[first] + smaller[k]] + smaller[k + 1:]
        yield [[first]] + smaller
