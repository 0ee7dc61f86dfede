"""Social k-grouping games and the lower-bound instances built from them.

Players pick one of k cliques.  ``weights[i][j]`` is the benefit a friendship
between i and j gives player j, so player j's utility is the sum of
``weights[i][j]`` over the other members i of its clique.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .core import (
    ExactTable,
    Game,
    Orientation,
    Profile,
    TribePartition,
    ValidationError,
    as_fraction,
    format_fraction,
    int_dtype_for,
    lcm_of_denominators,
)


class Variant(enum.Enum):
    SELFISH_ALTRUISTIC = "selfish-altruistic"
    TRIBAL = "tribal"


@dataclass(frozen=True)
class GroupingSpec:
    clique_count: int
    weights: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        w = tuple(tuple(as_fraction(x) for x in row) for row in self.weights)
        object.__setattr__(self, "weights", w)
        n = len(w)
        if n == 0:
            raise ValidationError("a grouping game needs at least one player")
        if any(len(row) != n for row in w):
            raise ValidationError("weight matrix must be square")
        if self.clique_count < 2:
            raise ValidationError(f"need at least 2 cliques, got {self.clique_count}")
        for i in range(n):
            if w[i][i] != 0:
                raise ValidationError(f"diagonal weight u[{i}][{i}] must be zero")
            for j in range(n):
                if w[i][j] < 0:
                    raise ValidationError(f"weight u[{i}][{j}] = {w[i][j]} is negative")

    @property
    def player_count(self) -> int:
        return len(self.weights)

    def total_weight(self) -> Fraction:
        return sum((x for row in self.weights for x in row), Fraction(0))

    def to_json(self) -> dict[str, Any]:
        return {
            "family": "grouping",
            "k": self.clique_count,
            "weights": [[format_fraction(x) for x in row] for row in self.weights],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> GroupingSpec:
        return cls(int(data["k"]), tuple(tuple(row) for row in data["weights"]))


def build_grouping_game(spec: GroupingSpec) -> Game:
    n, k = spec.player_count, spec.clique_count
    w = spec.weights
    denom = lcm_of_denominators(x for row in w for x in row)
    int_w = np.array([[int(x * denom) for x in row] for row in w], dtype=object)
    bound = int(sum(int(x) for x in int_w.ravel()))
    int_w = int_w.astype(int_dtype_for(bound))

    def payoffs(profile: Profile) -> tuple[Fraction, ...]:
        return tuple(
            sum((w[j][i] for j in range(n) if profile[j] == profile[i]), Fraction(0))
            for i in range(n)
        )

    def table(profiles: np.ndarray) -> ExactTable:
        out = np.zeros(profiles.shape, dtype=int_w.dtype)
        for i in range(n):
            same = profiles == profiles[:, i : i + 1]
            out[:, i] = same.astype(int_w.dtype) @ int_w[:, i]
        return ExactTable(out, denom)

    return Game(
        strategy_counts=(k,) * n,
        payoffs=payoffs,
        orientation=Orientation.UTILITY,
        table=table,
        family=spec.to_json(),
        name=f"grouping(n={n},k={k})",
    )


def _symmetric(n: int, pairs: dict[tuple[int, int], Any]) -> tuple[tuple[Fraction, ...], ...]:
    w = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), value in pairs.items():
        w[i][j] = w[j][i] = as_fraction(value)
    return tuple(tuple(row) for row in w)


# players a, b, c, d of the 4-cycle a-b-c-d-a
A, B, C, D = range(4)
SPLIT_PROFILE: Profile = (0, 1, 1, 0)  # cliques {a, d} and {b, c}


def gen_fig1(variant: Variant) -> tuple[GroupingSpec, TribePartition, Profile]:
    """The 4-cycle instances: all weights 1 (selfish/altruistic), or 2/1 weights with tribes."""
    if variant is Variant.SELFISH_ALTRUISTIC:
        w = _symmetric(4, {(A, B): 1, (B, C): 1, (C, D): 1, (D, A): 1})
        return GroupingSpec(2, w), TribePartition.singleton(4), SPLIT_PROFILE
    w = _symmetric(4, {(A, B): 2, (B, C): 1, (C, D): 2, (D, A): 1})
    red_blue = TribePartition((0, 1, 1, 0))
    return GroupingSpec(2, w), red_blue, SPLIT_PROFILE


def gen_figc_cycle() -> tuple[GroupingSpec, TribePartition, Profile]:
    """Unit 4-cycle with the opposite corners {a, c} and {b, d} as tribes."""
    spec, _, profile = gen_fig1(Variant.SELFISH_ALTRUISTIC)
    return spec, TribePartition((0, 1, 0, 1)), profile


def gen_k_family(k: int, variant: Variant) -> tuple[GroupingSpec, TribePartition, Profile]:
    """2k players a_1..a_k (indices 0..k-1) and b_1..b_k (indices k..2k-1) in k cliques.

    The returned profile puts a_i and b_i together in clique i.
    """
    if k < 2:
        raise ValidationError(f"k must be at least 2, got {k}")
    n = 2 * k
    cross = 1 if variant is Variant.SELFISH_ALTRUISTIC else 2
    w = [[Fraction(0)] * n for _ in range(n)]
    for i in range(k):
        w[i][k + i] = w[k + i][i] = Fraction(1)
        for j in range(k):
            if i != j:
                w[i][j] = Fraction(cross)
                w[k + i][k + j] = Fraction(cross)
    profile = tuple(range(k)) * 2
    if variant is Variant.SELFISH_ALTRUISTIC:
        partition = TribePartition.singleton(n)
    else:
        partition = TribePartition(tuple(range(k)) * 2)
    return GroupingSpec(k, tuple(tuple(r) for r in w)), partition, profile


def relabel_cliques(profile: Sequence[int], permutation: Sequence[int]) -> Profile:
    return tuple(permutation[c] for c in profile)


def random_grouping_spec(rng: np.random.Generator, n: int, k: int = 2, max_weight: int = 3) -> GroupingSpec:
    w = rng.integers(0, max_weight + 1, size=(n, n))
    np.fill_diagonal(w, 0)
    return GroupingSpec(k, tuple(tuple(Fraction(int(x)) for x in row) for row in w))
