"""Finite strategic games with exact rational payoffs and tribal extensions.

A profile is a plain tuple of strategy indices, one per player.  Profiles are
ordered lexicographically with player 0 most significant, which is also the
order of the mixed-radix index used by the payoff tables.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Any, Callable, Iterable, Sequence

import numpy as np

Profile = tuple[int, ...]
PayoffVector = tuple[Fraction, ...]

DEFAULT_PROFILE_BUDGET = 10**7
DEFAULT_JOINT_BUDGET = 10**6
BUDGET_ENV = "TRIBEGAMES_PROFILE_BUDGET"

# tables whose entries could exceed this fall back to Python ints
_INT64_SAFE = 2**62


class GameError(Exception):
    """Base class for errors raised by this package."""


class StructuralError(GameError, ValueError):
    """Inputs whose shapes do not fit together."""


class ValidationError(GameError, ValueError):
    """Inputs that violate a model invariant."""


class ConfigurationError(GameError, ValueError):
    """An analysis was requested with missing or inconsistent settings."""


class BudgetExceeded(GameError):
    """Refusal to enumerate a space larger than the configured budget."""

    def __init__(self, what: str, size: int, budget: int):
        super().__init__(f"{what}: {size} exceeds budget {budget}")
        self.what = what
        self.size = size
        self.budget = budget


def profile_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_PROFILE_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ConfigurationError(f"{BUDGET_ENV} must be positive, got {value}")
    return value


def as_fraction(value: Any) -> Fraction:
    """Parse ints, Fractions and "p/q" strings.  Floats are rejected."""
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a rational: {value!r}") from exc
    raise ValidationError(f"not an exact rational: {value!r}")


def format_fraction(value: Fraction) -> str:
    return str(Fraction(value))


def lcm_of_denominators(values: Iterable[Fraction]) -> int:
    return reduce(math.lcm, (Fraction(v).denominator for v in values), 1)


class Orientation(enum.Enum):
    COST = "cost"
    UTILITY = "utility"

    def better(self, a: Fraction, b: Fraction) -> bool:
        """True iff ``a`` is strictly better than ``b``."""
        return a < b if self is Orientation.COST else a > b

    @property
    def sign(self) -> int:
        # multiply payoffs by this to turn "better" into "larger"
        return -1 if self is Orientation.COST else 1


@dataclass(frozen=True)
class TribePartition:
    tribe_of: tuple[int, ...]

    def __post_init__(self):
        tribes = tuple(int(t) for t in self.tribe_of)
        object.__setattr__(self, "tribe_of", tribes)
        if not tribes:
            raise ValidationError("a partition needs at least one player")
        if set(tribes) != set(range(max(tribes) + 1)):
            raise ValidationError(f"tribe identifiers must be dense from 0: {tribes}")

    @classmethod
    def singleton(cls, n: int) -> TribePartition:
        return cls(tuple(range(n)))

    @classmethod
    def constant(cls, n: int) -> TribePartition:
        return cls((0,) * n)

    @classmethod
    def canonical(cls, labels: Sequence[Any]) -> TribePartition:
        """Relabel arbitrary hashable labels densely in order of first appearance."""
        seen: dict[Any, int] = {}
        return cls(tuple(seen.setdefault(x, len(seen)) for x in labels))

    @property
    def player_count(self) -> int:
        return len(self.tribe_of)

    @property
    def tribe_count(self) -> int:
        return max(self.tribe_of) + 1

    def members(self, tribe: int) -> tuple[int, ...]:
        return tuple(i for i, t in enumerate(self.tribe_of) if t == tribe)

    @cached_property
    def tribes(self) -> tuple[tuple[int, ...], ...]:
        return tuple(self.members(t) for t in range(self.tribe_count))

    def membership_matrix(self) -> np.ndarray:
        """0/1 matrix of shape (players, tribes)."""
        m = np.zeros((self.player_count, self.tribe_count), dtype=np.int64)
        m[np.arange(self.player_count), self.tribe_of] = 1
        return m


@dataclass(frozen=True)
class ExactTable:
    """Payoffs for a block of profiles as integers over one common denominator."""

    values: np.ndarray  # shape (profiles, players)
    denominator: int

    def entry(self, row: int, col: int) -> Fraction:
        return Fraction(int(self.values[row, col]), self.denominator)


TableBuilder = Callable[[np.ndarray], ExactTable]


@dataclass(frozen=True, eq=False)
class Game:
    """A finite game given by a payoff-vector function.

    ``payoffs(profile)`` returns every player's payoff at once; families use
    this to share work (loads, clique memberships) across players.  The
    optional ``table`` hook evaluates a whole block of profiles exactly with
    numpy; when absent a slow generic builder is used.
    """

    strategy_counts: tuple[int, ...]
    payoffs: Callable[[Profile], PayoffVector]
    orientation: Orientation
    table: TableBuilder | None = None
    adjacency: frozenset[tuple[int, int]] | None = None
    family: dict[str, Any] | None = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        counts = tuple(int(c) for c in self.strategy_counts)
        object.__setattr__(self, "strategy_counts", counts)
        if not counts:
            raise ValidationError("a game needs at least one player")
        if any(c < 1 for c in counts):
            raise ValidationError(f"every player needs a strategy: {counts}")
        if self.adjacency is not None:
            object.__setattr__(self, "adjacency", normalise_pairs(self.adjacency, len(counts)))

    @property
    def player_count(self) -> int:
        return len(self.strategy_counts)

    @cached_property
    def profile_count(self) -> int:
        return math.prod(self.strategy_counts)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        strides = []
        acc = 1
        for c in reversed(self.strategy_counts):
            strides.append(acc)
            acc *= c
        return tuple(reversed(strides))

    def payoff(self, player: int, profile: Profile) -> Fraction:
        return self.payoffs(profile)[player]

    def check_profile(self, profile: Sequence[int]) -> Profile:
        profile = tuple(int(x) for x in profile)
        if len(profile) != self.player_count:
            raise StructuralError(
                f"profile has {len(profile)} entries, game has {self.player_count} players"
            )
        for i, (s, c) in enumerate(zip(profile, self.strategy_counts)):
            if not 0 <= s < c:
                raise StructuralError(f"player {i} strategy {s} outside 0..{c - 1}")
        return profile

    def check_partition(self, partition: TribePartition) -> None:
        if partition.player_count != self.player_count:
            raise StructuralError(
                f"partition covers {partition.player_count} players, game has {self.player_count}"
            )

    def index_of(self, profile: Profile) -> int:
        return sum(s * st for s, st in zip(profile, self.strides))

    def profile_at(self, index: int) -> Profile:
        out = []
        for st, c in zip(self.strides, self.strategy_counts):
            out.append((index // st) % c)
        return tuple(out)

    def profiles(self) -> Iterable[Profile]:
        for index in range(self.profile_count):
            yield self.profile_at(index)

    def profile_array(self, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Profiles with index in [lo, hi) as an int array of shape (m, players)."""
        hi = self.profile_count if hi is None else hi
        idx = np.arange(lo, hi, dtype=np.int64)
        cols = [(idx // st) % c for st, c in zip(self.strides, self.strategy_counts)]
        return np.stack(cols, axis=1) if cols else np.zeros((hi - lo, 0), dtype=np.int64)

    def require_budget(self, budget: int | None = None, what: str = "profile space") -> None:
        budget = profile_budget() if budget is None else budget
        if self.profile_count > budget:
            raise BudgetExceeded(what, self.profile_count, budget)

    def exact_table(self, lo: int = 0, hi: int | None = None) -> ExactTable:
        return table_for(self, self.profile_array(lo, hi))

    @cached_property
    def full_table(self) -> ExactTable:
        """Exact payoff table over the whole profile space (cached)."""
        self.require_budget()
        return self.exact_table()


def generic_table(payoffs: Callable[[Profile], PayoffVector], profiles: np.ndarray) -> ExactTable:
    rows = [payoffs(tuple(int(x) for x in row)) for row in profiles]
    denom = lcm_of_denominators(v for row in rows for v in row)
    ints = [[int(v * denom) for v in row] for row in rows]
    bound = max((abs(v) for row in ints for v in row), default=0)
    dtype = np.int64 if bound < _INT64_SAFE else object
    values = np.array(ints, dtype=dtype).reshape(len(rows), profiles.shape[1])
    return ExactTable(values, denom)


def table_for(game: Game, profiles: np.ndarray) -> ExactTable:
    if game.table is not None:
        return game.table(profiles)
    return generic_table(game.payoffs, profiles)


def int_dtype_for(bound: int):
    return np.int64 if bound < _INT64_SAFE else object


def normalise_pairs(pairs: Iterable[tuple[int, int]], n: int) -> frozenset[tuple[int, int]]:
    out = set()
    for i, j in pairs:
        i, j = int(i), int(j)
        if i == j:
            raise ValidationError(f"adjacency contains a self-pair ({i}, {j})")
        if not (0 <= i < n and 0 <= j < n):
            raise StructuralError(f"adjacency pair ({i}, {j}) outside 0..{n - 1}")
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


def substitute(profile: Profile, moves: Iterable[tuple[int, int]]) -> Profile:
    """Return ``profile`` with each listed player's strategy replaced."""
    out = list(profile)
    seen = set()
    for player, strategy in moves:
        if player in seen:
            raise StructuralError(f"player {player} appears twice in moves")
        if not 0 <= player < len(out):
            raise StructuralError(f"no player {player} in a {len(out)}-player profile")
        seen.add(player)
        out[player] = strategy
    return tuple(out)


def social_welfare(game: Game, profile: Profile) -> Fraction:
    return sum(game.payoffs(game.check_profile(profile)), Fraction(0))


def tribe_totals(payoffs: PayoffVector, partition: TribePartition) -> list[Fraction]:
    totals = [Fraction(0)] * partition.tribe_count
    for value, tribe in zip(payoffs, partition.tribe_of):
        totals[tribe] += value
    return totals


def tribal_extension(game: Game, partition: TribePartition) -> Game:
    """The game in which each player's payoff is the total of its tribe."""
    game.check_partition(partition)
    tribe_of = partition.tribe_of
    membership = partition.membership_matrix()

    def payoffs(profile: Profile) -> PayoffVector:
        totals = tribe_totals(game.payoffs(profile), partition)
        return tuple(totals[t] for t in tribe_of)

    def table(profiles: np.ndarray) -> ExactTable:
        base = table_for(game, profiles)
        totals = base.values @ membership.astype(base.values.dtype)
        return ExactTable(totals[:, list(tribe_of)], base.denominator)

    return Game(
        strategy_counts=game.strategy_counts,
        payoffs=payoffs,
        orientation=game.orientation,
        table=table,
        adjacency=game.adjacency,
        family=game.family,
        name=f"{game.name}^tau" if game.name else "",
    )


def pad_with_null_player(game: Game) -> Game:
    """Append a player with one strategy and identically zero payoff."""

    def payoffs(profile: Profile) -> PayoffVector:
        return game.payoffs(profile[:-1]) + (Fraction(0),)

    def table(profiles: np.ndarray) -> ExactTable:
        base = table_for(game, profiles[:, :-1])
        zeros = np.zeros((base.values.shape[0], 1), dtype=base.values.dtype)
        return ExactTable(np.hstack([base.values, zeros]), base.denominator)

    return Game(
        strategy_counts=game.strategy_counts + (1,),
        payoffs=payoffs,
        orientation=game.orientation,
        table=table,
        adjacency=game.adjacency,
        name=f"{game.name}+null" if game.name else "",
    )


def zero_game(strategy_counts: Sequence[int], orientation: Orientation = Orientation.COST) -> Game:
    n = len(strategy_counts)

    def payoffs(profile: Profile) -> PayoffVector:
        return (Fraction(0),) * n

    def table(profiles: np.ndarray) -> ExactTable:
        return ExactTable(np.zeros(profiles.shape, dtype=np.int64), 1)

    return Game(tuple(strategy_counts), payoffs, orientation, table=table, name="zero")


def table_game(
    payoff_rows: Sequence[Sequence[Any]],
    strategy_counts: Sequence[int],
    orientation: Orientation,
) -> Game:
    """A game given explicitly as one payoff row per profile in lexicographic order."""
    counts = tuple(int(c) for c in strategy_counts)
    rows = [tuple(as_fraction(v) for v in row) for row in payoff_rows]
    if len(rows) != math.prod(counts):
        raise StructuralError(f"expected {math.prod(counts)} payoff rows, got {len(rows)}")
    if any(len(r) != len(counts) for r in rows):
        raise StructuralError("every payoff row needs one entry per player")
    denom = lcm_of_denominators(v for r in rows for v in r)
    ints = [[int(v * denom) for v in r] for r in rows]
    bound = max((abs(v) for r in ints for v in r), default=0)
    values = np.array(ints, dtype=int_dtype_for(bound)).reshape(len(rows), len(counts))
    strides = []
    acc = 1
    for c in reversed(counts):
        strides.append(acc)
        acc *= c
    strides_arr = np.array(list(reversed(strides)), dtype=np.int64)

    def payoffs(profile: Profile) -> PayoffVector:
        return rows[sum(s * st for s, st in zip(profile, strides_arr.tolist()))]

    def table(profiles: np.ndarray) -> ExactTable:
        return ExactTable(values[profiles @ strides_arr], denom)

    family = {"family": "table", "payoffs": [[format_fraction(v) for v in r] for r in rows]}
    return Game(counts, payoffs, orientation, table=table, family=family, name="table")
