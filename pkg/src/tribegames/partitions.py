"""Set partitions of the player set as restricted growth strings."""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator

from .core import BudgetExceeded, Game, TribePartition, ValidationError, profile_budget


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Number of partitions of n labelled items into exactly k blocks."""
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def bell(n: int) -> int:
    return sum(stirling2(n, k) for k in range(n + 1))


def restricted_growth_strings(n: int, blocks: int | None = None) -> Iterator[tuple[int, ...]]:
    """Yield every string a with a[0] = 0 and a[i] <= 1 + max(a[:i]), lexicographically.

    With ``blocks`` given only strings using exactly that many distinct values
    are produced.
    """
    if n <= 0:
        return
    word = [0] * n

    def extend(pos: int, used: int) -> Iterator[tuple[int, ...]]:
        if blocks is not None and used + (n - pos) < blocks:
            return
        if pos == n:
            if blocks is None or used == blocks:
                yield tuple(word)
            return
        top = used if blocks is None else min(used, blocks - 1)
        for value in range(top + 1):
            word[pos] = value
            yield from extend(pos + 1, max(used, value + 1))

    yield from extend(1, 1)


def partition_count(n: int, tribe_count: int | None = None) -> int:
    return bell(n) if tribe_count is None else stirling2(n, tribe_count)


def sweep_partitions(
    base: Game | int,
    tribe_count: int | None = None,
    *,
    budget: int | None = None,
) -> Iterator[TribePartition]:
    """Each partition of the players exactly once, optionally with exactly ``tribe_count`` tribes."""
    n = base.player_count if isinstance(base, Game) else int(base)
    if tribe_count is not None and tribe_count < 1:
        raise ValidationError(f"tribe_count must be positive, got {tribe_count}")
    budget = profile_budget() if budget is None else budget
    total = partition_count(n, tribe_count)
    if total > budget:
        raise BudgetExceeded("partition sweep", total, budget)
    for word in restricted_growth_strings(n, tribe_count):
        yield TribePartition(word)
