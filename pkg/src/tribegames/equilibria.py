"""Pure equilibria of tribal extensions and exact inefficiency ratios.

Two independent routes decide stability.  ``is_equilibrium`` walks the
deviations of a single profile with direct payoff evaluation and returns a
blocking witness.  ``enumerate_equilibria`` and ``compute_pot`` evaluate the
whole profile space at once from an exact integer payoff table.  The test
suite cross-checks one against the other.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .core import (
    DEFAULT_JOINT_BUDGET,
    BudgetExceeded,
    ConfigurationError,
    Game,
    Orientation,
    Profile,
    StructuralError,
    TribePartition,
    normalise_pairs,
    substitute,
    tribe_totals,
)


class DeviationKind(enum.Enum):
    UNILATERAL = "unilateral"
    PAIRWISE = "pairwise"
    COORDINATED = "coordinated"
    OLIGOPOLISTIC = "oligopolistic"


@dataclass(frozen=True)
class DeviationConcept:
    """Which deviations may block a profile.

    ``adjacency`` lists the pairs allowed to deviate jointly under PAIRWISE;
    when omitted the game's own adjacency is used.  ``both_strict=False``
    lets a pair block when one tribe strictly gains and the other does not lose.
    """

    kind: DeviationKind
    adjacency: frozenset[tuple[int, int]] | None = None
    both_strict: bool = True

    @classmethod
    def parse(cls, name: str, **kwargs: Any) -> DeviationConcept:
        try:
            kind = DeviationKind(name.lower())
        except ValueError as exc:
            choices = ", ".join(k.value for k in DeviationKind)
            raise ConfigurationError(f"unknown deviation concept {name!r} (expected one of {choices})") from exc
        return cls(kind, **kwargs)

    def pairs_for(self, game: Game) -> frozenset[tuple[int, int]]:
        pairs = self.adjacency if self.adjacency is not None else game.adjacency
        if pairs is None:
            raise ConfigurationError("pairwise deviations need a pair adjacency relation")
        return normalise_pairs(pairs, game.player_count)


UNILATERAL = DeviationConcept(DeviationKind.UNILATERAL)
COORDINATED = DeviationConcept(DeviationKind.COORDINATED)
OLIGOPOLISTIC = DeviationConcept(DeviationKind.OLIGOPOLISTIC)


def pairwise(adjacency: Iterable[tuple[int, int]] | None = None, both_strict: bool = True) -> DeviationConcept:
    adj = None if adjacency is None else frozenset((int(i), int(j)) for i, j in adjacency)
    return DeviationConcept(DeviationKind.PAIRWISE, adj, both_strict)


@dataclass(frozen=True)
class Deviation:
    """A blocking move: the deviating players and their new strategies."""

    players: tuple[int, ...]
    moves: tuple[tuple[int, int], ...]

    def to_json(self) -> dict[str, Any]:
        return {"players": list(self.players), "moves": [list(m) for m in self.moves]}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> Deviation:
        return cls(tuple(data["players"]), tuple(tuple(m) for m in data["moves"]))


@dataclass
class EquilibriumReport:
    profile: Profile
    welfare: Fraction
    survives: dict[DeviationKind, bool]
    witnesses: dict[DeviationKind, Deviation] = field(default_factory=dict)

    @property
    def blocking_witness(self) -> Deviation | None:
        for kind in DeviationKind:
            if kind in self.witnesses:
                return self.witnesses[kind]
        return None


@dataclass
class PotReport:
    optimum_welfare: Fraction
    optimum_profile: Profile
    worst_eq_welfare: Fraction | None
    worst_eq_profile: Profile | None
    worst_eq_partition: TribePartition | None
    ratio: Fraction | None  # None marks an unbounded ratio
    equilibrium_count: int
    partitions_checked: int
    concept: DeviationKind

    @property
    def unbounded(self) -> bool:
        return self.ratio is None


def inefficiency_ratio(orientation: Orientation, optimum: Fraction, value: Fraction) -> Fraction | None:
    """How far ``value`` falls short of ``optimum``; None when unbounded (0/0 counts as 1)."""
    if value == optimum:
        return Fraction(1)
    if orientation is Orientation.COST:
        return None if optimum == 0 else Fraction(value) / optimum
    return None if value == 0 else Fraction(optimum) / value


# ---------------------------------------------------------------------------
# single-profile route


class _Evaluator:
    """Memoised tribe totals for one (game, partition)."""

    def __init__(self, game: Game, partition: TribePartition):
        game.check_partition(partition)
        self.game = game
        self.partition = partition
        self.better = game.orientation.better
        self._memo: dict[Profile, list[Fraction]] = {}

    def totals(self, profile: Profile) -> list[Fraction]:
        out = self._memo.get(profile)
        if out is None:
            out = tribe_totals(self.game.payoffs(profile), self.partition)
            if len(self._memo) < 100_000:
                self._memo[profile] = out
        return out

    def tribal(self, player: int, profile: Profile) -> Fraction:
        return self.totals(profile)[self.partition.tribe_of[player]]


def _unilateral_witness(ev: _Evaluator, profile: Profile) -> Deviation | None:
    for i, count in enumerate(ev.game.strategy_counts):
        current = ev.tribal(i, profile)
        for t in range(count):
            if t == profile[i]:
                continue
            moved = substitute(profile, [(i, t)])
            if ev.better(ev.tribal(i, moved), current):
                return Deviation((i,), ((i, t),))
    return None


def _pair_blocks(ev: _Evaluator, before: Sequence[Fraction], after: Sequence[Fraction], both_strict: bool) -> bool:
    gains = [ev.better(a, b) for a, b in zip(after, before)]
    if both_strict:
        return all(gains)
    losses = [ev.better(b, a) for a, b in zip(after, before)]
    return any(gains) and not any(losses)


def _pairwise_witness(ev: _Evaluator, profile: Profile, pairs: Iterable[tuple[int, int]], both_strict: bool) -> Deviation | None:
    counts = ev.game.strategy_counts
    for i, j in sorted(pairs):
        before = (ev.tribal(i, profile), ev.tribal(j, profile))
        for a in range(counts[i]):
            for b in range(counts[j]):
                # a pair move changes both strategies; one-player changes are unilateral moves
                if a == profile[i] or b == profile[j]:
                    continue
                moved = substitute(profile, [(i, a), (j, b)])
                after = (ev.tribal(i, moved), ev.tribal(j, moved))
                if _pair_blocks(ev, before, after, both_strict):
                    return Deviation((i, j), ((i, a), (j, b)))
    return None


def _tribe_witness(ev: _Evaluator, profile: Profile, joint_budget: int) -> Deviation | None:
    counts = ev.game.strategy_counts
    for tribe, members in enumerate(ev.partition.tribes):
        size = math.prod(counts[m] for m in members)
        if size > joint_budget:
            raise BudgetExceeded(f"joint moves of tribe {tribe}", size, joint_budget)
        current = ev.totals(profile)[tribe]
        for joint in itertools.product(*(range(counts[m]) for m in members)):
            moves = tuple(zip(members, joint))
            moved = substitute(profile, moves)
            if moved == profile:
                continue
            if ev.better(ev.totals(moved)[tribe], current):
                return Deviation(members, moves)
    return None


def _witness_for(ev: _Evaluator, profile: Profile, concept: DeviationConcept, joint_budget: int) -> Deviation | None:
    kind = concept.kind
    if kind is DeviationKind.OLIGOPOLISTIC:
        return _tribe_witness(ev, profile, joint_budget)
    pairs = concept.pairs_for(ev.game) if kind is DeviationKind.PAIRWISE else None
    witness = _unilateral_witness(ev, profile)
    if witness is not None:
        return witness
    if kind is DeviationKind.PAIRWISE:
        return _pairwise_witness(ev, profile, pairs, concept.both_strict)
    if kind is DeviationKind.COORDINATED:
        return _tribe_witness(ev, profile, joint_budget)
    return None


def is_equilibrium(
    base: Game,
    partition: TribePartition,
    profile: Sequence[int],
    concept: DeviationConcept = UNILATERAL,
    *,
    joint_budget: int = DEFAULT_JOINT_BUDGET,
) -> tuple[bool, Deviation | None]:
    """Decide stability of one profile in the tribal extension of ``base``.

    Returns ``(True, None)`` or ``(False, witness)``; the witness is the first
    blocking move in player/strategy order.
    """
    profile = base.check_profile(profile)
    ev = _Evaluator(base, partition)
    witness = _witness_for(ev, profile, concept, joint_budget)
    return witness is None, witness


def verify_witness(
    base: Game,
    partition: TribePartition,
    profile: Sequence[int],
    concept: DeviationConcept,
    witness: Deviation,
) -> bool:
    """Re-check a blocking witness by direct payoff evaluation."""
    profile = base.check_profile(profile)
    moved = base.check_profile(substitute(profile, witness.moves))
    if moved == profile or {p for p, _ in witness.moves} != set(witness.players):
        return False
    better = base.orientation.better
    before = tribe_totals(base.payoffs(profile), partition)
    after = tribe_totals(base.payoffs(moved), partition)
    tribe_of = partition.tribe_of
    players = witness.players
    if len(players) == 1:
        t = tribe_of[players[0]]
        return better(after[t], before[t])
    kind = concept.kind
    if kind is DeviationKind.PAIRWISE and len(players) == 2:
        i, j = players
        if (min(i, j), max(i, j)) not in concept.pairs_for(base):
            return False
        if moved[i] == profile[i] or moved[j] == profile[j]:
            return False
        ti, tj = tribe_of[i], tribe_of[j]
        gains = [better(after[ti], before[ti]), better(after[tj], before[tj])]
        if concept.both_strict:
            return all(gains)
        losses = [better(before[ti], after[ti]), better(before[tj], after[tj])]
        return any(gains) and not any(losses)
    if kind in (DeviationKind.COORDINATED, DeviationKind.OLIGOPOLISTIC):
        tribes = {tribe_of[p] for p in players}
        if len(tribes) != 1:
            return False
        (t,) = tribes
        return better(after[t], before[t])
    return False


def applicable_concepts(base: Game, concept: DeviationConcept | None = None) -> list[DeviationConcept]:
    """The concepts a report can evaluate: pairwise only when adjacency is known."""
    out = [UNILATERAL]
    if concept is not None and concept.kind is DeviationKind.PAIRWISE:
        out.append(concept)
    elif base.adjacency is not None:
        out.append(pairwise())
    out += [COORDINATED, OLIGOPOLISTIC]
    return out


def check_profile(
    base: Game,
    partition: TribePartition,
    profile: Sequence[int],
    concepts: Sequence[DeviationConcept] | None = None,
    *,
    joint_budget: int = DEFAULT_JOINT_BUDGET,
) -> EquilibriumReport:
    """Evaluate one profile under several concepts, keeping a witness for every failure."""
    profile = base.check_profile(profile)
    concepts = applicable_concepts(base) if concepts is None else list(concepts)
    ev = _Evaluator(base, partition)
    survives: dict[DeviationKind, bool] = {}
    witnesses: dict[DeviationKind, Deviation] = {}
    for concept in concepts:
        witness = _witness_for(ev, profile, concept, joint_budget)
        survives[concept.kind] = witness is None
        if witness is not None:
            witnesses[concept.kind] = witness
    welfare = sum(base.payoffs(profile), Fraction(0))
    return EquilibriumReport(profile, welfare, survives, witnesses)


# ---------------------------------------------------------------------------
# whole-space route


class _SpaceTables:
    """Oriented tribe totals over the full profile space ("larger is better")."""

    def __init__(self, base: Game, partition: TribePartition, budget: int | None):
        base.check_partition(partition)
        base.require_budget(budget)
        table = base.full_table
        self.base = base
        self.partition = partition
        self.shape = base.strategy_counts
        self.denominator = table.denominator
        values = table.values
        self.welfare = values.sum(axis=1)
        membership = partition.membership_matrix().astype(values.dtype)
        self.totals = (values * base.orientation.sign) @ membership

    def column(self, tribe: int) -> np.ndarray:
        return np.ascontiguousarray(self.totals[:, tribe]).reshape(self.shape)


def _map_groups(fn: Callable[[Any], np.ndarray], groups: Sequence[Any], workers: int) -> list[np.ndarray]:
    if workers <= 1 or len(groups) <= 1:
        return [fn(g) for g in groups]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, groups))


def _and_all(masks: Iterable[np.ndarray], size: int) -> np.ndarray:
    out = np.ones(size, dtype=bool)
    for m in masks:
        out &= m
    return out


def _unilateral_mask(tables: _SpaceTables, workers: int) -> np.ndarray:
    tribe_of = tables.partition.tribe_of

    def stable_for(player: int) -> np.ndarray:
        arr = tables.column(tribe_of[player])
        return (arr >= arr.max(axis=player, keepdims=True)).ravel()

    players = [i for i, c in enumerate(tables.shape) if c > 1]
    return _and_all(_map_groups(stable_for, players, workers), tables.base.profile_count)


def _tribe_mask(tables: _SpaceTables, workers: int) -> np.ndarray:
    def stable_for(tribe: int) -> np.ndarray:
        arr = tables.column(tribe)
        axes = tuple(tables.partition.tribes[tribe])
        return (arr >= arr.max(axis=axes, keepdims=True)).ravel()

    return _and_all(
        _map_groups(stable_for, list(range(tables.partition.tribe_count)), workers),
        tables.base.profile_count,
    )


def _pairwise_mask(
    tables: _SpaceTables,
    candidates: np.ndarray,
    pairs: Iterable[tuple[int, int]],
    both_strict: bool,
    workers: int,
) -> np.ndarray:
    """Mask of profiles not blocked by an adjacent pair, evaluated on ``candidates`` only."""
    base = tables.base
    tribe_of = tables.partition.tribe_of
    strides = base.strides
    counts = base.strategy_counts
    idx = candidates.astype(np.int64)

    def blocked_by(pair: tuple[int, int]) -> np.ndarray:
        i, j = pair
        col_i = tables.totals[:, tribe_of[i]]
        col_j = tables.totals[:, tribe_of[j]]
        si = (idx // strides[i]) % counts[i]
        sj = (idx // strides[j]) % counts[j]
        now_i, now_j = col_i[idx], col_j[idx]
        blocked = np.zeros(len(idx), dtype=bool)
        for a in range(counts[i]):
            for b in range(counts[j]):
                moved = idx + (a - si) * strides[i] + (b - sj) * strides[j]
                new_i, new_j = col_i[moved], col_j[moved]
                both_move = (si != a) & (sj != b)
                if both_strict:
                    blocked |= both_move & (new_i > now_i) & (new_j > now_j)
                else:
                    blocked |= both_move & (new_i >= now_i) & (new_j >= now_j) & ((new_i > now_i) | (new_j > now_j))
        return blocked

    blocked = np.zeros(len(idx), dtype=bool)
    for part in _map_groups(blocked_by, sorted(pairs), workers):
        blocked |= part
    mask = np.zeros(base.profile_count, dtype=bool)
    mask[idx[~blocked]] = True
    return mask


def stability_masks(
    base: Game,
    partition: TribePartition,
    concept: DeviationConcept = UNILATERAL,
    *,
    workers: int = 1,
    budget: int | None = None,
    tables: _SpaceTables | None = None,
) -> dict[DeviationKind, np.ndarray]:
    """Boolean masks over the profile index for every evaluable concept."""
    tables = tables or _SpaceTables(base, partition, budget)
    uni = _unilateral_mask(tables, workers)
    joint = _tribe_mask(tables, workers)
    masks = {
        DeviationKind.UNILATERAL: uni,
        DeviationKind.COORDINATED: uni & joint,
        DeviationKind.OLIGOPOLISTIC: joint,
    }
    pair_concept = concept if concept.kind is DeviationKind.PAIRWISE else (
        pairwise() if base.adjacency is not None else None)
    if pair_concept is not None:
        pairs = pair_concept.pairs_for(base)
        masks[DeviationKind.PAIRWISE] = _pairwise_mask(
            tables, np.flatnonzero(uni), pairs, pair_concept.both_strict, workers)
    return masks


def _concept_mask(tables: _SpaceTables, concept: DeviationConcept, workers: int) -> np.ndarray:
    kind = concept.kind
    if kind is DeviationKind.OLIGOPOLISTIC:
        return _tribe_mask(tables, workers)
    uni = _unilateral_mask(tables, workers)
    if kind is DeviationKind.UNILATERAL:
        return uni
    if kind is DeviationKind.COORDINATED:
        return uni & _tribe_mask(tables, workers)
    pairs = concept.pairs_for(tables.base)
    return _pairwise_mask(tables, np.flatnonzero(uni), pairs, concept.both_strict, workers)


def enumerate_equilibria(
    base: Game,
    partition: TribePartition,
    concept: DeviationConcept = UNILATERAL,
    *,
    workers: int = 1,
    budget: int | None = None,
    joint_budget: int = DEFAULT_JOINT_BUDGET,
) -> list[EquilibriumReport]:
    """All pure equilibria of the tribal extension, in lexicographic profile order."""
    if concept.kind is DeviationKind.PAIRWISE:
        concept.pairs_for(base)
    tables = _SpaceTables(base, partition, budget)
    masks = stability_masks(base, partition, concept, workers=workers, tables=tables)
    wanted = masks[concept.kind]
    concepts = applicable_concepts(base, concept)
    reports = []
    ev: _Evaluator | None = None
    for index in np.flatnonzero(wanted):
        profile = base.profile_at(int(index))
        survives = {c.kind: bool(masks[c.kind][index]) for c in concepts if c.kind in masks}
        witnesses = {}
        for c in concepts:
            if c.kind in survives and not survives[c.kind]:
                ev = ev or _Evaluator(base, partition)
                witnesses[c.kind] = _witness_for(ev, profile, c, joint_budget)
        welfare = Fraction(int(tables.welfare[index]), tables.denominator)
        reports.append(EquilibriumReport(profile, welfare, survives, witnesses))
    return reports


def compute_optimum(base: Game, *, budget: int | None = None, chunk: int = 1 << 18) -> tuple[Profile, Fraction]:
    """Exhaustive welfare optimum; the lexicographically first optimal profile."""
    base.require_budget(budget)
    sign = base.orientation.sign
    cached = base.__dict__.get("full_table")
    best: tuple[Fraction, int] | None = None
    for lo in range(0, base.profile_count, chunk):
        hi = min(lo + chunk, base.profile_count)
        table = cached if cached is not None else base.exact_table(lo, hi)
        values = table.values[lo:hi] if cached is not None else table.values
        oriented = values.sum(axis=1) * sign
        k = int(np.argmax(oriented))
        score = Fraction(int(oriented[k]), table.denominator)
        if best is None or score > best[0]:
            best = (score, lo + k)
    assert best is not None
    return base.profile_at(best[1]), best[0] * sign


def compute_pot(
    base: Game,
    partitions: Iterable[TribePartition],
    concept: DeviationConcept = UNILATERAL,
    *,
    workers: int = 1,
    budget: int | None = None,
    optimum: tuple[Profile, Fraction] | None = None,
) -> PotReport:
    """Worst equilibrium over the union of all partitions' equilibrium sets, against the optimum."""
    partitions = list(partitions)
    if not partitions:
        raise ConfigurationError("compute_pot needs at least one partition")
    if concept.kind is DeviationKind.PAIRWISE:
        concept.pairs_for(base)
    opt_profile, opt_welfare = optimum if optimum is not None else compute_optimum(base, budget=budget)
    sign = base.orientation.sign
    union = np.zeros(base.profile_count, dtype=bool)
    worst: tuple[Any, int, TribePartition] | None = None
    denominator = 1
    for partition in partitions:
        tables = _SpaceTables(base, partition, budget)
        denominator = tables.denominator
        mask = _concept_mask(tables, concept, workers)
        union |= mask
        hits = np.flatnonzero(mask)
        if len(hits) == 0:
            continue
        oriented = tables.welfare[hits] * sign
        k = int(np.argmin(oriented))
        score, index = oriented[k], int(hits[k])
        if worst is None or score < worst[0] or (score == worst[0] and index < worst[1]):
            worst = (score, index, partition)
    count = int(union.sum())
    if worst is None:
        return PotReport(opt_welfare, opt_profile, None, None, None, None, 0, len(partitions), concept.kind)
    worst_welfare = Fraction(int(worst[0]) * sign, denominator)
    ratio = inefficiency_ratio(base.orientation, opt_welfare, worst_welfare)
    return PotReport(
        opt_welfare, opt_profile, worst_welfare, base.profile_at(worst[1]), worst[2],
        ratio, count, len(partitions), concept.kind,
    )


# ---------------------------------------------------------------------------
# dynamics


class DynamicsStatus(enum.Enum):
    CONVERGED = "converged_to_equilibrium"
    CYCLE = "cycle_detected"
    EXHAUSTED = "step_budget_exhausted"


@dataclass
class DynamicsResult:
    trajectory: list[Profile]
    status: DynamicsStatus

    @property
    def final(self) -> Profile:
        return self.trajectory[-1]

    @property
    def moves(self) -> int:
        return len(self.trajectory) - 1


def best_response_dynamics(
    base: Game,
    partition: TribePartition,
    start: Sequence[int],
    max_steps: int,
) -> DynamicsResult:
    """Repeatedly let the lowest-indexed player with an improving move play its best response."""
    if max_steps < 0:
        raise StructuralError("max_steps must be nonnegative")
    ev = _Evaluator(base, partition)
    better = base.orientation.better
    profile = base.check_profile(start)
    trajectory = [profile]
    seen = {profile}
    for _ in range(max_steps + 1):
        step = None
        for i, count in enumerate(base.strategy_counts):
            current = ev.tribal(i, profile)
            best_value, best_t = current, None
            for t in range(count):
                if t == profile[i]:
                    continue
                value = ev.tribal(i, substitute(profile, [(i, t)]))
                if better(value, best_value):
                    best_value, best_t = value, t
            if best_t is not None:
                step = (i, best_t)
                break
        if step is None:
            return DynamicsResult(trajectory, DynamicsStatus.CONVERGED)
        if len(trajectory) > max_steps:
            return DynamicsResult(trajectory, DynamicsStatus.EXHAUSTED)
        profile = substitute(profile, [step])
        trajectory.append(profile)
        if profile in seen:
            return DynamicsResult(trajectory, DynamicsStatus.CYCLE)
        seen.add(profile)
    return DynamicsResult(trajectory, DynamicsStatus.EXHAUSTED)
