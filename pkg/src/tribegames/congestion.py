"""Atomic linear congestion and routing games, the G_k tree and smoothness checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .core import (
    BudgetExceeded,
    ExactTable,
    Game,
    Orientation,
    Profile,
    StructuralError,
    TribePartition,
    ValidationError,
    as_fraction,
    format_fraction,
    int_dtype_for,
    lcm_of_denominators,
    profile_budget,
    substitute,
    tribe_totals,
)


@dataclass(frozen=True)
class CongestionSpec:
    """Resources with delay alpha[e] * load; each player picks one resource subset."""

    alpha: tuple[Fraction, ...]
    strategies: tuple[tuple[frozenset[int], ...], ...]

    def __post_init__(self):
        alpha = tuple(as_fraction(a) for a in self.alpha)
        strategies = tuple(tuple(frozenset(int(e) for e in s) for s in player) for player in self.strategies)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "strategies", strategies)
        for e, a in enumerate(alpha):
            if a <= 0:
                raise ValidationError(f"resource {e} has non-positive factor {a}")
        if not strategies:
            raise ValidationError("a congestion game needs at least one player")
        for i, player in enumerate(strategies):
            if not player:
                raise ValidationError(f"player {i} has no strategies")
            for s in player:
                bad = [e for e in s if not 0 <= e < len(alpha)]
                if bad:
                    raise StructuralError(f"player {i} uses unknown resources {bad}")

    @property
    def resource_count(self) -> int:
        return len(self.alpha)

    @property
    def player_count(self) -> int:
        return len(self.strategies)

    def loads(self, profile: Profile, partition: TribePartition | None = None) -> list[int] | list[list[int]]:
        """n_e(s), or per tribe n_e^t(s) when a partition is given."""
        if partition is None:
            loads = [0] * self.resource_count
            for i, s in enumerate(profile):
                for e in self.strategies[i][s]:
                    loads[e] += 1
            return loads
        per_tribe = [[0] * self.resource_count for _ in range(partition.tribe_count)]
        for i, s in enumerate(profile):
            for e in self.strategies[i][s]:
                per_tribe[partition.tribe_of[i]][e] += 1
        return per_tribe

    def relabelled(self, permutation: Sequence[int]) -> CongestionSpec:
        """Resource e becomes resource permutation[e]."""
        alpha = [Fraction(0)] * self.resource_count
        for e, a in enumerate(self.alpha):
            alpha[permutation[e]] = a
        strategies = tuple(tuple(frozenset(permutation[e] for e in s) for s in p) for p in self.strategies)
        return CongestionSpec(tuple(alpha), strategies)

    def to_json(self) -> dict[str, Any]:
        return {
            "family": "congestion",
            "alpha": [format_fraction(a) for a in self.alpha],
            "strategies": [[sorted(s) for s in player] for player in self.strategies],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> CongestionSpec:
        return cls(
            tuple(as_fraction(a) for a in data["alpha"]),
            tuple(tuple(frozenset(s) for s in player) for player in data["strategies"]),
        )


def build_congestion_game(spec: CongestionSpec) -> Game:
    n, m = spec.player_count, spec.resource_count
    alpha = spec.alpha
    denom = lcm_of_denominators(alpha)
    int_alpha = [int(a * denom) for a in alpha]
    dtype = int_dtype_for(sum(int_alpha) * n * n)
    usage = []
    for player in spec.strategies:
        u = np.zeros((len(player), m), dtype=dtype)
        for k, s in enumerate(player):
            u[k, sorted(s)] = 1
        usage.append(u)
    alpha_arr = np.array(int_alpha, dtype=dtype)

    def payoffs(profile: Profile) -> tuple[Fraction, ...]:
        loads = spec.loads(profile)
        return tuple(
            sum((alpha[e] * loads[e] for e in spec.strategies[i][s]), Fraction(0))
            for i, s in enumerate(profile)
        )

    def table(profiles: np.ndarray) -> ExactTable:
        used = [usage[i][profiles[:, i]] for i in range(n)]
        loads = sum(used[1:], used[0].copy())
        weighted = loads * alpha_arr
        out = np.stack([(used[i] * weighted).sum(axis=1) for i in range(n)], axis=1)
        return ExactTable(out.astype(dtype), denom)

    return Game(
        strategy_counts=tuple(len(p) for p in spec.strategies),
        payoffs=payoffs,
        orientation=Orientation.COST,
        table=table,
        family=spec.to_json(),
        name=f"congestion(n={n},m={m})",
    )


def social_cost_from_loads(spec: CongestionSpec, profile: Profile) -> Fraction:
    """C(s) = sum over resources of alpha_e * n_e(s)**2."""
    return sum((a * n * n for a, n in zip(spec.alpha, spec.loads(profile))), Fraction(0))


# ---------------------------------------------------------------------------
# the binary tree family


@dataclass(frozen=True)
class TreeInstance:
    spec: CongestionSpec
    partition: TribePartition
    nash_profile: Profile
    down_profile: Profile
    k: int


def tree_depth(node: int) -> int:
    return (node + 1).bit_length() - 1


def gen_gk_tree(k: int) -> TreeInstance:
    """Binary tree with k + 1 node layers; players are the edges.

    Nodes use heap numbering (root 0, children 2v+1 and 2v+2).  Player p owns
    the edge above node p + 1 and chooses strategy 0 (upper endpoint) or 1
    (lower endpoint).  Left child edges form tribe 0, right child edges tribe 1.
    """
    if k < 1:
        raise ValidationError(f"k must be at least 1, got {k}")
    nodes = 2 ** (k + 1) - 1
    alpha = []
    for v in range(nodes):
        depth = tree_depth(v)
        if depth < k:
            alpha.append(Fraction(1, 2**depth))
        else:
            alpha.append(Fraction(2, 2 ** (k - 1)))
    strategies = []
    tribes = []
    for child in range(1, nodes):
        parent = (child - 1) // 2
        strategies.append((frozenset([parent]), frozenset([child])))
        tribes.append(0 if child % 2 == 1 else 1)
    players = nodes - 1
    spec = CongestionSpec(tuple(alpha), tuple(strategies))
    return TreeInstance(spec, TribePartition(tuple(tribes)), (0,) * players, (1,) * players, k)


# ---------------------------------------------------------------------------
# load balancing to routing


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    alpha: Fraction = Fraction(0)


@dataclass(frozen=True)
class RoutingSpec:
    vertex_count: int
    arcs: tuple[Arc, ...]
    terminals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(Arc(a.tail, a.head, as_fraction(a.alpha)) for a in self.arcs))
        for a in self.arcs:
            if not (0 <= a.tail < self.vertex_count and 0 <= a.head < self.vertex_count):
                raise StructuralError(f"arc {a.tail}->{a.head} outside 0..{self.vertex_count - 1}")
            if a.alpha < 0:
                raise ValidationError(f"arc {a.tail}->{a.head} has negative delay factor")
        for i, (s, t) in enumerate(self.terminals):
            if not simple_paths(self, s, t):
                raise ValidationError(f"player {i} has no path from {s} to {t}")

    def to_json(self) -> dict[str, Any]:
        return {
            "family": "routing",
            "vertices": self.vertex_count,
            "arcs": [{"tail": a.tail, "head": a.head, "alpha": format_fraction(a.alpha)} for a in self.arcs],
            "terminals": [list(t) for t in self.terminals],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> RoutingSpec:
        arcs = tuple(Arc(int(a["tail"]), int(a["head"]), as_fraction(a.get("alpha", 0))) for a in data["arcs"])
        return cls(int(data["vertices"]), arcs, tuple((int(s), int(t)) for s, t in data["terminals"]))


def simple_paths(spec: RoutingSpec, source: int, sink: int) -> list[tuple[int, ...]]:
    """Simple source-sink paths as tuples of arc indices, in depth-first arc order."""
    out_arcs: dict[int, list[int]] = {}
    for k, a in enumerate(spec.arcs):
        out_arcs.setdefault(a.tail, []).append(k)
    paths = []

    def walk(vertex: int, visited: set[int], path: list[int]) -> None:
        if vertex == sink:
            paths.append(tuple(path))
            return
        for k in out_arcs.get(vertex, ()):
            head = spec.arcs[k].head
            if head not in visited:
                visited.add(head)
                path.append(k)
                walk(head, visited, path)
                path.pop()
                visited.remove(head)

    walk(source, {source}, [])
    return paths


def routing_to_congestion(spec: RoutingSpec) -> tuple[CongestionSpec, list[list[tuple[int, ...]]]]:
    """Compile paths into resource subsets; zero-delay arcs are dropped as they never cost anything."""
    costly = [k for k, a in enumerate(spec.arcs) if a.alpha > 0]
    resource_of = {k: r for r, k in enumerate(costly)}
    paths = [simple_paths(spec, s, t) for s, t in spec.terminals]
    strategies = tuple(
        tuple(frozenset(resource_of[k] for k in path if k in resource_of) for path in player_paths)
        for player_paths in paths
    )
    alpha = tuple(spec.arcs[k].alpha for k in costly)
    return CongestionSpec(alpha, strategies), paths


def build_routing_game(spec: RoutingSpec) -> Game:
    congestion, _ = routing_to_congestion(spec)
    game = build_congestion_game(congestion)
    return Game(
        strategy_counts=game.strategy_counts,
        payoffs=game.payoffs,
        orientation=game.orientation,
        table=game.table,
        family=spec.to_json(),
        name=f"routing(n={len(spec.terminals)})",
    )


def load_balancing_to_routing(spec: CongestionSpec) -> RoutingSpec:
    """Give every player a private source and sink and route each candidate resource through a shared arc.

    Resource e becomes the arc mid_in(e) -> mid_out(e) carrying alpha_e; player i
    reaches it by a free arc from its source and leaves by a free arc to its
    sink, so its t-th path corresponds to its t-th strategy.
    """
    for i, player in enumerate(spec.strategies):
        for s in player:
            if len(s) != 1:
                raise ValidationError(f"player {i} has a non-singleton strategy {sorted(s)}")
        if len(set(player)) != len(player):
            raise ValidationError(f"player {i} lists the same resource twice")
    m, n = spec.resource_count, spec.player_count
    arcs = [Arc(2 * e, 2 * e + 1, spec.alpha[e]) for e in range(m)]
    terminals = []
    for i, player in enumerate(spec.strategies):
        source, sink = 2 * m + 2 * i, 2 * m + 2 * i + 1
        terminals.append((source, sink))
        for s in player:
            (e,) = s
            arcs.append(Arc(source, 2 * e))
        for s in player:
            (e,) = s
            arcs.append(Arc(2 * e + 1, sink))
    return RoutingSpec(2 * m + 2 * n, tuple(arcs), tuple(terminals))


# ---------------------------------------------------------------------------
# smoothness


@dataclass(frozen=True)
class SmoothnessParams:
    lam: Fraction
    mu: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        object.__setattr__(self, "mu", as_fraction(self.mu))
        if not 0 <= self.mu < 1:
            raise ValidationError(f"mu must lie in [0, 1), got {self.mu}")


def smoothness_pot_bound(params: SmoothnessParams) -> Fraction:
    return params.lam / (1 - params.mu)


@dataclass
class SmoothnessResult:
    holds: bool
    worst_slack: Fraction
    witness: tuple[Profile, Profile] | None  # (s, s') with the smallest slack
    pairs_checked: int
    mode: str
    seed: int | None = None


def smoothness_lhs(game: Game, partition: TribePartition, s: Profile, s_prime: Profile) -> Fraction:
    """Sum over players of c_i^tau(s'_i; s_-i) - c_i^tau(s) + c_i(s), by direct evaluation."""
    base = game.payoffs(s)
    totals = tribe_totals(base, partition)
    lhs = Fraction(0)
    for i, t in enumerate(s_prime):
        own = partition.tribe_of[i]
        moved = totals[own] if t == s[i] else tribe_totals(game.payoffs(substitute(s, [(i, t)])), partition)[own]
        lhs += moved - totals[own] + base[i]
    return lhs


def check_smoothness(
    spec: CongestionSpec | Game,
    partition: TribePartition,
    params: SmoothnessParams,
    *,
    sample: int | None = None,
    seed: int = 0,
    budget: int | None = None,
) -> SmoothnessResult:
    """Check the smoothness inequality over all ordered profile pairs, or ``sample`` random ones.

    The slack of a pair is lam*C(s') + mu*C(s) minus the left-hand side; the
    inequality holds iff the smallest slack is nonnegative.
    """
    game = build_congestion_game(spec) if isinstance(spec, CongestionSpec) else spec
    game.check_partition(partition)
    if sample is not None:
        return _sampled_smoothness(game, partition, params, sample, seed)
    budget = profile_budget() if budget is None else budget
    if game.profile_count**2 > budget:
        raise BudgetExceeded("smoothness profile pairs", game.profile_count**2, budget)

    table = game.exact_table()
    cost = table.values.astype(object)
    membership = partition.membership_matrix().astype(object)
    tribal = (cost @ membership)[:, list(partition.tribe_of)]
    social = cost.sum(axis=1)
    N, n = cost.shape
    profiles = game.profile_array()
    idx = np.arange(N, dtype=np.int64)
    # per (s, player, t): c_i^tau(t; s_-i) - c_i^tau(s) + c_i(s)
    lhs = np.zeros((N, N), dtype=object)
    for i, count in enumerate(game.strategy_counts):
        stride = game.strides[i]
        deltas = np.empty((N, count), dtype=object)
        for t in range(count):
            moved = idx + (t - profiles[:, i]) * stride
            deltas[:, t] = tribal[moved, i] - tribal[:, i] + cost[:, i]
        lhs += deltas[:, profiles[:, i]]
    lam, mu = params.lam, params.mu
    scale = lcm_of_denominators([lam, mu])
    rhs = int(lam * scale) * social[None, :] + int(mu * scale) * social[:, None]
    slack = rhs - scale * lhs
    flat = int(np.argmin(slack))
    s_idx, sp_idx = divmod(flat, N)
    worst = Fraction(int(slack[s_idx, sp_idx]), scale * table.denominator)
    witness = (game.profile_at(s_idx), game.profile_at(sp_idx))
    return SmoothnessResult(worst >= 0, worst, witness, N * N, "exhaustive")


def _sampled_smoothness(game: Game, partition: TribePartition, params: SmoothnessParams, count: int, seed: int) -> SmoothnessResult:
    rng = np.random.default_rng(seed)
    worst: Fraction | None = None
    witness = None
    counts = np.array(game.strategy_counts)
    for _ in range(count):
        s = tuple(int(x) for x in rng.integers(0, counts))
        sp = tuple(int(x) for x in rng.integers(0, counts))
        slack = params.lam * sum(game.payoffs(sp)) + params.mu * sum(game.payoffs(s)) - smoothness_lhs(game, partition, s, sp)
        if worst is None or slack < worst:
            worst, witness = slack, (s, sp)
    if worst is None:
        return SmoothnessResult(True, Fraction(0), None, 0, "sampled", seed)
    return SmoothnessResult(worst >= 0, worst, witness, count, "sampled", seed)


@dataclass
class QuadScanResult:
    holds: bool
    worst_margin: Fraction
    worst_at: tuple[int, int]
    equality_points: list[tuple[int, int]]


def quad_margin(x: int, y: int) -> Fraction:
    """(8/3)y^2 + (1/3)x^2 - (x(y - x) + xy + x + y)."""
    return Fraction(8, 3) * y * y + Fraction(1, 3) * x * x - (x * (y - x) + x * y + x + y)


def quad_inequality_scan(limit: int) -> QuadScanResult:
    worst: tuple[Fraction, tuple[int, int]] | None = None
    equal = []
    for x, y in itertools.product(range(limit + 1), repeat=2):
        margin = quad_margin(x, y)
        if margin == 0:
            equal.append((x, y))
        if worst is None or margin < worst[0]:
            worst = (margin, (x, y))
    assert worst is not None
    return QuadScanResult(worst[0] >= 0, worst[0], worst[1], equal)


def random_congestion_spec(
    rng: np.random.Generator,
    *,
    max_players: int = 4,
    max_resources: int = 4,
    max_strategies: int = 3,
    alphas: Sequence[Fraction] = (Fraction(1), Fraction(2), Fraction(1, 2), Fraction(3)),
) -> CongestionSpec:
    n = int(rng.integers(1, max_players + 1))
    m = int(rng.integers(1, max_resources + 1))
    alpha = tuple(alphas[int(rng.integers(0, len(alphas)))] for _ in range(m))
    strategies = []
    for _ in range(n):
        count = int(rng.integers(1, max_strategies + 1))
        options = []
        for _ in range(count):
            mask = rng.random(m) < 0.5
            if not mask.any():
                mask[int(rng.integers(0, m))] = True
            options.append(frozenset(int(e) for e in np.flatnonzero(mask)))
        strategies.append(tuple(options))
    return CongestionSpec(alpha, tuple(strategies))
