"""Network contribution games discretised on a budget grid.

Each player splits its budget over incident edges in multiples of 1/d (slack
allowed).  An edge {i, j} pays both endpoints f_e(x_i, x_j), where f_e is a
symmetric polynomial with nonnegative coefficients and no constant term.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .core import (
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
)

Term = tuple[Fraction, int, int]


@dataclass(frozen=True)
class RewardPolynomial:
    """f(x, y) = sum of coefficient * x**p * y**q over the terms."""

    terms: tuple[Term, ...]

    def __post_init__(self):
        merged: dict[tuple[int, int], Fraction] = {}
        for coef, p, q in self.terms:
            coef, p, q = as_fraction(coef), int(p), int(q)
            if coef < 0:
                raise ValidationError(f"negative coefficient {coef}")
            if p < 0 or q < 0:
                raise ValidationError(f"negative degree ({p}, {q})")
            if p == 0 and q == 0 and coef != 0:
                raise ValidationError("reward polynomials must vanish at (0, 0)")
            merged[(p, q)] = merged.get((p, q), Fraction(0)) + coef
        terms = tuple(sorted((c, p, q) for (p, q), c in merged.items() if c != 0))
        for c, p, q in terms:
            if merged.get((q, p)) != c:
                raise ValidationError(f"polynomial is not symmetric: term ({c}, {p}, {q}) has no mirror")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def additive(cls, c: Any) -> RewardPolynomial:
        c = as_fraction(c)
        return cls(((c, 1, 0), (c, 0, 1)))

    @classmethod
    def product(cls, c: Any = 1) -> RewardPolynomial:
        return cls(((as_fraction(c), 1, 1),))

    def scaled(self, factor: Any) -> RewardPolynomial:
        factor = as_fraction(factor)
        return RewardPolynomial(tuple((c * factor, p, q) for c, p, q in self.terms))

    def __call__(self, x: Fraction, y: Fraction) -> Fraction:
        return sum((c * Fraction(x) ** p * Fraction(y) ** q for c, p, q in self.terms), Fraction(0))

    @property
    def degree(self) -> int:
        return max((p + q for _, p, q in self.terms), default=0)

    def is_additive(self) -> bool:
        return len(self.terms) == 2 and {(p, q) for _, p, q in self.terms} == {(1, 0), (0, 1)}

    def is_coordinate_convex(self) -> bool:
        # nonnegative coefficients make every monomial convex in each coordinate;
        # f(x, 0) = 0 needs every term to contain y
        return all(q >= 1 for _, _, q in self.terms)

    def to_json(self) -> list[list[Any]]:
        return [[format_fraction(c), p, q] for c, p, q in self.terms]


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    reward: RewardPolynomial


@dataclass(frozen=True)
class ContributionSpec:
    vertex_count: int
    edges: tuple[Edge, ...]
    budgets: tuple[Fraction, ...]
    grid: int = 1

    def __post_init__(self):
        object.__setattr__(self, "budgets", tuple(as_fraction(b) for b in self.budgets))
        object.__setattr__(self, "edges", tuple(self.edges))
        n = self.vertex_count
        if n < 1:
            raise ValidationError("need at least one vertex")
        if len(self.budgets) != n:
            raise StructuralError(f"{len(self.budgets)} budgets for {n} vertices")
        if self.grid < 1:
            raise ValidationError(f"grid denominator must be positive, got {self.grid}")
        seen = set()
        for e in self.edges:
            if e.u == e.v:
                raise ValidationError(f"self-loop at vertex {e.u}")
            if not (0 <= e.u < n and 0 <= e.v < n):
                raise StructuralError(f"edge ({e.u}, {e.v}) outside 0..{n - 1}")
            key = (min(e.u, e.v), max(e.u, e.v))
            if key in seen:
                raise ValidationError(f"parallel edge {key}")
            seen.add(key)
        for i, b in enumerate(self.budgets):
            if b < 0:
                raise ValidationError(f"budget of vertex {i} is negative")
            if (b * self.grid).denominator != 1:
                raise ValidationError(f"budget {b} of vertex {i} is not a multiple of 1/{self.grid}")

    def with_grid(self, grid: int) -> ContributionSpec:
        return ContributionSpec(self.vertex_count, self.edges, self.budgets, grid)

    def incident(self, vertex: int) -> tuple[int, ...]:
        return tuple(k for k, e in enumerate(self.edges) if vertex in (e.u, e.v))

    def to_json(self) -> dict[str, Any]:
        return {
            "family": "contribution",
            "vertices": self.vertex_count,
            "edges": [{"u": e.u, "v": e.v, "terms": e.reward.to_json()} for e in self.edges],
            "budgets": [format_fraction(b) for b in self.budgets],
            "grid": self.grid,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> ContributionSpec:
        budgets = tuple(as_fraction(b) for b in data["budgets"])
        edges = tuple(
            Edge(int(e["u"]), int(e["v"]), RewardPolynomial(tuple(tuple(t) for t in e["terms"])))
            for e in data["edges"]
        )
        return cls(int(data.get("vertices", len(budgets))), edges, budgets, int(data.get("grid", 1)))


def compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """All tuples of ``parts`` nonnegative ints with sum <= total, lexicographic."""
    return [a for a in itertools.product(range(total + 1), repeat=parts) if sum(a) <= total]


def allocation_sets(spec: ContributionSpec) -> list[list[tuple[int, ...]]]:
    """Per player, its allocations in grid units over its incident edges (ascending edge index)."""
    out = []
    for i in range(spec.vertex_count):
        units = int(spec.budgets[i] * spec.grid)
        out.append(compositions(units, len(spec.incident(i))))
    return out


def build_contribution_game(spec: ContributionSpec) -> Game:
    """The finite utility game on the grid; its adjacency is the edge set."""
    n, d = spec.vertex_count, spec.grid
    allocs = allocation_sets(spec)
    incident = [spec.incident(i) for i in range(n)]
    slot = [{e: k for k, e in enumerate(incident[i])} for i in range(n)]
    max_deg = max((e.reward.degree for e in spec.edges), default=0)
    coef_lcm = lcm_of_denominators(c for e in spec.edges for c, _, _ in e.reward.terms)
    denom = coef_lcm * d**max_deg
    alloc_arrays = [np.array(a, dtype=np.int64).reshape(len(a), len(incident[i])) for i, a in enumerate(allocs)]

    bound = 0
    for e in spec.edges:
        bu, bv = int(spec.budgets[e.u] * d), int(spec.budgets[e.v] * d)
        bound += sum(int(c * coef_lcm) * max(bu, bv) ** (p + q) * d ** (max_deg - p - q) for c, p, q in e.reward.terms)
    dtype = int_dtype_for(bound)

    def contribution(i: int, strategy: int, edge: int) -> Fraction:
        return Fraction(allocs[i][strategy][slot[i][edge]], d)

    def payoffs(profile: Profile) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * n
        for k, e in enumerate(spec.edges):
            w = e.reward(contribution(e.u, profile[e.u], k), contribution(e.v, profile[e.v], k))
            out[e.u] += w
            out[e.v] += w
        return tuple(out)

    def table(profiles: np.ndarray) -> ExactTable:
        out = np.zeros(profiles.shape, dtype=dtype)
        for k, e in enumerate(spec.edges):
            x = alloc_arrays[e.u][profiles[:, e.u], slot[e.u][k]].astype(dtype)
            y = alloc_arrays[e.v][profiles[:, e.v], slot[e.v][k]].astype(dtype)
            w = np.zeros(len(profiles), dtype=dtype)
            for c, p, q in e.reward.terms:
                w = w + int(c * coef_lcm) * d ** (max_deg - p - q) * x**p * y**q
            out[:, e.u] += w
            out[:, e.v] += w
        return ExactTable(out, denom)

    return Game(
        strategy_counts=tuple(len(a) for a in allocs),
        payoffs=payoffs,
        orientation=Orientation.UTILITY,
        table=table,
        adjacency=frozenset((min(e.u, e.v), max(e.u, e.v)) for e in spec.edges),
        family=spec.to_json(),
        name=f"contribution(n={n},d={d})",
    )


def profile_from_allocations(spec: ContributionSpec, allocations: Sequence[Mapping[int, Any]]) -> Profile:
    """Map per-player {edge index: amount} dictionaries to strategy indices.

    Edges a player leaves out receive nothing.
    """
    if len(allocations) != spec.vertex_count:
        raise StructuralError(f"{len(allocations)} allocations for {spec.vertex_count} players")
    sets = allocation_sets(spec)
    out = []
    for i, amounts in enumerate(allocations):
        incident = spec.incident(i)
        unknown = set(amounts) - set(incident)
        if unknown:
            raise StructuralError(f"player {i} is not incident to edges {sorted(unknown)}")
        units = []
        for e in incident:
            u = as_fraction(amounts.get(e, 0)) * spec.grid
            if u.denominator != 1:
                raise ValidationError(f"amount on edge {e} is off the 1/{spec.grid} grid")
            units.append(int(u))
        try:
            out.append(sets[i].index(tuple(units)))
        except ValueError as exc:
            raise ValidationError(f"allocation {units} exceeds the budget of player {i}") from exc
    return tuple(out)


def allocations_of(spec: ContributionSpec, profile: Profile) -> list[dict[int, Fraction]]:
    sets = allocation_sets(spec)
    return [
        {e: Fraction(u, spec.grid) for e, u in zip(spec.incident(i), sets[i][s])}
        for i, s in enumerate(profile)
    ]


def is_tight(spec: ContributionSpec, profile: Profile) -> bool:
    """Every contribution is either nothing or the player's whole budget."""
    for i, amounts in enumerate(allocations_of(spec, profile)):
        if any(a not in (0, spec.budgets[i]) for a in amounts.values()):
            return False
    return True


def gen_additive_chain(grid: int = 1) -> tuple[ContributionSpec, TribePartition]:
    """Path left-mid-right, only mid has budget 1; rewards 2(x+y) left and (x+y) right."""
    edges = (
        Edge(0, 1, RewardPolynomial.additive(2)),
        Edge(1, 2, RewardPolynomial.additive(1)),
    )
    spec = ContributionSpec(3, edges, (Fraction(0), Fraction(1), Fraction(0)), grid)
    return spec, TribePartition((0, 1, 1))


def gen_convex_path(epsilon: Any, grid: int = 1) -> tuple[ContributionSpec, TribePartition]:
    """Six unit-budget players on a path with rewards eps*f, f, (1/2+eps)*f, f, eps*f where f = xy."""
    eps = as_fraction(epsilon)
    factors = (eps, Fraction(1), Fraction(1, 2) + eps, Fraction(1), eps)
    edges = tuple(Edge(k, k + 1, RewardPolynomial.product(c)) for k, c in enumerate(factors))
    spec = ContributionSpec(6, edges, (Fraction(1),) * 6, grid)
    return spec, TribePartition((0, 0, 1, 1, 0, 0))


def convex_path_low_profile(spec: ContributionSpec) -> Profile:
    """Everyone invests fully in the first, third and fifth edge."""
    return profile_from_allocations(spec, [{0: 1}, {0: 1}, {2: 1}, {2: 1}, {4: 1}, {4: 1}])


def gen_altruistic_square(epsilon: Any, grid: int = 1) -> tuple[ContributionSpec, TribePartition]:
    """4-cycle a-b-c-d with (1-eps)xy on {a,b}, {c,d} and xy/2 on {b,c}, {d,a}; full altruism."""
    eps = as_fraction(epsilon)
    heavy, light = RewardPolynomial.product(1 - eps), RewardPolynomial.product(Fraction(1, 2))
    edges = (Edge(0, 1, heavy), Edge(1, 2, light), Edge(2, 3, heavy), Edge(3, 0, light))
    spec = ContributionSpec(4, edges, (Fraction(1),) * 4, grid)
    return spec, TribePartition.constant(4)


def square_light_profile(spec: ContributionSpec) -> Profile:
    """Every player invests fully in its xy/2 edge."""
    return profile_from_allocations(spec, [{3: 1}, {1: 1}, {1: 1}, {3: 1}])


def random_contribution_spec(
    rng: np.random.Generator,
    *,
    additive: bool,
    max_vertices: int = 4,
    budgets: Sequence[int] = (0, 1, 2),
    grids: Iterable[int] = (1, 2),
    max_profiles: int = 20_000,
) -> ContributionSpec:
    """A random connected-or-not small instance; redraws until it fits ``max_profiles``."""
    grids = tuple(grids)
    while True:
        n = int(rng.integers(2, max_vertices + 1))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.6]
        if not pairs:
            pairs = [(0, 1)]
        edges = tuple(
            Edge(i, j, RewardPolynomial.additive(int(rng.integers(1, 4))) if additive
                 else RewardPolynomial.product(int(rng.integers(1, 4))))
            for i, j in pairs
        )
        b = tuple(Fraction(int(rng.choice(budgets))) for _ in range(n))
        spec = ContributionSpec(n, edges, b, int(rng.choice(grids)))
        if math.prod(len(a) for a in allocation_sets(spec)) <= max_profiles:
            return spec
