"""Seeded random sweeps that check upper bounds on inefficiency ratios."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from .congestion import (
    SmoothnessParams,
    build_congestion_game,
    check_smoothness,
    random_congestion_spec,
)
from .contribution import build_contribution_game, random_contribution_spec
from .core import Game, TribePartition, format_fraction
from .equilibria import (
    OLIGOPOLISTIC,
    UNILATERAL,
    DeviationConcept,
    PotReport,
    compute_optimum,
    compute_pot,
    pairwise,
)
from .grouping import build_grouping_game, random_grouping_spec
from .partitions import sweep_partitions

LEMMA_PARAMS = SmoothnessParams(Fraction(8, 3), Fraction(1, 3))


@dataclass
class SweepStat:
    label: str
    bound: Fraction
    instances: int = 0
    with_equilibria: int = 0
    max_ratio: Fraction | None = None
    argmax: dict[str, Any] | None = None
    violations: list[dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, report: PotReport, instance: dict[str, Any]) -> None:
        self.instances += 1
        if report.equilibrium_count == 0:
            return
        self.with_equilibria += 1
        if report.ratio is None:
            self.violations.append({"instance": instance, "ratio": "inf"})
            return
        if self.max_ratio is None or report.ratio > self.max_ratio:
            self.max_ratio = report.ratio
            self.argmax = {
                "instance": instance,
                "profile": list(report.worst_eq_profile or ()),
                "tribe_of": list(report.worst_eq_partition.tribe_of) if report.worst_eq_partition else None,
            }
        if report.ratio > self.bound:
            self.violations.append({"instance": instance, "ratio": format_fraction(report.ratio)})

    def to_json(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "bound": format_fraction(self.bound),
            "instances": self.instances,
            "with_equilibria": self.with_equilibria,
            "max_ratio": None if self.max_ratio is None else format_fraction(self.max_ratio),
            "argmax": self.argmax,
            "violations": self.violations,
            "passed": self.passed,
        }


def _pot_family(
    game: Game,
    concept: DeviationConcept,
    stats: dict[str, SweepStat],
    instance: dict[str, Any],
    workers: int,
) -> dict[str, PotReport]:
    """Run the standard partition classes on one game and feed the matching stats."""
    n = game.player_count
    optimum = compute_optimum(game)
    classes: dict[str, list[TribePartition]] = {
        "pot_all": list(sweep_partitions(n)),
        "singleton": [TribePartition.singleton(n)],
        "constant": [TribePartition.constant(n)],
    }
    reports = {}
    for key, partitions in classes.items():
        if key in stats:
            reports[key] = compute_pot(game, partitions, concept, workers=workers, optimum=optimum)
            stats[key].record(reports[key], instance)
    if "oligopolistic" in stats:
        reports["oligopolistic"] = compute_pot(
            game, classes["pot_all"], OLIGOPOLISTIC, workers=workers, optimum=optimum)
        stats["oligopolistic"].record(reports["oligopolistic"], instance)
    return reports


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def grouping_sweep(
    count: int,
    seed: int,
    *,
    k: int = 2,
    max_players: int = 5,
    max_weight: int = 3,
    workers: int = 1,
    on_instance: Callable[[Game, dict[str, PotReport]], None] | None = None,
) -> dict[str, SweepStat]:
    rng = _rng(seed, 100 + k)
    stats = {
        "pot_all": SweepStat(f"grouping k={k}, all partitions, unilateral", Fraction(2 * k - 1)),
        "singleton": SweepStat(f"grouping k={k}, selfish", Fraction(k)),
        "constant": SweepStat(f"grouping k={k}, altruistic", Fraction(k)),
    }
    if k == 2:
        stats["oligopolistic"] = SweepStat("grouping k=2, oligopolistic", Fraction(2))
    for _ in range(count):
        n = int(rng.integers(2, max_players + 1))
        spec = random_grouping_spec(rng, n, k, max_weight)
        game = build_grouping_game(spec)
        reports = _pot_family(game, UNILATERAL, stats, spec.to_json(), workers)
        if on_instance is not None:
            on_instance(game, reports)
    return stats


def contribution_sweep(
    count: int,
    seed: int,
    *,
    additive: bool,
    workers: int = 1,
    on_instance: Callable[[Game, dict[str, PotReport]], None] | None = None,
) -> dict[str, SweepStat]:
    """Additive rewards under unilateral deviations, product rewards under pairwise ones."""
    rng = _rng(seed, 200 if additive else 300)
    name = "additive" if additive else "convex"
    concept = UNILATERAL if additive else pairwise()
    bounds = (2, 1, 1) if additive else (4, 2, 2)
    stats = {
        "pot_all": SweepStat(f"contribution {name}, all partitions", Fraction(bounds[0])),
        "singleton": SweepStat(f"contribution {name}, selfish", Fraction(bounds[1])),
        "constant": SweepStat(f"contribution {name}, altruistic", Fraction(bounds[2])),
    }
    for _ in range(count):
        spec = random_contribution_spec(rng, additive=additive)
        game = build_contribution_game(spec)
        reports = _pot_family(game, concept, stats, spec.to_json(), workers)
        if on_instance is not None:
            on_instance(game, reports)
    return stats


@dataclass
class SmoothnessStat:
    label: str
    instances: int = 0
    checks: int = 0
    worst_slack: Fraction | None = None
    violations: list[dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "instances": self.instances,
            "checks": self.checks,
            "worst_slack": None if self.worst_slack is None else format_fraction(self.worst_slack),
            "violations": self.violations,
            "passed": self.passed,
        }


def congestion_sweep(
    count: int,
    seed: int,
    *,
    workers: int = 1,
    on_instance: Callable[[Game, dict[str, PotReport]], None] | None = None,
) -> tuple[dict[str, SweepStat], SmoothnessStat]:
    """Random atomic linear congestion games: ratio bounds plus exhaustive smoothness on every partition."""
    rng = _rng(seed, 400)
    stats = {
        "pot_all": SweepStat("congestion, all partitions", Fraction(4)),
        "singleton": SweepStat("congestion, selfish", Fraction(5, 2)),
        "constant": SweepStat("congestion, altruistic", Fraction(3)),
    }
    smooth = SmoothnessStat("congestion, (8/3, 1/3)-smoothness, all partitions")
    for _ in range(count):
        spec = random_congestion_spec(rng)
        game = build_congestion_game(spec)
        reports = _pot_family(game, UNILATERAL, stats, spec.to_json(), workers)
        smooth.instances += 1
        for partition in sweep_partitions(game.player_count):
            result = check_smoothness(game, partition, LEMMA_PARAMS)
            smooth.checks += 1
            if smooth.worst_slack is None or result.worst_slack < smooth.worst_slack:
                smooth.worst_slack = result.worst_slack
            if not result.holds:
                smooth.violations.append({
                    "instance": spec.to_json(),
                    "tribe_of": list(partition.tribe_of),
                    "slack": format_fraction(result.worst_slack),
                })
        if on_instance is not None:
            on_instance(game, reports)
    return stats, smooth
