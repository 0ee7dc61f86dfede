"""JSON files for games, partitions, profiles and analysis reports.

Game files hold a container with the orientation, player count and strategy
counts next to a family payload.  An optional ``suggested`` block carries a
partition and a profile so that generated instances can be re-checked later.
Reports write every rational as "p/q" and an unbounded ratio as "inf".
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

from .congestion import (
    CongestionSpec,
    RoutingSpec,
    SmoothnessResult,
    build_congestion_game,
    build_routing_game,
)
from .contribution import ContributionSpec, build_contribution_game
from .core import (
    Game,
    GameError,
    Orientation,
    Profile,
    TribePartition,
    table_game,
)
from .equilibria import EquilibriumReport, PotReport
from .grouping import GroupingSpec, build_grouping_game


class FormatError(GameError, ValueError):
    """Malformed input, with a location such as ``game.json: $.family.weights``."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


def format_ratio(value: Fraction | None) -> str:
    """Report form of a rational: always "p/q", or "inf" for None."""
    if value is None:
        return "inf"
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2) + "\n"


def write_json(path: str | Path, data: Any) -> None:
    Path(path).write_text(dumps(data))


def parse_json(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}:{exc.lineno}:{exc.colno}", exc.msg) from exc


def read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(str(path), f"cannot read file ({exc.strerror})") from exc
    return parse_json(text, str(path))


def _field(obj: Any, key: str, kind: type | tuple[type, ...], where: str) -> Any:
    if not isinstance(obj, Mapping):
        raise FormatError(where, "expected an object")
    if key not in obj:
        raise FormatError(f"{where}.{key}", "missing field")
    value = obj[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise FormatError(f"{where}.{key}", f"expected {names}, got {type(value).__name__}")
    return value


def _int_list(value: Any, where: str) -> list[int]:
    if not isinstance(value, list):
        raise FormatError(where, "expected a list of integers")
    for k, x in enumerate(value):
        if not isinstance(x, int) or isinstance(x, bool):
            raise FormatError(f"{where}[{k}]", f"expected an integer, got {x!r}")
    return list(value)


# ---------------------------------------------------------------------------
# games

_FAMILY_BUILDERS = {
    "grouping": lambda data: build_grouping_game(GroupingSpec.from_json(data)),
    "contribution": lambda data: build_contribution_game(ContributionSpec.from_json(data)),
    "congestion": lambda data: build_congestion_game(CongestionSpec.from_json(data)),
    "routing": lambda data: build_routing_game(RoutingSpec.from_json(data)),
}


def game_to_json(
    game: Game,
    partition: TribePartition | None = None,
    profile: Sequence[int] | None = None,
) -> dict[str, Any]:
    if game.family is None:
        raise GameError(f"game {game.name or '<anonymous>'} has no serialisable family payload")
    data: dict[str, Any] = {
        "orientation": game.orientation.value,
        "players": game.player_count,
        "strategy_counts": list(game.strategy_counts),
        "family": game.family,
    }
    suggested: dict[str, Any] = {}
    if partition is not None:
        suggested["tribe_of"] = list(partition.tribe_of)
    if profile is not None:
        suggested["profile"] = list(profile)
    if suggested:
        data["suggested"] = suggested
    return data


def game_from_json(data: Any, source: str = "<game>") -> Game:
    root = f"{source}: $"
    orientation_name = _field(data, "orientation", str, root)
    try:
        orientation = Orientation(orientation_name)
    except ValueError:
        raise FormatError(f"{root}.orientation", f"expected 'cost' or 'utility', got {orientation_name!r}") from None
    players = _field(data, "players", int, root)
    counts = _int_list(_field(data, "strategy_counts", list, root), f"{root}.strategy_counts")
    family = _field(data, "family", dict, root)
    tag = _field(family, "family", str, f"{root}.family")
    where = f"{root}.family"
    try:
        if tag == "table":
            game = table_game(_field(family, "payoffs", list, where), counts, orientation)
        elif tag in _FAMILY_BUILDERS:
            game = _FAMILY_BUILDERS[tag](family)
        else:
            choices = ", ".join(sorted([*_FAMILY_BUILDERS, "table"]))
            raise FormatError(f"{where}.family", f"unknown family {tag!r} (expected one of {choices})")
    except FormatError:
        raise
    except KeyError as exc:
        raise FormatError(f"{where}.{exc.args[0]}", "missing field") from exc
    except (GameError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(where, f"invalid {tag} payload: {exc}") from exc
    if game.orientation is not orientation:
        raise FormatError(f"{root}.orientation", f"{tag} games are {game.orientation.value} games")
    if players != game.player_count:
        raise FormatError(f"{root}.players", f"declared {players}, family payload has {game.player_count}")
    if tuple(counts) != game.strategy_counts:
        raise FormatError(f"{root}.strategy_counts", f"declared {counts}, family payload gives {list(game.strategy_counts)}")
    return game


def load_game(path: str | Path) -> tuple[Game, dict[str, Any]]:
    """Read a game file; also returns its ``suggested`` block (possibly empty)."""
    data = read_json(path)
    game = game_from_json(data, str(path))
    suggested = data.get("suggested", {})
    if not isinstance(suggested, dict):
        raise FormatError(f"{path}: $.suggested", "expected an object")
    return game, suggested


# ---------------------------------------------------------------------------
# partitions and profiles


def partition_from_json(data: Any, players: int, where: str = "$") -> TribePartition:
    tribe_of = _int_list(_field(data, "tribe_of", list, where), f"{where}.tribe_of")
    return _partition(tribe_of, players, f"{where}.tribe_of")


def _partition(tribe_of: Sequence[int], players: int, where: str) -> TribePartition:
    if len(tribe_of) != players:
        raise FormatError(where, f"has {len(tribe_of)} entries for {players} players")
    try:
        return TribePartition.canonical(tribe_of)
    except GameError as exc:
        raise FormatError(where, str(exc)) from exc


def partitions_from_json(data: Any, players: int, source: str = "<partitions>") -> list[TribePartition]:
    """Either a single ``{"tribe_of": [...]}`` or ``{"partitions": [[...], ...]}``."""
    root = f"{source}: $"
    if isinstance(data, Mapping) and "partitions" in data:
        rows = _field(data, "partitions", list, root)
        return [_partition(_int_list(row, f"{root}.partitions[{k}]"), players, f"{root}.partitions[{k}]")
                for k, row in enumerate(rows)]
    return [partition_from_json(data, players, root)]


def profile_from_json(data: Any, game: Game, where: str = "$") -> Profile:
    values = _int_list(_field(data, "profile", list, where), f"{where}.profile")
    try:
        return game.check_profile(values)
    except GameError as exc:
        raise FormatError(f"{where}.profile", str(exc)) from exc


# ---------------------------------------------------------------------------
# reports


def equilibrium_report_to_json(report: EquilibriumReport, partition: TribePartition) -> dict[str, Any]:
    blocking = report.blocking_witness
    return {
        "profile": list(report.profile),
        "tribe_of": list(partition.tribe_of),
        "welfare": format_ratio(report.welfare),
        "survives": {kind.value: ok for kind, ok in report.survives.items()},
        "witnesses": {kind.value: w.to_json() for kind, w in report.witnesses.items()},
        "blocking_witness": None if blocking is None else blocking.to_json(),
    }


def pot_report_to_json(report: PotReport) -> dict[str, Any]:
    partition = report.worst_eq_partition
    return {
        "concept": report.concept.value,
        "optimum_welfare": format_ratio(report.optimum_welfare),
        "optimum_profile": list(report.optimum_profile),
        "worst_eq_welfare": None if report.worst_eq_welfare is None else format_ratio(report.worst_eq_welfare),
        "worst_eq_profile": None if report.worst_eq_profile is None else list(report.worst_eq_profile),
        "worst_eq_partition": None if partition is None else {"tribe_of": list(partition.tribe_of)},
        "ratio": format_ratio(report.ratio),
        "equilibrium_count": report.equilibrium_count,
        "partitions_checked": report.partitions_checked,
    }


def smoothness_to_json(result: SmoothnessResult, lam: Fraction, mu: Fraction, partition: TribePartition) -> dict[str, Any]:
    return {
        "lambda": format_ratio(lam),
        "mu": format_ratio(mu),
        "tribe_of": list(partition.tribe_of),
        "holds": result.holds,
        "worst_slack": format_ratio(result.worst_slack),
        "witness": None if result.witness is None else {"s": list(result.witness[0]), "s_prime": list(result.witness[1])},
        "pairs_checked": result.pairs_checked,
        "mode": result.mode,
        "seed": result.seed,
    }
