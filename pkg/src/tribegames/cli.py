"""Command-line entry point.

Exit codes: 0 when every executed check passes, 1 when a check fails, 2 for
malformed input or configuration, 3 when an enumeration would exceed the
profile budget (set with TRIBEGAMES_PROFILE_BUDGET).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Sequence

from . import report as report_mod
from .congestion import (
    SmoothnessParams,
    build_congestion_game,
    build_routing_game,
    check_smoothness,
    gen_gk_tree,
    load_balancing_to_routing,
)
from .contribution import (
    build_contribution_game,
    convex_path_low_profile,
    gen_additive_chain,
    gen_altruistic_square,
    gen_convex_path,
    profile_from_allocations,
    square_light_profile,
)
from .core import (
    BudgetExceeded,
    ConfigurationError,
    Game,
    GameError,
    Orientation,
    Profile,
    TribePartition,
    as_fraction,
)
from .equilibria import (
    UNILATERAL,
    DeviationConcept,
    DeviationKind,
    check_profile,
    compute_pot,
    enumerate_equilibria,
    verify_witness,
)
from .grouping import Variant, build_grouping_game, gen_fig1, gen_figc_cycle, gen_k_family
from .partitions import sweep_partitions
from .serialize import (
    FormatError,
    dumps,
    equilibrium_report_to_json,
    format_ratio,
    game_to_json,
    load_game,
    partition_from_json,
    partitions_from_json,
    pot_report_to_json,
    profile_from_json,
    read_json,
    smoothness_to_json,
    write_json,
)

FAMILIES = (
    "fig1-selfish", "fig1-tribal", "grouping-k", "additive-chain",
    "convex-path", "altruistic-square", "gk-tree", "figc-cycle",
)

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# gen


def generate(family: str, *, k: int | None = None, epsilon: str | None = None, grid: int = 1,
             variant: str = "tribal", routing: bool = False) -> dict[str, Any]:
    """Build a named instance; the container suggests its partition and its notable profile."""
    if family in ("fig1-selfish", "fig1-tribal"):
        v = Variant.SELFISH_ALTRUISTIC if family == "fig1-selfish" else Variant.TRIBAL
        spec, partition, profile = gen_fig1(v)
        return game_to_json(build_grouping_game(spec), partition, profile)
    if family == "figc-cycle":
        spec, partition, profile = gen_figc_cycle()
        return game_to_json(build_grouping_game(spec), partition, profile)
    if family == "grouping-k":
        spec, partition, profile = gen_k_family(2 if k is None else k, Variant(variant))
        return game_to_json(build_grouping_game(spec), partition, profile)
    if family == "additive-chain":
        spec, partition = gen_additive_chain(grid)
        right_edge = profile_from_allocations(spec, [{}, {1: 1}, {}])
        return game_to_json(build_contribution_game(spec), partition, right_edge)
    if family == "convex-path":
        spec, partition = gen_convex_path(as_fraction(epsilon or "1/100"), grid)
        return game_to_json(build_contribution_game(spec), partition, convex_path_low_profile(spec))
    if family == "altruistic-square":
        spec, partition = gen_altruistic_square(as_fraction(epsilon or "1/10"), grid)
        return game_to_json(build_contribution_game(spec), partition, square_light_profile(spec))
    if family == "gk-tree":
        tree = gen_gk_tree(2 if k is None else k)
        game = (build_routing_game(load_balancing_to_routing(tree.spec)) if routing
                else build_congestion_game(tree.spec))
        return game_to_json(game, tree.partition, tree.nash_profile)
    raise ConfigurationError(f"unknown family {family!r}")


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.routing and args.family != "gk-tree":
        raise ConfigurationError("--routing only applies to the gk-tree family")
    data = generate(args.family, k=args.k, epsilon=args.epsilon, grid=args.grid,
                    variant=args.variant, routing=args.routing)
    _emit(data, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# shared argument handling


def _emit(data: Any, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(dumps(data))
    else:
        write_json(output, data)


def _suggested(suggested: dict[str, Any], key: str, game_path: str) -> Any:
    if key not in suggested:
        raise FormatError(f"{game_path}: $.suggested.{key}", "missing; the game file suggests nothing here")
    return suggested


def _partition(spec: str, game: Game, suggested: dict[str, Any], game_path: str) -> TribePartition:
    n = game.player_count
    if spec == "singleton":
        return TribePartition.singleton(n)
    if spec == "constant":
        return TribePartition.constant(n)
    if spec == "suggested":
        return partition_from_json(_suggested(suggested, "tribe_of", game_path), n, f"{game_path}: $.suggested")
    return partition_from_json(read_json(spec), n, f"{spec}: $")


def _partitions(spec: str, game: Game, suggested: dict[str, Any], game_path: str) -> list[TribePartition]:
    if spec == "all":
        return list(sweep_partitions(game))
    if spec.startswith("k="):
        try:
            count = int(spec[2:])
        except ValueError:
            raise ConfigurationError(f"bad tribe count in --partitions {spec!r}") from None
        return list(sweep_partitions(game, count))
    if spec in ("singleton", "constant", "suggested"):
        return [_partition(spec, game, suggested, game_path)]
    return partitions_from_json(read_json(spec), game.player_count, spec)


def _concept(args: argparse.Namespace) -> DeviationConcept:
    concept = DeviationConcept.parse(args.concept)
    if args.weak_pairs:
        if concept.kind is not DeviationKind.PAIRWISE:
            raise ConfigurationError("--weak-pairs only applies to the pairwise concept")
        concept = DeviationConcept(concept.kind, concept.adjacency, both_strict=False)
    return concept


def _rational(text: str) -> Any:
    try:
        return as_fraction(text)
    except GameError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ---------------------------------------------------------------------------
# solve / pot / smoothness


def _cmd_solve(args: argparse.Namespace) -> int:
    game, suggested = load_game(args.game)
    partition = _partition(args.partition, game, suggested, args.game)
    concept = _concept(args)
    if args.profile is None:
        reports = enumerate_equilibria(game, partition, concept, workers=args.workers)
        _emit({
            "concept": concept.kind.value,
            "tribe_of": list(partition.tribe_of),
            "count": len(reports),
            "equilibria": [equilibrium_report_to_json(r, partition) for r in reports],
        }, args.output)
        return EXIT_OK
    if args.profile == "suggested":
        profile = profile_from_json(_suggested(suggested, "profile", args.game), game, f"{args.game}: $.suggested")
    else:
        profile = profile_from_json(read_json(args.profile), game, f"{args.profile}: $")
    return _solve_profile(game, partition, profile, concept, args.output)


def _solve_profile(game: Game, partition: TribePartition, profile: Profile, concept: DeviationConcept,
                   output: str | None) -> int:
    # unilateral stability is cheap and gives context; joint tribe moves can be exponential
    concepts = [concept] + [c for c in (UNILATERAL,) if c.kind is not concept.kind]
    report = check_profile(game, partition, profile, concepts)
    verified = all(
        verify_witness(game, partition, profile, next(c for c in concepts if c.kind is kind), w)
        for kind, w in report.witnesses.items()
    )
    data = equilibrium_report_to_json(report, partition)
    data["concept"] = concept.kind.value
    data["equilibrium"] = report.survives[concept.kind]
    data["witnesses_verified"] = verified
    _emit(data, output)
    return EXIT_OK if data["equilibrium"] and verified else EXIT_FAILED


def _cmd_pot(args: argparse.Namespace) -> int:
    game, suggested = load_game(args.game)
    partitions = _partitions(args.partitions, game, suggested, args.game)
    report = compute_pot(game, partitions, _concept(args), workers=args.workers)
    data = pot_report_to_json(report)
    status = EXIT_OK
    if args.expect is not None:
        expected = format_ratio(as_fraction(args.expect)) if args.expect != "inf" else "inf"
        data["expected"] = expected
        data["matches_expected"] = data["ratio"] == expected
        status = EXIT_OK if data["matches_expected"] else EXIT_FAILED
    _emit(data, args.output)
    return status


def _cmd_smoothness(args: argparse.Namespace) -> int:
    game, suggested = load_game(args.game)
    if game.orientation is not Orientation.COST:
        raise ConfigurationError("smoothness applies to cost-minimisation games")
    partition = _partition(args.partition, game, suggested, args.game)
    try:
        params = SmoothnessParams(args.lam, args.mu)
    except GameError as exc:
        raise ConfigurationError(str(exc)) from exc
    result = check_smoothness(game, partition, params, sample=args.sample, seed=args.seed)
    _emit(smoothness_to_json(result, params.lam, params.mu, partition), args.output)
    return EXIT_OK if result.holds else EXIT_FAILED


# ---------------------------------------------------------------------------
# reproduce


def _cmd_reproduce(args: argparse.Namespace) -> int:
    result, witnesses = report_mod.reproduce(fast=args.fast, seed=args.seed, workers=args.workers)
    out = Path(args.out)
    (out / "witnesses").mkdir(parents=True, exist_ok=True)
    for key, container in sorted(witnesses.items()):
        write_json(out / "witnesses" / f"{key}.json", container)
    write_json(out / "report.json", result)
    text = report_mod.emit_table1(result)
    (out / "table1.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if result["passed"] else EXIT_FAILED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tribegames", description="Equilibria and inefficiency of tribal games.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a named instance as a game file")
    gen.add_argument("--family", choices=FAMILIES, required=True)
    gen.add_argument("--k", type=int, help="cliques for grouping-k, depth for gk-tree (default 2)")
    gen.add_argument("--epsilon", help="rational epsilon, e.g. 1/100")
    gen.add_argument("--grid", type=int, default=1, help="budget grid denominator for contribution games")
    gen.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.TRIBAL.value,
                     help="weights of the grouping-k family")
    gen.add_argument("--routing", action="store_true", help="emit gk-tree as its routing network")
    gen.add_argument("-o", "--output", help="output file (default stdout)")
    gen.set_defaults(func=_cmd_gen)

    def analysis(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--game", required=True, help="game file")
        p.add_argument("-o", "--output", help="output file (default stdout)")
        return p

    def concept_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--concept", default="unilateral", choices=[k.value for k in DeviationKind])
        p.add_argument("--weak-pairs", action="store_true",
                       help="pairwise: one tribe must gain strictly, the other must not lose")
        p.add_argument("--workers", type=int, default=1)

    partition_help = "singleton, constant, suggested, or a partition file"
    solve = analysis("solve", "check one profile, or list every equilibrium")
    solve.add_argument("--partition", required=True, help=partition_help)
    solve.add_argument("--profile", help="profile file, or 'suggested'; omit to enumerate all equilibria")
    concept_args(solve)
    solve.set_defaults(func=_cmd_solve)

    pot = analysis("pot", "worst equilibrium against the optimum over a set of partitions")
    pot.add_argument("--partitions", required=True, help="all, k=N, singleton, constant, suggested, or a file")
    pot.add_argument("--expect", help="exit 1 unless the ratio equals this rational (or 'inf')")
    concept_args(pot)
    pot.set_defaults(func=_cmd_pot)

    smooth = analysis("smoothness", "check the tribal smoothness inequality")
    smooth.add_argument("--partition", required=True, help=partition_help)
    smooth.add_argument("--lambda", dest="lam", type=_rational, required=True)
    smooth.add_argument("--mu", type=_rational, required=True)
    smooth.add_argument("--sample", type=int, help="check this many random profile pairs instead of all")
    smooth.add_argument("--seed", type=int, default=0)
    smooth.set_defaults(func=_cmd_smoothness)

    rep = sub.add_parser("reproduce", help="rebuild the summary table with witnesses and sweeps")
    rep.add_argument("--fast", action="store_true", help="smaller sweeps and instances")
    rep.add_argument("--seed", type=int, default=report_mod.DEFAULT_SEED)
    rep.add_argument("--workers", type=int, default=1)
    rep.add_argument("--out", default="reproduce-out", help="directory for report.json, table1.txt and witnesses")
    rep.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be positive")
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"tribegames: refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except GameError as exc:
        print(f"tribegames: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
