"""Command-line interface: ``limidcr <command> ...``.

Exit codes: 0 success (``solve``: proven optimal), 2 ``solve`` stopped by a
limit before proving optimality, 1 bad input or any other failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import io
from .bench import EboMapping, RandomSpec, alternative_ebo_mappings, build_ebo, ebo_mapping_sweep, gen_random_diagram, run_benchmark
from .credal import limid_to_credal
from .errors import LimidError
from .lpformat import export_lp
from .model import Strategy, brute_force_meu, expected_utility, normalize_utilities
from .reform import build_milp
from .solver import LOG_HEADER, SolveOptions, SolveStatus, solve_meu, spu

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_STOPPED = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _solve_options(args) -> SolveOptions:
    return SolveOptions(
        time_limit=args.time_limit,
        node_limit=args.node_limit,
        gap_tolerance=args.gap,
        search=args.search,
        warm_start="none" if args.no_warm_start else "spu",
        lp_backend=args.lp,
    )


def cmd_solve(args) -> int:
    diagram = io.load_diagram(args.diagram)
    log = open(args.log, "w") if args.log else None
    try:
        if log:
            log.write(LOG_HEADER + "\n")
        result = solve_meu(diagram, _solve_options(args), on_event=(lambda ev: log.write(ev.tsv() + "\n")) if log else None)
    finally:
        if log:
            log.close()
    doc = io.result_to_dict(
        diagram, result.strategy, result.eu, upper_bound=result.upper_bound, gap_percent=result.gap_percent,
        nodes_evaluated=result.nodes_evaluated, status=result.status,
    )
    sys.stdout.write(io.dumps(doc))
    return EXIT_OK if result.status is SolveStatus.PROVEN else EXIT_STOPPED


def cmd_spu(args) -> int:
    diagram = io.load_diagram(args.diagram)
    if args.init in (None, "zero"):
        init = Strategy.first(diagram)
    else:
        with open(args.init) as fh:
            init = io.strategy_from_dict(diagram, json.load(fh))
    strategy, eu = spu(diagram, init=init, max_sweeps=args.max_sweeps)
    sys.stdout.write(io.dumps(io.result_to_dict(diagram, strategy, eu)))
    return EXIT_OK


def cmd_brute(args) -> int:
    diagram = io.load_diagram(args.diagram)
    strategy, eu = brute_force_meu(diagram)
    sys.stdout.write(io.dumps(io.result_to_dict(diagram, strategy, eu)))
    return EXIT_OK


def cmd_eu(args) -> int:
    diagram = io.load_diagram(args.diagram)
    with open(args.strategy) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise io.DocumentError("<root>", f"not valid JSON ({exc})") from None
    strategy = io.strategy_from_dict(diagram, doc)
    sys.stdout.write(io.dumps({"eu": expected_utility(diagram, strategy)}))
    return EXIT_OK


def cmd_export_lp(args) -> int:
    diagram = io.load_diagram(args.diagram)
    normalized, _ = normalize_utilities(diagram)
    _emit(export_lp(build_milp(limid_to_credal(normalized))), args.out)
    return EXIT_OK


def cmd_gen_random(args) -> int:
    spec = RandomSpec(args.total, args.decisions, args.utilities, args.max_parents, seed=args.seed)
    _emit(io.dumps(io.diagram_to_dict(gen_random_diagram(spec))), args.out)
    return EXIT_OK


def cmd_ebo(args) -> int:
    if args.sweep:
        lines = ["mapping\tbrute_eu\tsolve_eu\tstatus\tabs_diff\tall_actions_eu\tbrute_choices"]
        for o in ebo_mapping_sweep(None, SolveOptions()):
            lines.append(f"{o.label}\t{o.brute_eu:.10g}\t{o.solve_eu:.10g}\t{o.status}\t{o.agreement:.3g}\t"
                         f"{o.all_actions_eu:.10g}\t{''.join(map(str, o.brute_choices))}")
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    mappings = {m.label: m for m in [EboMapping()] + alternative_ebo_mappings()}
    if args.mapping not in mappings:
        raise LimidError(f"unknown mapping {args.mapping!r}; choose from {', '.join(mappings)}")
    _emit(io.dumps(io.diagram_to_dict(build_ebo(mappings[args.mapping]))), args.out)
    return EXIT_OK


def _spec(text: str) -> tuple[int, int]:
    try:
        total, decisions = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected TOTAL,DECISIONS, got {text!r}") from None
    return total, decisions


def cmd_bench(args) -> int:
    specs = [RandomSpec(t, d, max_parents=args.max_parents, seed=args.seed) for t, d in args.spec]
    options = SolveOptions(time_limit=args.time_limit, node_limit=args.node_limit)
    report = run_benchmark(specs, args.trials, options, include_ebo=args.ebo)
    timings = not args.no_timings
    if args.out:
        for path in report.write(args.out, timings):
            print(path)
    else:
        sys.stdout.write(report.to_tsv(timings))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="limidcr", description="Exact and anytime strategy selection for limited memory influence diagrams.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="globally optimal strategy by branch-and-bound")
    p.add_argument("diagram")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--gap", type=float, default=0.0, help="stop once the relative gap (percent) is at most this")
    p.add_argument("--search", choices=["best-bound", "depth-first"], default="best-bound")
    p.add_argument("--no-warm-start", action="store_true", help="skip the SPU incumbent")
    p.add_argument("--log", help="write the tab-separated run log here")
    p.add_argument("--lp", choices=["highs", "simplex"], default="highs", help="LP relaxation backend")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("spu", help="single policy updating local search")
    p.add_argument("diagram")
    p.add_argument("--init", default="zero", help="'zero' (alternative 0 everywhere) or a strategy JSON file")
    p.add_argument("--max-sweeps", type=int, default=100)
    p.set_defaults(func=cmd_spu)

    p = sub.add_parser("brute", help="exhaustive search over pure strategies")
    p.add_argument("diagram")
    p.set_defaults(func=cmd_brute)

    p = sub.add_parser("eu", help="expected utility of a strategy")
    p.add_argument("diagram")
    p.add_argument("strategy", help="result document or bare strategy map")
    p.set_defaults(func=cmd_eu)

    p = sub.add_parser("export-lp", help="write the 0/1 linear program in LP format")
    p.add_argument("diagram")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("gen-random", help="random diagram document")
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--decisions", type=int, required=True)
    p.add_argument("--utilities", type=int, default=None, help="defaults to the number of decisions")
    p.add_argument("--max-parents", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_gen_random)

    p = sub.add_parser("ebo", help="the EBO planning diagram")
    p.add_argument("--mapping", default="default", help="edge mapping label")
    p.add_argument("--sweep", action="store_true", help="solve every mapping and print a comparison table")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_ebo)

    p = sub.add_parser("bench", help="CR versus SPU on random diagrams")
    p.add_argument("--spec", type=_spec, action="append", required=True, metavar="TOTAL,DECISIONS")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-parents", type=int, default=3)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--ebo", action="store_true", help="append an EBO row")
    p.add_argument("--no-timings", action="store_true", help="write zero for every time column")
    p.add_argument("--out", help="directory for the .tsv and .json reports")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LimidError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
