"""Command line front end.

Exit status: 0 on success, 1 on a usage error, 2 on bad input files.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .acs import AcsParams, Denominator, LocalSearch, Tau0Rule, run
from .bench import ExperimentConfig, ablation, render_ablation, render_report, run_experiment, write_ablation_outputs, write_outputs
from .instance import InstanceError, canonical, check_feasible
from .registry import BestKnownRegistry
from .tsplib import TsplibParseError, cluster_instance, load, parse_tsplib, to_instance, write_gtsp

OUTPUT_ENV = "GTSP_ACS_OUTPUT_DIR"
EXIT_USAGE = 1
EXIT_INPUT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_params(p: argparse.ArgumentParser) -> None:
    d = AcsParams()
    p.add_argument("--beta", type=float, default=d.beta, help="visibility exponent (default %(default)s)")
    p.add_argument("--rho", type=float, default=d.rho, help="global evaporation rate (default %(default)s)")
    p.add_argument("--xi", type=float, default=d.xi, help="local update rate (default %(default)s)")
    p.add_argument("--q0", type=float, default=d.q0, help="exploitation probability (default %(default)s)")
    p.add_argument("--delta", type=int, default=d.delta, help="stop after this many iterations without improvement (default %(default)s)")
    p.add_argument("--ants", type=int, default=d.num_ants, help="number of ants (default %(default)s)")
    p.add_argument("--seed", type=int, default=d.seed, help="random seed (default %(default)s)")
    p.add_argument("--ls", choices=[x.value for x in LocalSearch], default=d.local_search.value, help="local search (default %(default)s)")
    p.add_argument("--local-update-denominator", choices=[x.value for x in Denominator], default=d.local_update_denominator.value,
                   help="use n (nodes) or m (clusters) in the local update (default %(default)s)")
    p.add_argument("--tau0", choices=[x.value for x in Tau0Rule], default=d.tau0_rule.value,
                   help="initial pheromone rule (default %(default)s)")
    p.add_argument("--quick-3opt", type=int, default=d.quick_depth, metavar="DEPTH",
                   help="first-improvement 3-opt phase on DEPTH-nearest neighbour lists before best-improvement; faster, 0 = off (default %(default)s)")
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--max-time", type=float, default=None, help="wall-clock cap in seconds")


def _params(args: argparse.Namespace) -> AcsParams:
    try:
        return AcsParams(
            beta=args.beta, rho=args.rho, xi=args.xi, q0=args.q0, delta=args.delta, num_ants=args.ants,
            seed=args.seed, local_search=args.ls, local_update_denominator=args.local_update_denominator,
            tau0_rule=args.tau0, quick_depth=args.quick_3opt, max_iterations=args.max_iterations, max_time=args.max_time,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gtsp-acs", description="Hybrid ant colony system for the generalized TSP.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("file", type=Path, help="GTSP file, or a TSPLIB file to cluster first")
    _add_params(p)
    p.add_argument("--trace", type=Path, help="write per-iteration records (JSON lines) here")

    for name, text in (("bench", "run the benchmark protocol"), ("ablate", "compare composite and 3-opt-only local search")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, required=True, help="JSON experiment config")
        p.add_argument("--output", type=Path, help=f"output directory (default: config, then ${OUTPUT_ENV}, then ./results)")
        p.add_argument("--workers", type=int, help="override the worker cap of the config")

    p = sub.add_parser("cluster", help="cluster a TSPLIB file into a GTSP file")
    p.add_argument("file", type=Path)
    p.add_argument("-o", "--output", type=Path, help="write here instead of standard output")

    p = sub.add_parser("validate", help="check file format and instance invariants")
    p.add_argument("file", type=Path)
    return parser


def _solve(args) -> int:
    params = _params(args)
    instance = load(args.file)
    if args.trace:
        with open(args.trace, "w") as fh:
            result = run(instance, params, trace_file=fh)
    else:
        result = run(instance, params)
    check_feasible(instance, result.tour.nodes)
    print(f"instance: {instance.name} (n={instance.n}, m={instance.m})")
    print(f"weight: {result.weight}")
    print("tour: " + " ".join(str(v + 1) for v in canonical(result.tour.nodes)))
    print(f"iterations: {result.iterations}")
    print(f"time: {result.elapsed:.3f} s")
    best = BestKnownRegistry.default().get(instance.name)
    if best is not None:
        print(f"best known: {best}")
    if result.terminated_by_cap:
        print("terminated_by_cap: true")
    return 0


def _output_dir(args, cfg: ExperimentConfig) -> Path:
    if args.output:
        return args.output
    if cfg.output_dir is not None:
        return cfg.output_dir
    return Path(os.environ.get(OUTPUT_ENV, "results"))


def _experiment(args, paired: bool) -> int:
    try:
        cfg = ExperimentConfig.load(args.config)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.config}: {exc}") from exc
    if args.workers:
        cfg.workers = args.workers
    instances = cfg.load_instances()
    out = _output_dir(args, cfg)
    trace_dir = out / "traces" if cfg.trace else None
    if paired:
        pairs = ablation(instances, cfg.params, cfg.repeats, cfg.registry(), cfg.workers, trace_dir)
        write_ablation_outputs(pairs, out)
        print(render_ablation(pairs, "markdown"), end="")
    else:
        reports = run_experiment(instances, cfg.params, cfg.repeats, cfg.registry(), cfg.workers, trace_dir)
        write_outputs(reports, out, with_reference=True)
        print(render_report(reports, "markdown", with_reference=True), end="")
    print(f"results written to {out}", file=sys.stderr)
    return 0


def _cluster(args) -> int:
    data = parse_tsplib(args.file.read_text(), str(args.file))
    instance = cluster_instance(data)
    text = write_gtsp(instance, comment=f"{instance.m} clusters generated from {data.name}")
    if args.output:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _validate(args) -> int:
    data = parse_tsplib(args.file.read_text(), str(args.file))
    if data.sets is None:
        print(f"{args.file}: valid TSPLIB file ({data.name}, n={data.dimension}, {data.edge_weight_type}), no GTSP sets")
        return 0
    instance = to_instance(data, str(args.file))
    print(f"{args.file}: valid GTSP instance {instance.name} (n={instance.n}, m={instance.m}, s={instance.s}, gamma={instance.gamma})")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {
        "solve": _solve,
        "bench": lambda a: _experiment(a, paired=False),
        "ablate": lambda a: _experiment(a, paired=True),
        "cluster": _cluster,
        "validate": _validate,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"gtsp-acs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TsplibParseError, InstanceError, OSError) as exc:
        print(f"gtsp-acs: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # semantic input problems, e.g. too few nodes to cluster
        print(f"gtsp-acs: {args.__dict__.get('file', '')}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
