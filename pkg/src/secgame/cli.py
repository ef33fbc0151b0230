"""Command-line interface.

Verbs:
  gen-topology     sample a topology + one channel realization to JSON
  run              run the experiment described by a spec file
  sweep            alias of run that requires a sweep axis in the spec
  check-uniqueness evaluate the uniqueness condition per trial
  report           recompute and print aggregates from an output directory

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

import argparse
import json
import os
import sys

from .exceptions import ConfigError, SecgameError
from .harness import (
    OUT_DIR_ENV,
    aggregate_rows,
    check_uniqueness,
    parse_spec,
    read_csv,
    run_experiment,
    write_csv,
    AGGREGATE_COLUMNS,
)
from .network import sample_channels, sample_topology, save_instance


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="secgame",
        description="Secrecy-game solvers for MIMO wiretap interference networks",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, spec_required=True):
        p.add_argument("--spec", required=spec_required, help="experiment spec (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override base seed")
        p.add_argument("--out", default=None,
                       help=f"output directory (default: spec, then ${OUT_DIR_ENV})")

    p = sub.add_parser("gen-topology", help="sample a topology and channels to JSON")
    common(p)

    for verb in ("run", "sweep"):
        p = sub.add_parser(verb, help=f"{verb} an experiment")
        common(p)
        p.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
        p.add_argument("--algorithms", default=None,
                       help="comma-separated override of the spec's algorithm list")
        trace = p.add_mutually_exclusive_group()
        trace.add_argument("--trace", dest="trace", action="store_true", default=None)
        trace.add_argument("--no-trace", dest="trace", action="store_false")

    p = sub.add_parser("check-uniqueness", help="uniqueness-condition report")
    common(p)
    p.add_argument("--point", choices=("init", "converged"), default="init")

    p = sub.add_parser("report", help="recompute aggregates from trials.csv")
    p.add_argument("--out", required=True, help="experiment output directory")
    return parser


def _load_spec(args):
    spec = parse_spec(args.spec)
    if args.seed is not None:
        spec.base_seed = args.seed
    if getattr(args, "algorithms", None):
        spec.algorithms = tuple(args.algorithms.split(","))
        from .harness import spec_from_dict

        spec = spec_from_dict(spec.to_dict() | {"algorithms": list(spec.algorithms)})
        if args.seed is not None:
            spec.base_seed = args.seed
    if getattr(args, "trace", None) is not None:
        spec.trace = args.trace
    return spec


def _out_dir(args, spec=None):
    return (
        args.out
        or (spec.out_dir if spec else None)
        or os.environ.get(OUT_DIR_ENV)
        or "secgame-out"
    )


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _run_verb(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except SecgameError as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return 2


def _run_verb(args):
    if args.verb == "gen-topology":
        spec = _load_spec(args)
        out_dir = _out_dir(args, spec)
        os.makedirs(out_dir, exist_ok=True)
        net = spec.network_config()
        topo = sample_topology(net, spec.base_seed)
        channels = sample_channels(topo, net, spec.base_seed + 1)
        path = os.path.join(out_dir, "instance.json")
        save_instance(path, topo, channels)
        print(path)
        return 0

    if args.verb in ("run", "sweep"):
        spec = _load_spec(args)
        if args.verb == "sweep" and spec.sweep_axis is None:
            raise ConfigError("sweep requires a 'sweep' section in the spec")
        _, aggregates, paths = run_experiment(spec, out_dir=_out_dir(args, spec),
                                              jobs=args.jobs)
        for agg in aggregates:
            print(
                f"{agg['sweep_value']!s:>8} {agg['algorithm']:<14} "
                f"secrecy={agg['secrecy_sum_rate_mean']:.4f} "
                f"conv={agg['convergence_fraction']:.2f}"
            )
        for path in paths:
            print(path)
        return 0

    if args.verb == "check-uniqueness":
        spec = _load_spec(args)
        _, fractions, paths = check_uniqueness(spec, point=args.point,
                                               out_dir=_out_dir(args, spec))
        for sweep_value, fraction in fractions.items():
            print(f"{sweep_value!s:>8} unique_fraction={fraction:.3f}")
        for path in paths:
            print(path)
        return 0

    if args.verb == "report":
        trials_path = os.path.join(args.out, "trials.csv")
        _, rows = read_csv(trials_path)
        aggregates = aggregate_rows(rows)
        agg_path = os.path.join(args.out, "aggregates_recomputed.csv")
        write_csv(agg_path, AGGREGATE_COLUMNS, aggregates)
        for agg in aggregates:
            print(
                f"{agg['sweep_value']!s:>8} {agg['algorithm']:<14} "
                f"secrecy={agg['secrecy_sum_rate_mean']:.4f} "
                f"conv={agg['convergence_fraction']:.2f}"
            )
        print(agg_path)
        return 0

    raise ConfigError(f"unknown verb {args.verb!r}")


if __name__ == "__main__":
    sys.exit(main())
