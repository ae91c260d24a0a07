"""Command-line entry point.

Subcommands:
    run      execute one benchmark figure campaign and write CSV files
    single   run one optimization instance and print its trace
    selftest run the built-in invariant checks

Exit codes: 0 on success, 2 on usage errors (argparse), 3 when the requested
configuration is infeasible, 1 on runtime failures. The environment variables
DUALRIS_SEED and DUALRIS_OUT supply defaults for the master seed and the
output directory; explicit flags always win over the environment, and the
environment wins over values from --config files.
"""

import argparse
import os
import sys
from dataclasses import replace

from .bench import desk_alt, desk_config, figure_campaign, paper_alt, paper_config, run_campaign
from .errors import ConvergenceError, InfeasibleError, NumericalError
from .model import draw_channels, ee_objective, load_config, sinr_and_rate
from .optimizer import optimize
from .selftest import run_selftest

ENV_SEED = "DUALRIS_SEED"
ENV_OUT = "DUALRIS_OUT"


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dualris",
        description="Benchmarks for joint beamforming and dual-surface phase optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one figure campaign and write CSVs")
    run_p.add_argument("--figure", type=int, required=True, choices=(2, 3, 4, 5, 6))
    run_p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    run_p.add_argument("--seed", type=int, default=None, help="master seed")
    run_p.add_argument("--out", default=None, help="output CSV path")
    run_p.add_argument("--config", default=None, help="key = value configuration file")
    run_p.add_argument("--draws", type=int, default=None, help="channel draws per grid point")

    single_p = sub.add_parser("single", help="one optimization run with a printed trace")
    single_p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    single_p.add_argument("--seed", type=int, default=None)
    single_p.add_argument("--config", default=None)

    sub.add_parser("selftest", help="run built-in invariant checks")
    return parser


def _resolve_seed(flag_value, cfg_seed):
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError as err:
            raise ValueError(f"{ENV_SEED} must be an integer, got {env!r}") from err
    return int(cfg_seed)


def _resolve_out(flag_value, default_name):
    if flag_value is not None:
        return flag_value
    return os.path.join(os.environ.get(ENV_OUT, "."), default_name)


def _load_base(args, scale):
    base = desk_config() if scale == "desk" else paper_config()
    if args.config is not None:
        base = load_config(args.config)
    return base


def _cmd_run(args):
    base = _load_base(args, args.scale)
    seed = _resolve_seed(args.seed, base.rng_seed)
    campaign = figure_campaign(args.figure, scale=args.scale, draws=args.draws, base=base)
    out = _resolve_out(args.out, f"fig{args.figure}_{args.scale}.csv")
    raw, summary, timing = run_campaign(campaign, out, seed)
    print(f"wrote {raw}")
    print(f"wrote {summary}")
    print(f"wrote {timing}")
    return 0


def _cmd_single(args):
    base = _load_base(args, args.scale)
    seed = _resolve_seed(args.seed, base.rng_seed)
    cfg = replace(base, rng_seed=seed)
    ch = draw_channels(cfg, 0)
    alt = desk_alt() if args.scale == "desk" else paper_alt()
    bp, ph, trace = optimize(ch, cfg, alt)
    for rec in trace.records:
        print(
            f"iter={rec.iteration} sum_rate={rec.sum_rate:.17g} ee={rec.ee:.17g} "
            f"power={rec.power:.17g} min_rate={rec.min_rate:.17g}"
        )
    _, _, final_rate = sinr_and_rate(ch, ph, bp, cfg)
    final_ee = ee_objective(ch, ph, bp, cfg)
    print(f"final sum_rate={final_rate:.17g} ee={final_ee:.17g}")
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "single":
            return _cmd_single(args)
        if args.command == "selftest":
            return run_selftest()
    except ValueError as err:
        print(f"error: infeasible configuration: {err}", file=sys.stderr)
        return 3
    except (NumericalError, ConvergenceError, InfeasibleError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
