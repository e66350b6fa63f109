"""Command-line entry point: ``advact run | verify | gen``."""

import argparse
import sys

from advact import config as config_mod
from advact.data import SYNTH_NAMES, synth_dataset, write_csv
from advact.errors import AdvactError


def cmd_run(args):
    cfg = config_mod.load(args.config)
    if args.output:
        cfg = config_mod.from_dict({**cfg.to_dict(), "output": args.output})
    from advact.experiment import run_experiment

    status = run_experiment(cfg, jobs=args.jobs)
    print(f"{'FAILED' if status else 'ok'}: outputs in {cfg.output}")
    return status


def cmd_verify(args):
    from advact.verify import format_table, run_all

    results = run_all()
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_gen(args):
    ds = synth_dataset(args.name, args.n, args.noise, args.seed)
    write_csv(ds, args.out)
    print(f"wrote {len(ds.x_train) + len(ds.x_test)} rows to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="advact", description="Adversarial activation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train every seed of an experiment config")
    run.add_argument("--config", required=True, help="YAML experiment file")
    run.add_argument("--output", help="override the config's output directory")
    run.add_argument("--jobs", type=int, default=1, help="seeds trained in parallel")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="run the closed-form and reciprocity checks")
    verify.set_defaults(func=cmd_verify)

    gen = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    gen.add_argument("--name", required=True, choices=SYNTH_NAMES)
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, default=1000)
    gen.add_argument("--noise", type=float, default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AdvactError, OSError) as exc:
        print(f"advact: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
