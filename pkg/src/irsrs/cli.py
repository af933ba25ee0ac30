"""Command line front end.

    irsrs run --config FILE [--study S] [--scheme S] [--trials N]
              [--seed S] [--out PATH]
    irsrs validate --config FILE
    irsrs codebook --P 4 --Q 5

Exit codes: 0 success, 1 configuration problem, 2 runtime failure.
"""

import argparse
import sys
from dataclasses import replace

from .experiments import (
    parse_config_file,
    run_experiment,
    validate_spec,
    write_results,
)
from .model import ConfigError, build_codebook


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="irsrs",
        description="Weighted sum-rate studies for a reflecting-surface-aided "
        "rate-splitting downlink",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a study described by a config file")
    run.add_argument("--config", required=True, help="flat key=value config file")
    run.add_argument("--study", choices=["rate-region", "wsr-vs-snr"])
    run.add_argument("--scheme", choices=["rs", "noma", "both"])
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="results file path (default from config or results.csv)")

    val = sub.add_parser("validate", help="check a config file and report problems")
    val.add_argument("--config", required=True)

    cbk = sub.add_parser("codebook", help="print the on/off reflection codebook")
    cbk.add_argument("--P", type=int, required=True, help="number of columns")
    cbk.add_argument("--Q", type=int, required=True, help="active elements per column")
    return ap


def _cmd_run(args):
    try:
        spec = parse_config_file(args.config)
    except OSError as e:
        print("error: cannot read config: %s" % e, file=sys.stderr)
        return 1
    except ConfigError as e:
        print("error: %s" % e, file=sys.stderr)
        return 1

    if args.study:
        spec = replace(spec, study=args.study)
    if args.scheme:
        spec = replace(spec, scheme=args.scheme)
    if args.trials is not None:
        spec = replace(spec, trials=args.trials)
    if args.seed is not None:
        spec = replace(spec, cfg=replace(spec.cfg, seed=args.seed))
    if args.out:
        spec = replace(spec, output_path=args.out)
    errs = validate_spec(spec)
    if errs:
        for e in errs:
            print("error: %s" % e, file=sys.stderr)
        return 1

    out = spec.output_path or "results.csv"
    try:
        result = run_experiment(spec)
        csv_path, manifest = write_results(result, out)
    except OSError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except Exception as e:  # solver and numeric failures
        print("error: run failed: %s" % e, file=sys.stderr)
        return 2
    print("wrote %d rows to %s" % (len(result.rows), csv_path))
    print("manifest: %s" % manifest)
    return 0


def _cmd_validate(args):
    try:
        parse_config_file(args.config)
    except OSError as e:
        print("error: cannot read config: %s" % e, file=sys.stderr)
        return 1
    except ConfigError as e:
        for msg in str(e).split("; "):
            print("error: %s" % msg, file=sys.stderr)
        return 1
    print("config ok")
    return 0


def _cmd_codebook(args):
    try:
        cb = build_codebook(args.P, args.Q)
    except ValueError as e:
        print("error: %s" % e, file=sys.stderr)
        return 1
    print("# %d elements, %d columns, amplitude 1/sqrt(%d)" % (cb.n_elements, cb.P_cols, args.Q))
    for row in cb.A:
        print(" ".join("%.10g" % v for v in row))
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "codebook":
        return _cmd_codebook(args)
    return 1


if __name__ == "__main__":
    sys.exit(main())
