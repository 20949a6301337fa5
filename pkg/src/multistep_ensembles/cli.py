"""Command line entry point: ``run``, ``synth``, ``report`` and ``pool``."""
import argparse
import logging
import sys

from .errors import EnsembleError


def _build_parser():
    parser = argparse.ArgumentParser(prog="multistep-ensembles",
                                     description="Multi-output forecasting ensembles for multi-step forecasting.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the cross-validated experiment")
    run.add_argument("--data", help="long-format CSV (series_id,timestamp,value)")
    run.add_argument("--config", help="flat key=value config file")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--methods", nargs="+", help="method names, e.g. Simple Window_FHF ADE_IH (or 'all')")
    run.add_argument("--feedback", choices=("optimistic", "strict"))
    run.add_argument("--eval-scale", choices=("levels", "diffs"))
    run.add_argument("--folds", type=int)
    run.add_argument("--jobs", type=int)
    run.add_argument("--pool", help="pool specification file (ID family key=value per line)")

    synth = sub.add_parser("synth", help="write synthetic series as long-format CSV")
    synth.add_argument("--spec", choices=("ar1", "seasonal", "regime_switch"), default="ar1")
    synth.add_argument("--n", type=int, default=1000)
    synth.add_argument("--seed", type=int, default=1)
    synth.add_argument("--count", type=int, default=1, help="number of series (seeds seed..seed+count-1)")
    synth.add_argument("--out", required=True)

    report = sub.add_parser("report", help="recompute the analyses from an existing metrics.csv")
    report.add_argument("--metrics", required=True)
    report.add_argument("--out", required=True)

    sub.add_parser("pool", help="print the default learner pool in pool-file format")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            from .experiment import load_config, run_experiment

            methods = args.methods
            if methods == ["all"]:
                methods = "all"
            cfg = load_config(args.config, data=args.data, out=args.out, seed=args.seed,
                              methods=methods, feedback=args.feedback, eval_scale=args.eval_scale,
                              folds=args.folds, jobs=args.jobs, pool=args.pool)
            if cfg.data is None:
                print("error: no data path given (--data or 'data =' in the config)", file=sys.stderr)
                return 2
            return run_experiment(cfg)
        if args.command == "synth":
            from .series import write_long_csv
            from .synthetic import generate_synthetic

            series = [generate_synthetic(args.spec, args.n, seed=args.seed + i)
                      for i in range(args.count)]
            write_long_csv(series, args.out)
            return 0
        if args.command == "report":
            from .evaluation import read_metrics, write_reports

            write_reports(read_metrics(args.metrics), args.out)
            return 0
        if args.command == "pool":
            from .learners import default_pool, format_pool

            sys.stdout.write(format_pool(default_pool()))
            return 0
    except (EnsembleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
