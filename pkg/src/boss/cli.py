"""Command-line entry point: ``boss run ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from .environments import ENVIRONMENTS
from .harness import AGENTS, ConfigError, ExperimentConfig, run_experiment, write_results
from .priors import PRIORS

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boss", description="Run seeded BOSS experiments on the Chain domains.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run an experiment and write CSV results")
    run.add_argument("--env", choices=sorted(ENVIRONMENTS), default="chain")
    run.add_argument("--agent", choices=AGENTS, default="boss")
    run.add_argument("--prior", choices=PRIORS, default="tied")
    run.add_argument("-K", type=int, default=5, help="models sampled per resampling event")
    run.add_argument("-B", type=int, default=10, help="visits after which a state-action pair is known")
    run.add_argument("--gamma", type=float, default=0.95, help="planning discount")
    run.add_argument("--steps", type=int, default=1000)
    run.add_argument("--runs", type=int, default=500)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--alpha", type=float, default=0.5, help="CRP concentration (cluster prior)")
    run.add_argument("--gibbs-burn", type=int, default=500)
    run.add_argument("--gibbs-thin", type=int, default=50)
    run.add_argument("--full-prior", type=float, default=1.0, help="Dirichlet pseudo-count (full prior)")
    run.add_argument("--trace", action="store_true", help="also write a per-step trace CSV")
    run.add_argument("--workers", type=int, default=1, help="worker processes for trials")
    run.add_argument("--out", required=True, help="summary CSV path; trials/trace CSVs go alongside")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = ExperimentConfig(
            env=args.env,
            agent=args.agent,
            prior=args.prior,
            K=args.K,
            B=args.B,
            discount=args.gamma,
            steps=args.steps,
            runs=args.runs,
            base_seed=args.seed,
            alpha=args.alpha,
            gibbs_burn=args.gibbs_burn,
            gibbs_thin=args.gibbs_thin,
            full_prior=args.full_prior,
            trace=args.trace,
        )
    except ConfigError as exc:
        print(f"boss: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary, trials = run_experiment(config, workers=args.workers)
        paths = write_results(summary, trials, args.out)
    except Exception as exc:
        print(f"boss: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{config.label()}: mean {summary.mean:.1f}, std err {summary.std_err:.1f} over {summary.runs} runs")
    for path in paths.values():
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
