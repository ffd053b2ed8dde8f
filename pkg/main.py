"""
Stochastic Gradient Process Lab - Main Entry Point
Batch command line: run experiment matrices, evaluate learning-rate dilations,
render figures from result CSVs.
"""
import argparse
import json
import logging
import sys
import os

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from config.settings import setup_logging, APP_NAME, APP_VERSION, DEFAULT_WORKERS

logger = logging.getLogger(__name__)


def check_dependencies():
    """Verify that the numerical libraries are installed."""
    try:
        import numpy  # noqa: F401
        import scipy  # noqa: F401
        import pandas  # noqa: F401
        import matplotlib  # noqa: F401
        return True
    except ImportError as e:
        logger.critical(f"Missing dependency: {str(e)}")
        print(f"\nCRITICAL ERROR: Missing dependency: {str(e)}")
        print("Please run: pip install -r requirements.txt\n")
        return False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgp-lab", description=f"{APP_NAME} v{APP_VERSION}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run every (method, seed) pair of an experiment config")
    run.add_argument("config", help="Experiment JSON file")
    run.add_argument("--output-dir", default=None, help="Overrides $SGP_OUTPUT_DIR and the config's output_dir")
    run.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="Worker processes across method blocks")

    beta = sub.add_parser("beta-eval", help="Evaluate a learning-rate dilation beta(t)")
    beta.add_argument("times", type=float, nargs="+", help="Optimiser times t >= 0")
    group = beta.add_mutually_exclusive_group()
    group.add_argument("--epsilon", type=float, default=None, help="Constant learning rate")
    group.add_argument("--etas", type=float, nargs="+", default=None, help="Learning-rate sequence")
    group.add_argument("--family", default=None, help="Speed function family: power_log or affine")
    beta.add_argument("--params", default="{}", help="JSON parameters of the speed function")
    beta.add_argument("--step", type=float, default=1e-2, help="Trapezoid step of the smooth dilation")

    plot = sub.add_parser("plot", help="Render an SVG from a result CSV")
    plot.add_argument("csv", help="CSV written by 'run'")
    plot.add_argument("--output", default=None, help="SVG path (defaults next to the CSV)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.log_level:
            setup_logging(getattr(logging, args.log_level.upper(), logging.INFO))
        else:
            setup_logging()

        if not check_dependencies():
            return 1

        from controllers.app_controller import ExperimentController

        logger.info(f"Starting {APP_NAME} v{APP_VERSION}: {args.command}")
        controller = ExperimentController()

        if args.command == "run":
            return controller.handle_run(args.config, args.output_dir, args.workers)
        if args.command == "beta-eval":
            try:
                params = json.loads(args.params)
            except json.JSONDecodeError as e:
                print(f"Error: --params is not valid JSON: {e}")
                return 1
            return controller.handle_beta_eval(args.times, epsilon=args.epsilon, etas=args.etas,
                                               family=args.family, params=params, step=args.step)
        return controller.handle_plot(args.csv, args.output)

    except Exception as e:
        logger.error(f"Fatal error: {str(e)}", exc_info=True)
        print(f"Fatal error: {str(e)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
