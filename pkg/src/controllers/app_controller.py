"""
Experiment controller.
Coordinates the services behind the command-line subcommands and maps
failures to exit codes.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from models.constants import MuFamily
from services.experiment_file_handler import ExperimentFileHandler
from services.experiment_runner import EXIT_CONFIG_ERROR, EXIT_OK, run_experiment
from services.plot_renderer import PlotRenderer
from services.schedules import ConstantDilation, PiecewiseDilation, SmoothDilation
from utils.errors import ConfigError
from utils.formatters import Formatters

logger = logging.getLogger(__name__)


class ExperimentController:
    """Application controller; out is any callable taking a line of text."""

    def __init__(self, out=print):
        self.out = out
        logger.info("ExperimentController initialized")

    def handle_run(self, config_path: str, output_dir: Optional[str] = None, workers: int = 1) -> int:
        try:
            experiment = ExperimentFileHandler.load_experiment(config_path, output_dir)
            report = run_experiment(experiment, workers)
            self.out(report.table)
            if report.failures:
                self.out(f"{report.failures} run(s) failed; details in {report.output_dir}")
            return report.exit_code

        except ConfigError as e:
            logger.error(f"Configuration error: {str(e)}")
            self.out(f"Configuration error: {str(e)}")
            return EXIT_CONFIG_ERROR

        except OSError as e:
            logger.error(f"I/O error: {str(e)}")
            self.out(f"I/O error: {str(e)}")
            return EXIT_CONFIG_ERROR

    def handle_beta_eval(self, times: Sequence[float], epsilon: Optional[float] = None,
                         etas: Optional[Sequence[float]] = None, family: Optional[str] = None,
                         params: Optional[dict] = None, step: float = 1e-2) -> int:
        """Print t, beta(t) and the learning rate for one dilation."""
        try:
            times = np.asarray(times, dtype=float)
            if etas:
                dilation = PiecewiseDilation(etas)
            elif family:
                horizon = max(float(times.max()), step)
                dilation = SmoothDilation(MuFamily.from_key(family), params or {}, horizon=horizon, step=step)
            else:
                dilation = ConstantDilation(1.0 if epsilon is None else epsilon)

            self.out(f"# {dilation!r}")
            self.out("t,beta,learning_rate")
            for t, b, lr in zip(times, dilation.beta(times), dilation.learning_rate(times)):
                self.out(f"{Formatters.format_float(t)},{Formatters.format_float(b)},{Formatters.format_float(lr)}")
            return EXIT_OK

        except ValueError as e:
            logger.error(f"Validation error: {str(e)}")
            self.out(f"Error: {str(e)}")
            return EXIT_CONFIG_ERROR

    def handle_plot(self, csv_path: str, output_path: Optional[str] = None) -> int:
        try:
            path = PlotRenderer.render(csv_path, output_path)
            self.out(path)
            return EXIT_OK

        except (ValueError, OSError) as e:
            logger.error(f"Plot error: {str(e)}")
            self.out(f"Error: {str(e)}")
            return EXIT_CONFIG_ERROR
