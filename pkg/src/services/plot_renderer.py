"""
Plot Renderer Service - static SVG figures from the experiment CSVs.
The layout is picked from the CSV's columns, so any artifact written by the
runner can be passed straight to the `plot` subcommand.
"""
import logging
import os
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from services.csv_emitter import read_csv  # noqa: E402
from utils.errors import DomainError  # noqa: E402

logger = logging.getLogger(__name__)


class PlotRenderer:
    """Renders loss curves, error profiles, fitted curves and trajectories."""

    FIGSIZE = (7.0, 4.5)
    BAND_ALPHA = 0.2
    TRUTH_COLOR = "black"

    @staticmethod
    def render(csv_path: str, output_path: Optional[str] = None) -> str:
        """Write an SVG next to the CSV (or to output_path) and return its path."""
        frame = read_csv(csv_path)
        kind = PlotRenderer.detect_layout(frame)
        output_path = output_path or os.path.splitext(csv_path)[0] + ".svg"

        fig, ax = plt.subplots(figsize=PlotRenderer.FIGSIZE)
        try:
            getattr(PlotRenderer, f"_draw_{kind}")(ax, frame)
            ax.grid(True, alpha=0.3)
            fig.tight_layout()
            fig.savefig(output_path, format="svg")
        finally:
            plt.close(fig)
        logger.info(f"Rendered {kind} plot of {csv_path} to {output_path}")
        return output_path

    @staticmethod
    def detect_layout(frame: pd.DataFrame) -> str:
        cols = set(frame.columns)
        if {"metric", "config_id", "time", "mean", "std"} <= cols:
            return "summary"
        if {"config_id", "x", "truth", "mean", "std"} <= cols:
            return "fitted"
        if {"config_id", "x", "mean", "std"} <= cols:
            return "abs_err"
        if {"x", "truth", "data_g"} <= cols:
            return "data"
        if "t" in cols and any(c.startswith("theta_") for c in cols):
            return "trajectory"
        raise DomainError(f"No plot layout for columns {sorted(cols)}")

    # -- layouts ---------------------------------------------------------------

    @staticmethod
    def _draw_band(ax, x, mean, std, label):
        line, = ax.plot(x, mean, label=label, linewidth=1.2)
        if std.notna().any():
            ax.fill_between(x, mean - std, mean + std, color=line.get_color(), alpha=PlotRenderer.BAND_ALPHA)

    @staticmethod
    def _draw_summary(ax, frame):
        """Mean metric over time per method, log scale, +/- one StD band."""
        for config_id, group in frame.groupby("config_id", sort=False):
            PlotRenderer._draw_band(ax, group["time"], group["mean"], group["std"], config_id)
        ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel(str(frame["metric"].iloc[0]) if len(frame) else "metric")
        ax.legend(fontsize="small")

    @staticmethod
    def _draw_abs_err(ax, frame):
        for config_id, group in frame.groupby("config_id", sort=False):
            PlotRenderer._draw_band(ax, group["x"], group["mean"], group["std"], config_id)
        ax.set_xlabel("x")
        ax.set_ylabel("absolute error")
        ax.legend(fontsize="small")

    @staticmethod
    def _draw_fitted(ax, frame):
        truth_drawn = False
        for config_id, group in frame.groupby("config_id", sort=False):
            if not truth_drawn:
                ax.plot(group["x"], group["truth"], color=PlotRenderer.TRUTH_COLOR, linestyle="--", label="truth")
                truth_drawn = True
            PlotRenderer._draw_band(ax, group["x"], group["mean"], group["std"], config_id)
        ax.set_xlabel("x")
        ax.legend(fontsize="small")

    @staticmethod
    def _draw_data(ax, frame):
        ax.plot(frame["x"], frame["data_g"], linewidth=0.8, label="data")
        ax.plot(frame["x"], frame["truth"], color=PlotRenderer.TRUTH_COLOR, linestyle="--", label="truth")
        ax.set_xlabel("x")
        ax.legend(fontsize="small")

    @staticmethod
    def _draw_trajectory(ax, frame):
        for col in (c for c in frame.columns if c.startswith("theta_")):
            ax.plot(frame["t"], frame[col], linewidth=0.8, label=col)
        ax.set_xlabel("t")
        ax.set_ylabel("theta")
        if frame.shape[1] <= 12:
            ax.legend(fontsize="x-small", ncol=3)
