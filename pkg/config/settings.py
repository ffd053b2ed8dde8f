"""
Application configuration and settings.
"""
import os
import logging

# Application settings
APP_NAME = "Stochastic Gradient Process Lab"
APP_VERSION = "1.0"

# Paths
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
LOG_DIR = os.path.join(BASE_DIR, "logs")
EXPERIMENTS_DIR = os.path.join(BASE_DIR, "config", "experiments")
OUTPUT_DIR = os.environ.get("SGP_OUTPUT_DIR", os.path.join(BASE_DIR, "results"))

# Logging configuration
LOG_LEVEL = getattr(logging, os.environ.get("SGP_LOG_LEVEL", "INFO").upper(), logging.INFO)
LOG_FILE = os.path.join(LOG_DIR, "sgp_lab.log")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Experiment config schema
SCHEMA_VERSION = 1

# Numerical defaults
QUADRATURE_INTERVALS = 2048      # composite Simpson, 2049 nodes on [-1, 1]
EVAL_POINTS = 1000               # equispaced rel_err / abs_err grid
GRF_MODES = 200
LEGENDRE_SIZE = 9
REGULARIZATION = 1e-4
FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 100
INDEX_SUBSTEPS_PER_STEP = 10     # index substep defaults to h / 10
PATH_CHUNK = 20000               # substeps per block when sampling long paths
FLOW_CHUNK = 256                 # optimiser steps prepared together by the flow driver

# Output settings
CSV_FLOAT_FORMAT = "%.17g"
DEFAULT_WORKERS = int(os.environ.get("SGP_WORKERS", "1"))


def setup_logging(level: int = LOG_LEVEL, log_to_file: bool = True):
    """Setup logging configuration."""
    handlers = [logging.StreamHandler()]
    if log_to_file:
        os.makedirs(LOG_DIR, exist_ok=True)
        handlers.append(logging.FileHandler(LOG_FILE))

    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=handlers
    )
