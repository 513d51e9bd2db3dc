"""Application configuration values."""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

APP_NAME = "fadenet"
APP_VERSION = "0.1.0"

LOG_LEVEL = os.getenv("FADENET_LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Monte Carlo draws generated per link per batch.
MC_BATCH_SIZE = int(os.getenv("FADENET_MC_BATCH_SIZE", "100000"))
MC_SAMPLES = int(os.getenv("FADENET_MC_SAMPLES", "100000"))
# Batch-means count for end-to-end network simulation error bars.
STDERR_BATCHES = int(os.getenv("FADENET_STDERR_BATCHES", "20"))

INTEGRATION_TOL = float(os.getenv("FADENET_INTEGRATION_TOL", "1e-10"))
MAX_CUT_NODES = int(os.getenv("FADENET_MAX_CUT_NODES", "24"))

# Search ceiling for link rates: success probability below this is treated as
# a dead link.
RATE_CAP_PROBABILITY = 1e-6

GRAPHS_DIR = Path(__file__).resolve().parent / "graphs"
