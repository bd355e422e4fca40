"""
Application configuration and environment variable management
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
ROOT_DIR = Path(__file__).parent.parent
load_dotenv(ROOT_DIR / ".env")

# Logging
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").strip().upper()
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Reproducibility defaults
DEFAULT_SEED = int(os.environ.get("DEFAULT_SEED", "0"))
DEFAULT_M = int(os.environ.get("DEFAULT_M", "163840"))

# Bundled data and output locations
DATA_DIR = Path(__file__).parent / "data"
SCENARIO_DIR = Path(os.environ.get("SCENARIO_DIR", str(DATA_DIR / "scenarios")))
OUTPUT_DIR = Path(os.environ.get("OUTPUT_DIR", "out"))

# Batch simulation fan-out (1 = sequential)
BATCH_WORKERS = max(1, int(os.environ.get("BATCH_WORKERS", "1")))
