import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()
PRECISION_BITS = int(os.getenv("PRIMEXP_PRECISION_BITS", 256))
THREADS = int(os.getenv("PRIMEXP_THREADS", 1))
CHUNK_SIZE = int(os.getenv("PRIMEXP_CHUNK_SIZE", 2 ** 16))
MODULAR_Q_CAP = int(os.getenv("PRIMEXP_MODULAR_Q_CAP", 10 ** 7))
LOG_LEVEL = os.getenv("PRIMEXP_LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("PRIMEXP_LOG_FILE") or None

# Guard bits on top of k * ceil(log2 n) for every phase reduction.
PHASE_BASE_BITS = 64
PHASE_GUARD_BITS = 20

# Largest hb_rhs enumeration (number of ordered factorizations).
HB_ENUMERATION_BUDGET = 10 ** 8
