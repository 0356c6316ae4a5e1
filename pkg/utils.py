# utils.py
"""
Utility functions for the sticky toolkit.
Provides consistent slug generation, artifact paths, RNG streams and logging setup.
"""

import logging
import os
import re

import numpy as np
from dotenv import load_dotenv

# Load environment variables (only STICKY_OUTPUT_DIR is read)
load_dotenv()

TOOLKIT_VERSION = "1.0.0"
OUTPUT_DIR_ENV = "STICKY_OUTPUT_DIR"
CORS_ORIGINS_ENV = "STICKY_CORS_ORIGINS"


def run_name_to_slug(name: str) -> str:
    """
    Convert a run name to a filesystem-safe slug.

    Rules:
    - lowercase
    - spaces and dashes -> underscores
    - remove special chars (keep alphanumeric, dots and underscores)

    Example:
        "Kernel Invariants" -> "kernel_invariants"
        "wetting n=3 beta=1" -> "wetting_n3_beta1"
    """
    text = name.lower()
    text = re.sub(r"[^a-z0-9\s_.-]", "", text)
    text = re.sub(r"[\s-]+", "_", text)
    text = re.sub(r"_+", "_", text)
    return text.strip("_")


def get_output_dir(default: str = "runs") -> str:
    """
    Artifact directory: $STICKY_OUTPUT_DIR if set, else the given default.
    """
    return os.getenv(OUTPUT_DIR_ENV) or default


def get_cors_origins() -> list[str]:
    """
    Allowed browser origins for the API: comma-separated $STICKY_CORS_ORIGINS.

    Empty when unset, so no cross-origin requests are accepted.
    """
    raw = os.getenv(CORS_ORIGINS_ENV, "")
    return [origin.strip() for origin in raw.split(",") if origin.strip()]


def get_artifact_path(command: str, slug: str, fmt: str, output_dir: str | None = None) -> str:
    """
    Get the path for a run artifact.

    Example:
        ("kernel", "t1_x0_beta1", "csv") -> "runs/kernel/t1_x0_beta1.csv"
    """
    base = output_dir or get_output_dir()
    path = os.path.join(base, command)
    os.makedirs(path, exist_ok=True)
    return os.path.join(path, f"{run_name_to_slug(slug)}.{fmt}")


def spawn_rngs(seed: int | np.random.SeedSequence, count: int) -> list[np.random.Generator]:
    """
    Split a master seed into `count` independent generator streams.

    Stream i is always the i-th child of SeedSequence(seed), so a batch keeps
    its random numbers no matter how many batches run or in which order.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in root.spawn(count)]


def format_float(value: float) -> str:
    """Shortest representation that parses back to the same float."""
    return repr(float(value))


def setup_logging(verbose: bool = False) -> None:
    """Route toolkit logs to stderr; stdout stays free for artifacts."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        force=True,
    )
