# api/compare.py
"""
Two-sampler comparison for the API.
Draws both ensembles in parallel and returns the agreement verdict.
"""

import asyncio
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analysis.diagnostics import FinalSampler, compare_final_samples, exact_sampler, timechange_sampler
from errors import DomainError
from kernel import StickyParams, transition_atom
from utils import spawn_rngs

logger = logging.getLogger(__name__)

SAMPLERS = {
    "exact": lambda: exact_sampler(1),
    "exact-grid": lambda: exact_sampler(32),
    "timechange": lambda: timechange_sampler(1e-3),
}


def get_sampler(name: str) -> FinalSampler:
    """
    Look up a one-dimensional sampler by name.

    Raises:
        DomainError: unknown sampler name
    """
    if name not in SAMPLERS:
        raise DomainError(f"unknown sampler {name!r}; choose one of {sorted(SAMPLERS)}")
    return SAMPLERS[name]()


def run_single_sampler(name: str, t: float, x0: float, params: StickyParams, n_paths: int, rng) -> Dict[str, Any]:
    """
    Draw final states of one sampler.

    Returns:
        Dict with the sampler name, the sample and its atom frequency
    """
    logger.info(f"Running {name} sampler ({n_paths} paths)...")
    sample = get_sampler(name)(t, x0, params, n_paths, rng)
    return {"sampler": name, "sample": sample, "atom_frequency": float((sample == 0.0).mean())}


async def compare_samplers(
    sampler1: str,
    sampler2: str,
    t: float,
    x0: float,
    beta: float,
    n_paths: int,
    seed: int,
) -> Dict[str, Any]:
    """
    Compare two samplers of p_t(x0, .) by KS and atom-frequency tests.

    Each sampler draws from its own child stream of the seed, so the result
    does not depend on which thread finishes first.
    """
    params = StickyParams(beta=beta)
    get_sampler(sampler1)
    get_sampler(sampler2)
    rng1, rng2 = spawn_rngs(seed, 2)

    # Run both samplers in parallel using ThreadPoolExecutor
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=2) as executor:
        future1 = loop.run_in_executor(executor, run_single_sampler, sampler1, t, x0, params, n_paths, rng1)
        future2 = loop.run_in_executor(executor, run_single_sampler, sampler2, t, x0, params, n_paths, rng2)
        result1, result2 = await asyncio.gather(future1, future2)

    record = compare_final_samples(result1["sample"], result2["sample"])
    return {
        "sampler1": {"name": sampler1, "atom_frequency": result1["atom_frequency"]},
        "sampler2": {"name": sampler2, "atom_frequency": result2["atom_frequency"]},
        "kernel_atom": transition_atom(t, x0, params),
        "ks_statistic": record.statistic,
        "ks_pvalue": record.details["ks_pvalue"],
        "atom_z": record.details["atom_z"],
        "agree": record.passed,
    }
