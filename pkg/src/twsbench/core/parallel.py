"""
Bounded worker pool for independent per-basin / per-candidate jobs.

Results always come back ordered by job key, so worker count never changes
report contents.
"""

import hashlib
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, Dict, Hashable, Sequence, Tuple

from loguru import logger
from tqdm import tqdm


def derive_seed(seed: int, *keys: Any) -> int:
    """Stable 32-bit seed for a (seed, key...) tuple; independent of job order."""
    text = "|".join([str(seed)] + [str(k) for k in keys])
    return int(hashlib.md5(text.encode()).hexdigest()[:8], 16)


def run_jobs(
    fn: Callable[[Any], Any],
    jobs: Sequence[Tuple[Hashable, Any]],
    workers: int = 1,
    desc: str = "jobs",
) -> Dict[Hashable, Any]:
    """
    Run fn(payload) for every (key, payload) job.

    Args:
        fn: Module-level function (must be picklable when workers > 1)
        jobs: (key, payload) pairs; keys must be unique and sortable
        workers: Process count; <= 1 runs in-process
        desc: Progress-bar label

    Returns:
        Dict of key -> result, inserted in ascending key order
    """
    results: Dict[Hashable, Any] = {}
    if not jobs:
        return results

    if workers <= 1 or len(jobs) == 1:
        for key, payload in tqdm(jobs, desc=desc, disable=None, leave=False):
            results[key] = fn(payload)
    else:
        n_workers = min(workers, len(jobs))
        logger.debug(f"{desc}: {len(jobs)} jobs on {n_workers} workers")
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = {pool.submit(fn, payload): key for key, payload in jobs}
            for future in tqdm(
                as_completed(futures), total=len(futures), desc=desc, disable=None, leave=False
            ):
                key = futures[future]
                try:
                    results[key] = future.result()
                except Exception as e:
                    logger.error(f"{desc}: job {key} failed: {e}")
                    for other in futures:
                        other.cancel()
                    raise

    return {key: results[key] for key in sorted(results)}

