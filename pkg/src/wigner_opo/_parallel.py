import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "WIGNER_OPO_THREADS"


def worker_count() -> int:
    """Worker cap from ``WIGNER_OPO_THREADS`` (0 or unset means cpu count)."""
    raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"{ENV_THREADS} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def ordered_map(fn, items):
    """``list(map(fn, items))`` on a thread pool; result order is input order."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def derive_trajectory_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Seed sequence for work unit ``index`` of a run seeded with ``seed``.

    Distinct ``(seed, index)`` pairs give distinct, independent streams, and
    the result depends on nothing else (not on worker count or order).
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if index < 0:
        raise ValueError(f"index must be non-negative, got {index}")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))


def generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_trajectory_seed(seed, index)))
