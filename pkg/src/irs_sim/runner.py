"""Deterministic chunked Monte Carlo execution.

Trials are partitioned into fixed-size chunks. Chunk i draws from an
independent counter-based stream derived from (seed, stream_key, i), so the
random numbers consumed by a chunk depend only on its index, never on worker
scheduling. Per-chunk partial sums are combined with a fixed pairwise
reduction tree, which makes the aggregate bit-identical between serial and
parallel execution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

TrialFn = Callable[[np.random.Generator, int], np.ndarray]


def chunk_rng(seed: int, stream_key: int, chunk_index: int) -> np.random.Generator:
    """Generator for one chunk of one logical stream.

    Philox is counter-based, so streams split this way never collide and do
    not depend on execution order.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(stream_key, chunk_index))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(trials: int, chunk_size: int) -> list[int]:
    """Fixed partition of `trials` into chunks of at most `chunk_size`."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    full, rem = divmod(trials, chunk_size)
    return [chunk_size] * full + ([rem] if rem else [])


def tree_sum(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Pairwise reduction with a fixed association order."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to reduce")
    while len(parts) > 1:
        nxt = []
        for i in range(0, len(parts) - 1, 2):
            nxt.append(parts[i] + parts[i + 1])
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


@dataclass(frozen=True)
class McResult:
    """Mean and standard error per output column, plus the trial count."""

    mean: np.ndarray
    se: np.ndarray
    trials: int


def run_chunked(
    trial_fn: TrialFn,
    trials: int,
    seed: int,
    *,
    stream_key: int = 0,
    chunk_size: int = 2048,
    workers: int | None = None,
) -> McResult:
    """Run `trial_fn` for `trials` trials and aggregate mean and SE.

    Args:
        trial_fn: Callable (rng, n) -> array of shape (n,) or (n, d) holding
            one row of output columns per trial.
        trials: Total number of trials.
        seed: Master seed; combined with stream_key and the chunk index.
        stream_key: Distinguishes independent logical streams (e.g. sweep
            cells) under one master seed.
        chunk_size: Fixed chunk length. Part of the determinism contract:
            changing it changes which numbers each trial draws.
        workers: Thread count; None or 1 runs serially. Results are
            identical for any worker count.
    """
    sizes = chunk_sizes(trials, chunk_size)

    def one_chunk(idx_n):
        idx, n = idx_n
        rng = chunk_rng(seed, stream_key, idx)
        vals = np.asarray(trial_fn(rng, n))
        if np.iscomplexobj(vals):
            raise TypeError("trial_fn must return real-valued outputs")
        vals = vals.astype(float, copy=False)
        if vals.ndim == 1:
            vals = vals[:, np.newaxis]
        if vals.shape[0] != n:
            raise ValueError("trial_fn returned a wrong number of rows")
        # float64 accumulation in a fixed order within the chunk
        s = vals.sum(axis=0)
        s2 = (vals**2).sum(axis=0)
        return s, s2

    tasks = list(enumerate(sizes))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(one_chunk, tasks))
    else:
        partials = [one_chunk(t) for t in tasks]

    total = tree_sum([p[0] for p in partials])
    total2 = tree_sum([p[1] for p in partials])
    mean = total / trials
    if trials > 1:
        var = (total2 - trials * mean**2) / (trials - 1)
        se = np.sqrt(np.maximum(var, 0.0) / trials)
    else:
        se = np.zeros_like(mean)
    return McResult(mean=mean, se=se, trials=trials)
