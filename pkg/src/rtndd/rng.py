"""Deterministic random-stream derivation.

All stochastic code takes an explicit numpy Generator. Streams are derived
from a single master seed through SeedSequence spawn keys, so results are
bit-reproducible for a fixed (master_seed, n_traj) regardless of execution
order or worker count.
"""
from __future__ import annotations

import numpy as np

# spawn-key domains, so different parts of a run never share a stream
_DOMAIN_ENSEMBLE = 0
_DOMAIN_TRAJECTORY = 1
_DOMAIN_BLOCK = 2
_DOMAIN_TRACE = 3


def ensemble_stream(master_seed: int) -> np.random.Generator:
    """Stream used to draw the quenched disorder (rates and couplings)."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(_DOMAIN_ENSEMBLE,)))


def trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    """Private stream of trajectory `index` (reference engine)."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(_DOMAIN_TRAJECTORY, index)))


def block_stream(master_seed: int, block: int, sub: int = 0) -> np.random.Generator:
    """Stream of one trajectory block in the vectorized engines."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(_DOMAIN_BLOCK, block, sub)))


def trace_stream(master_seed: int, chunk: int = 0) -> np.random.Generator:
    """Stream for noise-trace synthesis."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(_DOMAIN_TRACE, chunk)))
