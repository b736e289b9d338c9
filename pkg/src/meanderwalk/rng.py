"""Deterministic randomness helpers.

Two kinds of randomness are used in this package:

* counter-based per-site draws for environment generation, so that a
  weight at site x never depends on the window it was generated in;
* ordinary numpy generators for Monte Carlo, derived from a master seed
  and an integer stream path so parallel workers never share a stream.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_GAMMA = 0x9E3779B97F4A7C15
_CHAN = 0xD1B54A32D192ED03


def _mix64_int(z: int) -> int:
    """splitmix64 finalizer on a python int, mod 2**64."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def _mix64_arr(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def counter_uniforms(seed: int, sites: np.ndarray, channel: int) -> np.ndarray:
    """Uniform(0,1) draw for each site, a pure function of (seed, site, channel).

    Negative sites are folded in via their two's-complement bit pattern.
    Extending or shifting the generation window therefore never changes
    the value drawn for an existing (site, channel) pair.
    """
    x = np.asarray(sites, dtype=np.int64).astype(np.uint64)
    key = _mix64_int(seed + _GAMMA) ^ _mix64_int(channel * _CHAN + _GAMMA)
    z = x * np.uint64(_GAMMA)
    z = z ^ np.uint64(key)
    bits = _mix64_arr(_mix64_arr(z) + np.uint64(_GAMMA))
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


def spawn_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for stream `path` under `master_seed`."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(path))
    return np.random.default_rng(ss)
