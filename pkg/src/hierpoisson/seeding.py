"""Counter-based seeding.

Site draws are a pure function of (seed, site), so a potential sampled on
B_k is the restriction of the one sampled on any larger ball. Realization
seeds come from numpy's SeedSequence spawn keys.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

SCHEDULE = (
    "realization i uses SeedSequence(entropy=base_seed, spawn_key=(i,)).generate_state(1, uint64)[0]; "
    "site x of a realization with seed s uses splitmix64(splitmix64(s) + (x + 1) * 0x9E3779B97F4A7C15)"
)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def site_uniforms(seed: int, sites) -> np.ndarray:
    """Uniform(0, 1) variates, one per site, open at both ends."""
    sites = np.asarray(sites, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix(np.array([int(seed) & _MASK64], dtype=np.uint64))[0]
        h = _mix(key + (sites + np.uint64(1)) * _GOLDEN)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def realization_seed(base_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def realization_seeds(base_seed: int, count: int) -> list[int]:
    return [realization_seed(base_seed, i) for i in range(count)]
