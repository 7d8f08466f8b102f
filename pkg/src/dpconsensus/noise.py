"""Counter-based Laplace noise streams.

Every sample is a pure function of ``(master_seed, run, agent, step)``, so
Monte Carlo runs parallelize while staying exactly reproducible: the sample
drawn for a given key never depends on how many other samples were drawn
before it.  Keys are mixed through chained splitmix64 finalizers and mapped
to Lap(0, b) by the inverse CDF.
"""

from __future__ import annotations

import numpy as np

__all__ = ["LaplaceStream", "laplace_sample", "laplace_matrix", "DEFAULT_SEED"]

# Documented default master seed; the shipped acceptance numbers use it.
DEFAULT_SEED = 1618033988

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_U53 = 2.0**-53


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z + _GOLD) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def _uniforms(seed: int, run, agent, step) -> np.ndarray:
    """Uniform draws on (-1/2, 1/2), broadcast over run/agent/step arrays."""
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(seed) + np.asarray(run, dtype=np.uint64))
        h = _mix(h ^ np.asarray(agent, dtype=np.uint64))
        h = _mix(h ^ np.asarray(step, dtype=np.uint64))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _U53 - 0.5


def _laplace_from_uniform(u, b):
    # Inverse CDF of Lap(0, b) on u in (-1/2, 1/2); branch-free.
    return -b * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def laplace_sample(seed: int, run: int, agent: int, step: int, b: float) -> float:
    """One Lap(0, b) draw for the given stream key."""
    if b < 0:
        raise ValueError("scale must be >= 0")
    if b == 0.0:
        return 0.0
    u = _uniforms(seed, run, agent, step)
    return float(_laplace_from_uniform(u, b))


def laplace_matrix(seed: int, runs: np.ndarray, n_agents: int, step: int, b: float) -> np.ndarray:
    """Lap(0, b) noise for all (run, agent) pairs at one step; shape (M, n)."""
    if b == 0.0:
        return np.zeros((len(runs), n_agents))
    u = _uniforms(seed, np.asarray(runs)[:, None], np.arange(n_agents)[None, :], step)
    return _laplace_from_uniform(u, b)


class LaplaceStream:
    """Sequential view of one (run, agent) stream; advances a step counter."""

    def __init__(self, master_seed: int, run: int, agent: int, counter: int = 0):
        self.master_seed = int(master_seed)
        self.run = int(run)
        self.agent = int(agent)
        self.counter = int(counter)

    def sample(self, b: float) -> float:
        value = laplace_sample(self.master_seed, self.run, self.agent, self.counter, b)
        self.counter += 1
        return value
