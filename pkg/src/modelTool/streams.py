"""Seeded, reproducible sample streams.

Each stochastic process of each replication gets its own substream: a Philox
(counter-based) bit generator keyed by SeedSequence(seed, spawn_key=(id,)).
Two streams built from the same (seed, substream id, spec) reproduce the same
sequence on every platform; distinct ids are independent.
"""
from enum import IntEnum

import numpy as np

from src.modelTool.distributions import DistributionSpec


class Process(IntEnum):
    ARRIVAL = 0
    HARVEST = 1
    SENSING = 2
    FADING = 3


def substream_id(process: Process, replication: int) -> int:
    return replication * len(Process) + int(process)


class SampleStream:
    """Single-owner stream of i.i.d. variates; not meant to be shared between threads."""

    def __init__(self, spec: DistributionSpec, seed: int, substream: int) -> None:
        self.spec = spec
        self.seed = int(seed)
        self.substream = int(substream)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.substream,))
        self._rng = np.random.Generator(np.random.Philox(sequence))

    def sample(self) -> float:
        return float(self.spec.draw(self._rng, 1)[0])

    def sample_block(self, n: int) -> np.ndarray:
        return self.spec.draw(self._rng, n)


def sample(stream: SampleStream) -> float:
    return stream.sample()
