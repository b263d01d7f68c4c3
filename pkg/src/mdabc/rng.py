"""Counter-based random streams.

Every random draw in a run is addressed by ``(master_seed, lane, replication,
particle, stage)``.  The address is written into the key and the high counter
words of a Philox generator, so two addresses never share state and the
values a particle sees do not depend on the order in which particles are
processed or on how many worker threads exist.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

_MASK64 = (1 << 64) - 1

# Reserved particle ids for draws that belong to the run rather than a particle.
OBSERVED_ID = _MASK64
CONTROL_ID = _MASK64 - 1


@dataclass(frozen=True)
class RngStream:
    """Address of a deterministic pseudo-random stream.

    Parameters
    ----------
    master_seed : int
        Non-negative seed of the whole run.
    replication : int
        Replication index within an experiment.
    particle : int
        Particle index (or one of the reserved ids).
    stage : int
        Stage counter; incremented by samplers for every new batch of draws.
    lane : int
        Extra key word separating independent consumers that share a
        replication, e.g. the different inference methods of an experiment.
    """

    master_seed: int
    replication: int = 0
    particle: int = 0
    stage: int = 0
    lane: int = 0

    def __post_init__(self):
        for name in ("master_seed", "replication", "particle", "stage", "lane"):
            value = getattr(self, name)
            if value < 0 or value > _MASK64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit word, got {value}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed & _MASK64, self.lane], dtype=np.uint64)
        # word 0 is left free for the generator's own block counter
        counter = np.array([0, self.particle, self.stage, self.replication], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def at(self, **changes) -> "RngStream":
        return replace(self, **changes)


def particle_generators(base: RngStream, n: int, stage: int, start: int = 0) -> list[np.random.Generator]:
    """Generators for particles ``start .. start+n-1`` at ``stage``."""
    return generators_for(base, range(start, start + n), stage)


def generators_for(base: RngStream, particles, stage: int) -> list[np.random.Generator]:
    """Generators for the given particle ids at ``stage``."""
    key = np.array([base.master_seed & _MASK64, base.lane], dtype=np.uint64)
    counter = np.array([0, 0, stage, base.replication], dtype=np.uint64)
    gens = []
    for i in particles:
        counter[1] = i
        gens.append(np.random.Generator(np.random.Philox(key=key, counter=counter)))
    return gens


def as_stream(seed) -> RngStream:
    """Coerce an int or an existing stream into an :class:`RngStream`."""
    if isinstance(seed, RngStream):
        return seed
    return RngStream(int(seed))
