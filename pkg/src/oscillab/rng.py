"""Counter-based random streams, one per trajectory.

Each trajectory draws from a Philox generator keyed by (seed, trajectory_index),
so ensemble output cannot depend on scheduling or on how a batch is split
across workers.  Noise is drawn in blocks to keep generator overhead out of
the stepping loop.
"""
import numpy as np


def trajectory_stream(seed, index):
    """Generator for trajectory `index` under master `seed`."""
    key = np.array([np.uint64(seed), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class NoiseBlocks:
    """Draws standard-normal blocks of shape (steps, n_paths, noise_dim).

    Streams are created once and consumed strictly forward; asking for the
    same block twice would silently desynchronize trajectories, so there is
    deliberately no rewind.
    """

    def __init__(self, seed, n_paths, noise_dim, first_index=0):
        self.seed = int(seed)
        self.noise_dim = int(noise_dim)
        self._gens = [trajectory_stream(seed, first_index + i) for i in range(n_paths)]

    def draw(self, n_steps):
        cols = [g.standard_normal((n_steps, self.noise_dim)) for g in self._gens]
        return np.stack(cols, axis=1)
