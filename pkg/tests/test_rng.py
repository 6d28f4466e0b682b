"""Stream identity is (seed, trajectory index), nothing else."""
import numpy as np

from oscillab.rng import NoiseBlocks, trajectory_stream


def test_same_key_same_stream():
    a = trajectory_stream(7, 3).standard_normal(100)
    b = trajectory_stream(7, 3).standard_normal(100)
    np.testing.assert_array_equal(a, b)


def test_distinct_indices_decorrelate():
    a = trajectory_stream(7, 0).standard_normal(1000)
    b = trajectory_stream(7, 1).standard_normal(1000)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.1


def test_blocks_are_stream_slices():
    # drawing 10 then 10 must continue where the first block stopped
    blocks = NoiseBlocks(seed=5, n_paths=3, noise_dim=2)
    first = blocks.draw(10)
    second = blocks.draw(10)
    assert first.shape == (10, 3, 2)
    whole = trajectory_stream(5, 1).standard_normal((20, 2))
    np.testing.assert_array_equal(np.concatenate([first[:, 1], second[:, 1]]), whole)


def test_first_index_offsets_the_key():
    shifted = NoiseBlocks(seed=5, n_paths=2, noise_dim=1, first_index=4).draw(8)
    direct = NoiseBlocks(seed=5, n_paths=6, noise_dim=1).draw(8)
    np.testing.assert_array_equal(shifted[:, 0], direct[:, 4])
    np.testing.assert_array_equal(shifted[:, 1], direct[:, 5])
