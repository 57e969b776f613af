import numpy as np
import pytest

from burgers_levels.errors import ConfigurationError
from burgers_levels.noise import NoiseBank, NoiseStream


def test_same_address_same_draws():
    a = NoiseStream(7, 3, 11).draw(5, 8)
    b = NoiseStream(7, 3, 11).draw(5, 8)
    assert np.array_equal(a, b)


def test_step_by_step_equals_bulk():
    s1, s2 = NoiseStream(1, 0, 0), NoiseStream(1, 0, 0)
    bulk = s1.draw(6, 4)
    steps = np.concatenate([s2.draw(1, 4) for _ in range(6)])
    assert np.array_equal(bulk, steps)
    assert s2.stream_id == (0, 0, 6)


def test_distinct_streams_are_uncorrelated_and_unit_variance():
    N = 10_000
    a = NoiseStream(5, 0, 0).draw(N, 1)[:, 0]
    b = NoiseStream(5, 1, 0).draw(N, 1)[:, 0]
    c = NoiseStream(5, 0, 1).draw(N, 1)[:, 0]
    d = NoiseStream(6, 0, 0).draw(N, 1)[:, 0]
    for x, y in ((a, b), (a, c), (a, d)):
        r = np.corrcoef(x.real, y.real)[0, 1]
        assert abs(r) < 4 / np.sqrt(N)
    assert abs(np.mean(np.abs(a) ** 2) - 1) < 0.05
    assert abs(np.corrcoef(a.real, a.imag)[0, 1]) < 4 / np.sqrt(N)


def test_bank_independent_of_chunk_and_batch_split():
    full = NoiseBank(3, 2, range(6), 5, chunk=7)
    part = NoiseBank(3, 2, [4, 5], 5, chunk=2)
    for _ in range(20):
        x, y = full.next(), part.next()
        assert np.array_equal(x[4:], y)


def test_refined_bank_combines_fine_draws():
    K, dt = 4, 0.1
    coarse = NoiseBank(9, 0, [0], K, dt=dt, refine=2)
    fine = NoiseBank(9, 0, [0], K)
    k2 = np.arange(1, K + 1) ** 2.0
    h = dt / 2
    sd_f = np.sqrt(-np.expm1(-2 * k2 * h) / (2 * k2))
    sd_c = np.sqrt(-np.expm1(-2 * k2 * dt) / (2 * k2))
    for _ in range(3):
        a, b = fine.next()[0], fine.next()[0]
        expected = (np.exp(-k2 * h) * sd_f * a + sd_f * b) / sd_c
        assert np.allclose(coarse.next()[0], expected)


def test_bad_arguments():
    with pytest.raises(ConfigurationError):
        NoiseStream(-1, 0)
    with pytest.raises(ConfigurationError):
        NoiseStream(2 ** 64, 0)
    with pytest.raises(ConfigurationError):
        NoiseBank(0, 0, [0], 4, refine=2)
