import numpy as np

from layersnn.rng import RandomStream, random_stream, splitmix64


def test_splitmix64_reference_output():
    # first output for state 0 in the reference splitmix64.c
    _, out = splitmix64(0)
    assert out == 0xE220A8397B1DCDAF


def test_same_seed_same_draws():
    a = random_stream(1234).uniform(1000)
    b = random_stream(1234).uniform(1000)
    assert np.array_equal(a, b)


def test_adjacent_seeds_differ():
    assert not np.array_equal(random_stream(7).raw(1000), random_stream(8).raw(1000))


def test_uniform_mean_and_range():
    x = random_stream(99).uniform(10**6)
    assert abs(x.mean() - 0.5) < 0.01
    assert x.min() >= 0.0 and x.max() < 1.0


def test_uniform_is_top_53_bits_of_raw():
    raw = random_stream(5).raw(10)
    u = random_stream(5).uniform(10)
    assert np.array_equal(u, (raw >> np.uint64(11)).astype(float) * 2.0**-53)


def test_state_roundtrip_resumes_sequence():
    s = RandomStream(42)
    s.uniform(17)
    saved = s.get_state()
    expect = s.uniform(50)
    t = RandomStream(0)
    t.set_state(*saved)
    assert np.array_equal(t.uniform(50), expect)


def test_seed_bounds():
    import pytest

    with pytest.raises(ValueError):
        RandomStream(-1)
    with pytest.raises(ValueError):
        RandomStream(2**64)
    RandomStream(2**64 - 1)
