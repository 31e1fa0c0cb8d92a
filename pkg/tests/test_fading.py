"""Channel models and the keyed random-stream discipline."""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from wncs.fading import (
    FastChannel,
    SlowChannel,
    apply_channel,
    rayleigh_gain_samples,
    sample_fast_symbol,
    sample_rayleigh_block,
    substream,
)


def test_substream_is_deterministic_per_key():
    a = substream(123, 4, 5).normal(size=8)
    b = substream(123, 4, 5).normal(size=8)
    assert_array_equal(a, b)


def test_substream_distinct_keys_distinct_streams():
    # keys of the same arity must give unrelated streams (callers always use a
    # fixed key depth: trailing zeros are indistinguishable to the seeding)
    base = substream(123, 0, 0).normal(size=8)
    for key in [(123, 0, 1), (123, 1, 0), (124, 0, 0), (123, 2, 2)]:
        other = substream(*key).normal(size=8)
        assert not np.array_equal(base, other)


def test_substream_rejects_negative_keys():
    with pytest.raises(ValueError):
        substream(-1)
    with pytest.raises(ValueError):
        substream(0, -2)


def test_slow_channel_validation():
    ch = SlowChannel(h=0.01)
    assert ch.block_len is None
    with pytest.raises(ValueError):
        SlowChannel(h=0.0)
    with pytest.raises(ValueError):
        SlowChannel(h=0.01, block_len=0)


def test_fast_channel_validation_and_repr():
    ch = FastChannel(sigma_h2=1e-4, rng=substream(0, 0))
    assert "1e-04" in repr(ch) or "0.0001" in repr(ch)
    with pytest.raises(ValueError):
        FastChannel(sigma_h2=0.0, rng=substream(0, 0))


def test_rayleigh_gain_samples_mean_power():
    # E[h^2] must equal the requested mean power gain
    rng = substream(7, 1)
    h = rayleigh_gain_samples(1e-4, rng, size=200_000)
    assert np.all(h > 0.0)
    assert np.mean(h**2) == pytest.approx(1e-4, rel=0.01)
    with pytest.raises(ValueError):
        rayleigh_gain_samples(0.0, rng, size=4)


def test_sample_rayleigh_block_wraps_one_draw():
    block = sample_rayleigh_block(1e-4, substream(7, 2))
    again = sample_rayleigh_block(1e-4, substream(7, 2))
    assert block.h == pytest.approx(again.h, rel=0.0)
    assert block.h > 0.0


def test_sample_fast_symbol_sign_convention():
    ch = FastChannel(sigma_h2=4e-4, rng=substream(11, 0))
    for _ in range(200):
        h, sign = sample_fast_symbol(ch)
        assert sign == (1.0 if h >= 0.0 else -1.0)
        assert abs(sign) == 1.0


def test_sample_fast_symbol_distribution():
    ch = FastChannel(sigma_h2=4e-4, rng=substream(11, 1))
    draws = np.array([sample_fast_symbol(ch)[0] for _ in range(40_000)])
    assert np.mean(draws) == pytest.approx(0.0, abs=3e-4)
    assert np.var(draws) == pytest.approx(4e-4, rel=0.03)


def test_apply_channel_noise_free_scaling():
    rng = substream(3, 0)
    r = apply_channel(np.array([1.0, -2.0, 0.5]), h=0.01, sigma_z2=0.0, rng=rng)
    assert_allclose(r, [0.01, -0.02, 0.005], rtol=1e-15)


def test_apply_channel_adds_noise_of_requested_power():
    rng = substream(3, 1)
    v = np.zeros(200_000)
    r = apply_channel(v, h=0.5, sigma_z2=0.04, rng=rng)
    assert np.var(r) == pytest.approx(0.04, rel=0.02)
    with pytest.raises(ValueError):
        apply_channel(v, h=0.5, sigma_z2=-1.0, rng=rng)
