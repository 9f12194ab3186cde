"""Determinism and independence of the keyed random streams."""

import numpy as np
import pytest

from hindsight import streams


def test_same_key_gives_identical_sequences():
    a = streams.stream(42, streams.DOMAIN_RATES).random(100)
    b = streams.stream(42, streams.DOMAIN_RATES).random(100)
    assert np.array_equal(a, b)


def test_different_domains_differ():
    a = streams.stream(42, streams.DOMAIN_RATES).random(100)
    b = streams.stream(42, streams.DOMAIN_SALES).random(100)
    assert not np.array_equal(a, b)


def test_different_indices_differ():
    a = streams.stream(42, streams.DOMAIN_SALES, index=0).random(100)
    b = streams.stream(42, streams.DOMAIN_SALES, index=1).random(100)
    assert not np.array_equal(a, b)


def test_different_seeds_differ():
    a = streams.stream(1, streams.DOMAIN_RATES).random(100)
    b = streams.stream(2, streams.DOMAIN_RATES).random(100)
    assert not np.array_equal(a, b)


def test_seed_bounds():
    streams.check_seed(0)
    streams.check_seed(2**64 - 1)
    with pytest.raises(ValueError):
        streams.check_seed(-1)
    with pytest.raises(ValueError):
        streams.check_seed(2**64)


def test_index_bounds():
    streams.stream(0, streams.DOMAIN_SALES, index=2**56 - 1)
    with pytest.raises(ValueError):
        streams.stream(0, streams.DOMAIN_SALES, index=2**56)
    with pytest.raises(ValueError):
        streams.stream(0, streams.DOMAIN_SALES, index=-1)
