import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nomasim.engine import chunk_ranges, map_chunks
from nomasim.rng import RngStream


def test_block_equals_concatenated_slices():
    rng = RngStream(11, 4)
    whole = rng.uniform_block(0, 100, 7)
    parts = np.vstack([rng.uniform_block(a, n, 7) for a, n in [(0, 13), (13, 50), (63, 37)]])
    assert np.array_equal(whole, parts)


@settings(max_examples=50, deadline=None)
@given(first=st.integers(0, 10**6), n=st.integers(1, 20), width=st.integers(1, 13))
def test_trial_rows_do_not_depend_on_window(first, n, width):
    rng = RngStream(3, 99)
    block = rng.uniform_block(first, n, width)
    for i in (0, n - 1):
        assert np.array_equal(block[i], rng.uniforms(width, first + i))


def test_uniforms_lie_in_unit_interval():
    u = RngStream(0).uniform_block(0, 1000, 5)
    assert u.min() >= 0.0 and u.max() < 1.0


def test_uniforms_use_53_bits():
    u = RngStream(7).uniform_block(0, 100, 4)
    assert np.array_equal(u * 2.0**53, np.floor(u * 2.0**53))


def test_keys_differ_per_stream_and_seed():
    keys = {tuple(RngStream(s, i).key) for s in (0, 1) for i in (0, 1, 2**63)}
    assert len(keys) == 6


def test_child_keeps_master_seed():
    assert RngStream(5, 1).child(9) == RngStream(5, 9)


@pytest.mark.parametrize("seed, stream", [(-1, 0), (2**64, 0), (0, -3), (0, 2**64)])
def test_out_of_range_ids_rejected(seed, stream):
    with pytest.raises(ValueError):
        RngStream(seed, stream)


def test_large_trial_index_supported():
    rng = RngStream(1)
    assert rng.uniforms(3, 2**62).shape == (3,)


def test_chunk_ranges_cover_trials():
    assert chunk_ranges(10, 4) == [(0, 4), (4, 4), (8, 2)]
    assert chunk_ranges(0, 4) == []


def test_map_chunks_order_is_independent_of_workers():
    rng = RngStream(8)

    def fn(first, count):
        return rng.uniform_block(first, count, 3).sum(axis=1)

    one = np.concatenate(map_chunks(fn, 1000, workers=1, chunk=64))
    many = np.concatenate(map_chunks(fn, 1000, workers=8, chunk=64))
    assert np.array_equal(one, many)
