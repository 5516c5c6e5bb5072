import numpy as np
import pytest

from migsched import build_partition, expand


def test_six_rounds_three_blocks():
    p = build_partition(6, 3)
    assert p.updated_indices == (0, 1, 3, 5, 7)
    assert p.block_of == {1: 1, 2: 1, 3: 3, 4: 3, 5: 5, 6: 5}
    assert p.s == 2
    assert p.n_reduced == 5


def test_single_block():
    p = build_partition(4, 1)
    assert p.updated_indices == (0, 1, 5)
    assert p.block_of == {1: 1, 2: 1, 3: 1, 4: 1}


def test_uneven_blocks_front_loaded():
    p = build_partition(5, 2)
    assert p.updated_indices == (0, 1, 4, 6)
    assert p.block_of == {1: 1, 2: 1, 3: 1, 4: 4, 5: 4}


def test_no_precopy_rounds():
    p = build_partition(0, 0)
    assert p.updated_indices == (0, 1)
    assert p.block_of == {}
    assert list(p.segment_rounds) == [1, 1]


@pytest.mark.parametrize("i_max,q", [(3, 0), (3, 4), (0, 1), (-1, 0)])
def test_q_out_of_range(i_max, q):
    with pytest.raises(ValueError):
        build_partition(i_max, q)


def test_expand_blockwise_copies():
    p = build_partition(6, 3)
    sched = expand(p, [10.0, 11.0, 13.0, 15.0, 17.0])
    assert sched.rates == (10.0, 11.0, 11.0, 13.0, 13.0, 15.0, 15.0, 17.0)


def test_expand_identity_when_fully_updated():
    p = build_partition(4, 4)
    sched = expand(p, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    assert sched.rates == (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)


def test_expand_single_leader():
    p = build_partition(4, 1)
    sched = expand(p, [1.0, 2.0, 3.0])
    assert sched.rates == (1.0, 2.0, 2.0, 2.0, 2.0, 3.0)


def test_expand_length_mismatch():
    with pytest.raises(ValueError):
        expand(build_partition(4, 2), [1.0, 2.0])


def test_partition_structure_random(rng):
    for _ in range(200):
        i_max = int(rng.integers(1, 30))
        q = int(rng.integers(1, i_max + 1))
        p = build_partition(i_max, q)
        assert len(p.updated_indices) == q + 2
        assert p.updated_indices[0] == 0
        assert p.updated_indices[-1] == i_max + 1
        # blocks cover 1..i_max exactly once, contiguously, led by their first index
        assert sorted(p.block_of) == list(range(1, i_max + 1))
        leaders = p.updated_indices[1:-1]
        for lead in leaders:
            assert p.block_of[lead] == lead
        for i in range(2, i_max + 1):
            assert p.block_of[i] in (p.block_of[i - 1], i)
        sizes = list(p.segment_rounds)
        assert sizes[0] == sizes[-1] == 1
        assert sum(sizes[1:-1]) == i_max
        assert max(sizes[1:-1]) - min(sizes[1:-1]) <= 1
