"""Blockwise partition of the pre-copy rounds into updated and held rates.

Out of the i_max + 2 round rates, only q + 2 are decision variables: R_0, the
first rate of each of q contiguous blocks covering rounds 1..i_max, and the
stop-and-copy rate R_{i_max+1}.  The remaining rates are held equal to their
block leader.  q tunes the complexity of the optimisation from a single
mid-migration rate (q = 1) to fully free rates (q = i_max).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RatePartition:
    """Updated/held structure for a given (i_max, q)."""

    i_max: int
    q: int
    s: float                 # nominal block size i_max / q
    updated_indices: tuple   # (0, leaders..., i_max + 1)
    block_of: dict           # pre-copy round index -> its block leader index

    @property
    def n_reduced(self):
        """Number of decision rates (q + 2)."""
        return len(self.updated_indices)

    @property
    def segment_rounds(self):
        """Rounds held at each decision rate: (1, block sizes..., 1)."""
        sizes = [1]
        leaders = self.updated_indices[1:-1]
        for j, lead in enumerate(leaders):
            nxt = leaders[j + 1] if j + 1 < len(leaders) else self.i_max + 1
            sizes.append(nxt - lead)
        sizes.append(1)
        return np.asarray(sizes, dtype=np.int64)


def build_partition(i_max, q):
    """Partition rounds 1..i_max into q contiguous blocks.

    When q does not divide i_max, the first ``i_max % q`` blocks take the
    larger size ``ceil(i_max / q)``.  ``i_max = 0`` forces ``q = 0`` (no
    pre-copy rounds to partition).
    """
    if i_max < 0:
        raise ValueError("i_max must be >= 0")
    if i_max == 0:
        if q != 0:
            raise ValueError("i_max = 0 admits only q = 0")
        return RatePartition(0, 0, 0.0, (0, 1), {})
    if not 1 <= q <= i_max:
        raise ValueError(f"q must be in [1, {i_max}], got {q}")

    base, extra = divmod(i_max, q)
    leaders = []
    block_of = {}
    start = 1
    for j in range(q):
        size = base + (1 if j < extra else 0)
        leaders.append(start)
        for i in range(start, start + size):
            block_of[i] = start
        start += size
    return RatePartition(
        i_max=i_max,
        q=q,
        s=i_max / q,
        updated_indices=(0, *leaders, i_max + 1),
        block_of=block_of,
    )


def expand(partition, reduced_rates):
    """Expand the q + 2 decision rates to the full i_max + 2 schedule."""
    from .model import RateSchedule

    reduced = list(reduced_rates)
    if len(reduced) != partition.n_reduced:
        raise ValueError(
            f"expected {partition.n_reduced} reduced rates, got {len(reduced)}"
        )
    by_index = dict(zip(partition.updated_indices, reduced))
    rates = [
        by_index[i] if i in by_index else by_index[partition.block_of[i]]
        for i in range(partition.i_max + 2)
    ]
    return RateSchedule(partition.i_max, tuple(rates))
