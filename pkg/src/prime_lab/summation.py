"""Compensated accumulation helpers.

Scalar sums go through :func:`math.fsum`.  :class:`NeumaierAccumulator`
accumulates whole arrays elementwise, so many independent running sums
(one per grid point) advance together in a fixed order.
"""

import numpy as np


class NeumaierAccumulator:
    """Elementwise Neumaier (improved Kahan) summation over arrays."""

    def __init__(self, shape):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, x):
        s = self.s
        t = s + x
        big = np.abs(s) >= np.abs(x)
        # lost low-order bits of whichever operand was smaller
        self.c += np.where(big, (s - t) + x, (x - t) + s)
        self.s = t

    @property
    def total(self):
        return self.s + self.c


def compensated_sum_rows(blocks):
    """Combine per-block partial arrays, in the given order, with compensation."""
    blocks = list(blocks)
    acc = NeumaierAccumulator(np.shape(blocks[0]))
    for b in blocks:
        acc.add(b)
    return acc.total
