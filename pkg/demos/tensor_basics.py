"""Unfoldings and the n-mode product on the 3 x 4 x 2 tensor holding 1..24."""

import numpy as np

from hiddencorr import nmode_product, slice_, unfold_general, unfold_n

x = np.arange(1, 25).reshape((3, 4, 2), order="F")
print("frontal slice 1:\n", slice_(x, 3, 1))
print("mode-1 unfolding:\n", unfold_n(x, 1))
print("rows {3,1}, columns {2}:\n", unfold_general(x, (3, 1), (2,)))
y = nmode_product(x, np.array([[1, 2, 3], [4, 5, 6]]), 1)
print("X x_1 V, slices:\n", y[:, :, 0], "\n", y[:, :, 1])
