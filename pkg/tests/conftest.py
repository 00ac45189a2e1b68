import numpy as np
import pytest

# central difference stencils (offsets, weights) with O(h^2) error
_STENCILS = {
    0: (np.array([0.0]), np.array([1.0])),
    1: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    2: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0])),
    3: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([-0.5, 1.0, -1.0, 0.5])),
}


def fd_mixed(g, x1, x2, a, b, h=0.1, levels=4):
    """``d^a/dx1^a d^b/dx2^b g(x1, x2)`` by a tensor central-difference stencil,
    Richardson-extrapolated over ``levels`` halvings of ``h``.

    ``g`` must accept arrays ``X1`` of shape ``(n, 1)`` and ``X2`` of shape
    ``(1, m)`` (broadcasting), i.e. ``g(x1[:, None], x2[None, :])``.
    """
    o1, w1 = _STENCILS[a]
    o2, w2 = _STENCILS[b]
    T = np.empty((levels, levels))
    for i in range(levels):
        hi = h / 2**i
        G = g(x1 + hi * o1, x2 + hi * o2)
        T[i, 0] = w1 @ G @ w2 / hi ** (a + b)
        for j in range(1, i + 1):
            T[i, j] = T[i, j - 1] + (T[i, j - 1] - T[i - 1, j - 1]) / (4**j - 1)
    return T[-1, -1]


def richardson(f, x, h=0.1, levels=4):
    """Richardson-extrapolated central difference ``f'(x)`` of a scalar function."""
    return fd_mixed(lambda s, t: np.vectorize(f)(s)[:, None] + 0 * t, x, np.zeros(1), 1, 0, h, levels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
