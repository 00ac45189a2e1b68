"""Mean functions with exact derivatives."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import Polynomial

from .errors import UnsupportedOrderError
from .kernels import _as_order, _as_points


class MeanFunction:
    """Scalar- or vector-valued function exposing ``derivative(order, X, output)``."""

    input_dim: int = 1
    output_dim: int = 1

    def derivative(self, order, X, output: int = 0) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, X, output: int = 0) -> np.ndarray:
        return self.derivative(None, X, output)

    def apply(self, L) -> np.ndarray:
        """Values ``L[m]`` of a functional set applied to this function."""
        vals = np.zeros(L.num_atoms)
        for (order, output), idx in L.atom_groups().items():
            vals[idx] = self.derivative(order, L.points[idx], output)
        return L.weights @ vals


class ZeroMean(MeanFunction):
    def __init__(self, input_dim: int = 1, output_dim: int = 1):
        self.input_dim = input_dim
        self.output_dim = output_dim

    def derivative(self, order, X, output: int = 0):
        return np.zeros(_as_points(X, self.input_dim).shape[0])


class ConstantMean(MeanFunction):
    def __init__(self, value: float, input_dim: int = 1):
        self.value = float(value)
        self.input_dim = input_dim

    def derivative(self, order, X, output: int = 0):
        X = _as_points(X, self.input_dim)
        if sum(_as_order(order, self.input_dim)) > 0:
            return np.zeros(X.shape[0])
        return np.full(X.shape[0], self.value)


class PolynomialMean(MeanFunction):
    """Polynomial in one variable, coefficients lowest degree first."""

    def __init__(self, coef):
        self.poly = Polynomial(coef)

    def derivative(self, order, X, output: int = 0):
        x = _as_points(X, 1)[:, 0]
        return self.poly.deriv(_as_order(order, 1)[0])(x)


class FunctionMean(MeanFunction):
    """Wraps user callables.

    ``derivatives`` maps multi-index tuples to callables of an ``(n, d)`` array;
    requesting an order that is not listed raises :class:`UnsupportedOrderError`.
    """

    def __init__(self, fn, derivatives=None, input_dim: int = 1):
        self.input_dim = input_dim
        self._fns = {(0,) * input_dim: fn}
        for k, f in (derivatives or {}).items():
            self._fns[_as_order(k, input_dim)] = f

    def derivative(self, order, X, output: int = 0):
        order = _as_order(order, self.input_dim)
        if order not in self._fns:
            raise UnsupportedOrderError(f"no derivative of order {order} supplied")
        X = _as_points(X, self.input_dim)
        arg = X[:, 0] if self.input_dim == 1 else X
        return np.broadcast_to(np.asarray(self._fns[order](arg), dtype=float), (X.shape[0],)).copy()


class MultiOutputMean(MeanFunction):
    def __init__(self, *means: MeanFunction):
        self.means = means
        self.output_dim = len(means)
        self.input_dim = means[0].input_dim

    def derivative(self, order, X, output: int = 0):
        return self.means[output].derivative(order, X)


class TrialSpanMean(MeanFunction):
    """``sum_j c_j phi_j`` for a trial basis ``phi``."""

    def __init__(self, basis, coords):
        self.basis = basis
        self.coords = np.asarray(coords, dtype=float)

    def derivative(self, order, X, output: int = 0):
        x = _as_points(X, 1)[:, 0]
        return self.basis.evaluate(x, _as_order(order, 1)[0]) @ self.coords
