"""One-dimensional trial and test bases."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from .errors import ContractError


class LagrangeBasis1D:
    """Piecewise-linear hat functions on a 1D grid.

    Parameters
    ----------
    nodes
        Strictly increasing grid ``x_0 < ... < x_{n+1}``.
    boundary
        ``"clamped"`` keeps only the hats of interior nodes, which vanish at both
        endpoints.  ``"include"`` adds the half hats of ``x_0`` and ``x_{n+1}`` so
        that boundary values are free coordinates.

    Derivatives are the piecewise (weak) derivatives; on a node the slope of the
    element to the right is returned.  Second and higher derivatives are zero
    almost everywhere and returned as such.
    """

    smoothness = 1

    def __init__(self, nodes, boundary: str = "clamped"):
        nodes = np.asarray(nodes, dtype=float).reshape(-1)
        if nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ContractError("nodes must be strictly increasing with at least 2 entries")
        if boundary not in ("clamped", "include"):
            raise ValueError(f"unknown boundary handling {boundary!r}")
        if boundary == "clamped" and nodes.size < 3:
            raise ContractError("a clamped basis needs at least one interior node")
        self.nodes = nodes
        self.boundary = boundary
        self._cols = (
            np.arange(1, nodes.size - 1) if boundary == "clamped" else np.arange(nodes.size)
        )

    @classmethod
    def uniform(cls, a: float, b: float, num_interior: int, boundary: str = "clamped"):
        return cls(np.linspace(a, b, num_interior + 2), boundary)

    @property
    def size(self) -> int:
        return self._cols.size

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        return self.nodes

    @property
    def basis_nodes(self) -> np.ndarray:
        return self.nodes[self._cols]

    def support(self, j: int) -> tuple[float, float]:
        k = self._cols[j]
        return float(self.nodes[max(k - 1, 0)]), float(self.nodes[min(k + 1, self.nodes.size - 1)])

    def evaluate(self, x, order: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        nodes = self.nodes
        N = nodes.size
        out = np.zeros((x.size, N))
        if order >= 2:
            return out[:, self._cols]
        inside = (x >= nodes[0]) & (x <= nodes[-1])
        e = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, N - 2)
        h = nodes[e + 1] - nodes[e]
        rows = np.nonzero(inside)[0]
        e, h = e[inside], h[inside]
        if order == 0:
            t = (x[inside] - nodes[e]) / h
            out[rows, e] = 1.0 - t
            out[rows, e + 1] = t
        else:
            out[rows, e] = -1.0 / h
            out[rows, e + 1] = 1.0 / h
        return out[:, self._cols]

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x, 0)

    def reconstruct(self, coords, x) -> np.ndarray:
        return self.evaluate(x) @ np.asarray(coords, dtype=float)


class PolynomialBasis1D:
    """Global polynomials of degree ``0..degree`` on an interval.

    ``kind`` is ``"monomial"`` or ``"chebyshev"`` (Chebyshev polynomials mapped
    to ``domain``).
    """

    def __init__(self, degree: int, domain=(-1.0, 1.0), kind: str = "monomial"):
        if degree < 0:
            raise ContractError("degree must be non-negative")
        a, b = map(float, domain)
        if not b > a:
            raise ContractError("domain must be a non-empty interval")
        self.degree = int(degree)
        self.kind = kind
        self._domain = (a, b)
        if kind == "monomial":
            self._polys = [Polynomial.basis(j) for j in range(degree + 1)]
        elif kind == "chebyshev":
            self._polys = [Chebyshev.basis(j, domain=[a, b]) for j in range(degree + 1)]
        else:
            raise ValueError(f"unknown polynomial kind {kind!r}")
        self.smoothness = degree + 2

    @property
    def size(self) -> int:
        return self.degree + 1

    @property
    def domain(self) -> tuple[float, float]:
        return self._domain

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array(self._domain)

    def support(self, j: int) -> tuple[float, float]:
        return self._domain

    def evaluate(self, x, order: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.stack([p.deriv(order)(x) if order else p(x) for p in self._polys], axis=1)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x, 0)

    def reconstruct(self, coords, x) -> np.ndarray:
        return self.evaluate(x) @ np.asarray(coords, dtype=float)


def lagrange_basis(nodes, boundary: str = "clamped") -> LagrangeBasis1D:
    return LagrangeBasis1D(nodes, boundary)
