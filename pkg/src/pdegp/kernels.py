"""Covariance functions with closed-form partial derivatives.

Every kernel exposes ``derivative(order1, order2, X1, X2, out1, out2)`` which
returns the pairwise matrix of ``d^order1_x1 d^order2_x2 k_{out1,out2}(x1, x2)``.
Linear functional sets (see :mod:`pdegp.operators`) are applied to a kernel by
expanding them into weighted point-derivative atoms, so any kernel that can
evaluate its derivatives also supports integrals, weak forms and projections.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import UnsupportedOrderError


def _as_points(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, 1) if dim == 1 else X.reshape(1, -1)
    if X.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {X.shape}")
    return X


def _as_order(order, dim: int) -> tuple[int, ...]:
    if order is None:
        return (0,) * dim
    if np.isscalar(order):
        order = (int(order),)
    order = tuple(int(a) for a in order)
    if len(order) != dim or any(a < 0 for a in order):
        raise ValueError(f"invalid multi-index {order} for dimension {dim}")
    return order


class Kernel:
    """Base class for (possibly multi-output) covariance functions."""

    input_dim: int = 1
    output_dim: int = 1

    def smoothness(self, output: int = 0) -> tuple[int, ...]:
        """Largest derivative multi-index available in each argument."""
        raise NotImplementedError

    def derivative(self, order1, order2, X1, X2, out1: int = 0, out2: int = 0):
        raise NotImplementedError

    def __call__(self, X1, X2, out1: int = 0, out2: int = 0) -> np.ndarray:
        return self.derivative(None, None, X1, X2, out1, out2)

    def check_order(self, order, output: int = 0) -> None:
        beta = self.smoothness(output)
        if any(a > b for a, b in zip(order, beta)):
            raise UnsupportedOrderError(
                f"derivative order {tuple(order)} exceeds kernel smoothness {beta} "
                f"(output {output})"
            )

    def matrix(self, x1, x2) -> np.ndarray:
        """Matrix-valued evaluation ``k(x1, x2)`` of shape ``(d', d')``."""
        out = np.empty((self.output_dim, self.output_dim))
        for i in range(self.output_dim):
            for j in range(self.output_dim):
                out[i, j] = self.derivative(None, None, x1, x2, i, j)[0, 0]
        return out

    def apply(self, L1, L2) -> np.ndarray:
        """``L1 k L2'`` for two functional sets given as weighted atoms."""
        return L1.weights @ self.atom_matrix(L1, L2) @ L2.weights.T

    def atom_matrix(self, L1, L2) -> np.ndarray:
        K = np.zeros((L1.num_atoms, L2.num_atoms))
        groups1 = L1.atom_groups()
        groups2 = L1.atom_groups() if L2 is L1 else L2.atom_groups()
        for (ord1, out1), idx1 in groups1.items():
            self.check_order(ord1, out1)
            for (ord2, out2), idx2 in groups2.items():
                self.check_order(ord2, out2)
                K[np.ix_(idx1, idx2)] = self.derivative(
                    ord1, ord2, L1.points[idx1], L2.points[idx2], out1, out2
                )
        return K


@lru_cache(maxsize=None)
def _matern_polys(p: int) -> tuple[np.ndarray, ...]:
    """Coefficients of ``q_n`` with ``(d/dt)^n [q(t) e^-t] = q_n(t) e^-t``.

    ``q`` is the half-integer Matern polynomial for ``nu = p + 1/2`` in the
    scaled distance ``t = sqrt(2 nu) |r| / l``.
    """
    q = np.zeros(p + 1)
    for i in range(p + 1):
        q[p - i] = (
            math.factorial(p)
            / math.factorial(2 * p)
            * math.factorial(p + i)
            / (math.factorial(i) * math.factorial(p - i))
            * 2.0 ** (p - i)
        )
    polys = [q]
    for _ in range(2 * p):
        prev = polys[-1]
        polys.append(P.polysub(P.polyder(prev), prev) if prev.size > 1 else -prev)
    return tuple(polys)


class MaternKernel1D(Kernel):
    """Half-integer Matern covariance on the real line.

    ``nu`` must be one of 1/2, 3/2, 5/2, 7/2.  Paths of the associated process are
    ``p = nu - 1/2`` times continuously differentiable, so derivatives up to order
    ``(p, p)`` are available.
    """

    input_dim = 1

    def __init__(self, nu: float, lengthscale: float = 1.0, output_scale_sq: float = 1.0):
        p = nu - 0.5
        if not (float(p).is_integer() and 0 <= p <= 3):
            raise ValueError(f"only nu in {{1/2, 3/2, 5/2, 7/2}} is supported, got {nu}")
        if not lengthscale > 0:
            raise ValueError("lengthscale must be positive")
        if not output_scale_sq > 0:
            raise ValueError("output_scale_sq must be positive")
        self.nu = float(nu)
        self.p = int(p)
        self.lengthscale = float(lengthscale)
        self.output_scale_sq = float(output_scale_sq)
        self._c = math.sqrt(2.0 * self.nu) / self.lengthscale
        self._polys = _matern_polys(self.p)

    def __repr__(self):
        return (
            f"MaternKernel1D(nu={self.nu}, lengthscale={self.lengthscale}, "
            f"output_scale_sq={self.output_scale_sq})"
        )

    def smoothness(self, output: int = 0) -> tuple[int, ...]:
        return (self.p,)

    def radial_derivative(self, n: int, r: np.ndarray) -> np.ndarray:
        """``g^(n)(r)`` where ``k(x1, x2) = g(x1 - x2)``."""
        if n > 2 * self.p:
            raise UnsupportedOrderError(
                f"Matern-{self.nu} has no closed-form derivative of total order {n}"
            )
        r = np.asarray(r, dtype=float)
        t = self._c * np.abs(r)
        sign = np.where(r < 0, (-1.0) ** n, 1.0) if n % 2 else 1.0
        return (
            self.output_scale_sq
            * sign
            * self._c**n
            * P.polyval(t, self._polys[n])
            * np.exp(-t)
        )

    def derivative(self, order1, order2, X1, X2, out1: int = 0, out2: int = 0):
        a = _as_order(order1, 1)[0]
        b = _as_order(order2, 1)[0]
        if a > self.p or b > self.p:
            raise UnsupportedOrderError(
                f"derivative order ({a}, {b}) exceeds Matern-{self.nu} smoothness "
                f"({self.p}, {self.p})"
            )
        x1 = np.asarray(X1, dtype=float).reshape(-1)
        x2 = np.asarray(X2, dtype=float).reshape(-1)
        r = x1[:, None] - x2[None, :]
        return (-1.0) ** b * self.radial_derivative(a + b, r)


def matern_eval(kernel: MaternKernel1D, x1: float, x2: float) -> float:
    return float(kernel.derivative(0, 0, [x1], [x2])[0, 0])


class TensorProductKernel(Kernel):
    """Product of one-dimensional Matern kernels, one factor per input dimension."""

    def __init__(self, factors):
        factors = list(factors)
        if not factors:
            raise ValueError("at least one factor is required")
        self.factors = factors
        self.input_dim = len(factors)

    def smoothness(self, output: int = 0) -> tuple[int, ...]:
        return tuple(f.smoothness()[0] for f in self.factors)

    def derivative(self, order1, order2, X1, X2, out1: int = 0, out2: int = 0):
        X1 = _as_points(X1, self.input_dim)
        X2 = _as_points(X2, self.input_dim)
        a = _as_order(order1, self.input_dim)
        b = _as_order(order2, self.input_dim)
        out = np.ones((X1.shape[0], X2.shape[0]))
        for i, f in enumerate(self.factors):
            out *= f.derivative(a[i], b[i], X1[:, i], X2[:, i])
        return out


class IsotropicMaternKernel(Kernel):
    """Multivariate Matern kernel of the Euclidean distance.

    That its sample paths lie in the matching Hoelder space is a conjecture, not a
    theorem; prefer :class:`TensorProductKernel` for PDE work.  Only derivative
    orders with ``|alpha| <= 1`` in each argument are implemented.
    """

    def __init__(self, nu: float, lengthscale: float, output_scale_sq: float, input_dim: int):
        self._radial = MaternKernel1D(nu, lengthscale, output_scale_sq)
        self.input_dim = int(input_dim)
        self.p = self._radial.p
        c = self._radial._c
        polys = self._radial._polys
        self._c = c
        # a(t) = q_1(t) / t, used for the gradient of the radial profile
        if self.p >= 1:
            q1 = polys[1]
            self._a = q1[1:] if q1.size > 1 else np.zeros(1)
            self._da = P.polysub(P.polyder(self._a), self._a) if self._a.size > 1 else -self._a

    def smoothness(self, output: int = 0) -> tuple[int, ...]:
        return (min(self.p, 1),) * self.input_dim

    def derivative(self, order1, order2, X1, X2, out1: int = 0, out2: int = 0):
        X1 = _as_points(X1, self.input_dim)
        X2 = _as_points(X2, self.input_dim)
        a = _as_order(order1, self.input_dim)
        b = _as_order(order2, self.input_dim)
        if sum(a) > 1 or sum(b) > 1 or (sum(a) + sum(b) > 0 and self.p < 1):
            raise UnsupportedOrderError(
                f"isotropic Matern supports |alpha| <= 1 per argument, got {a}, {b}"
            )
        R = X1[:, None, :] - X2[None, :, :]
        rho = np.sqrt(np.sum(R**2, axis=-1))
        t = self._c * rho
        s2 = self._radial.output_scale_sq
        e = np.exp(-t)
        if sum(a) == 0 and sum(b) == 0:
            return s2 * P.polyval(t, self._radial._polys[0]) * e
        A = s2 * self._c**2 * P.polyval(t, self._a) * e
        if sum(b) == 0:
            return A * R[..., a.index(1)]
        if sum(a) == 0:
            return -A * R[..., b.index(1)]
        i, j = a.index(1), b.index(1)
        dA = s2 * self._c**3 * P.polyval(t, self._da) * e
        with np.errstate(invalid="ignore", divide="ignore"):
            term = np.where(rho > 0, dA * R[..., i] * R[..., j] / np.where(rho > 0, rho, 1.0), 0.0)
        return -(term + (A if i == j else 0.0))


class ParametricKernel(Kernel):
    """Finite-rank kernel ``k(x1, x2) = phi(x1)^T Sigma phi(x2)``.

    ``features(X, order)`` must return the ``(n, m)`` matrix of feature
    derivatives; ``smoothness`` declares the largest supported order.
    """

    def __init__(self, features, weight_cov, smoothness, input_dim: int = 1):
        self.features = features
        self.weight_cov = np.asarray(weight_cov, dtype=float)
        self._beta = tuple(int(s) for s in np.atleast_1d(smoothness))
        self.input_dim = input_dim

    @classmethod
    def from_basis(cls, basis, weight_cov=None):
        m = basis.size
        cov = np.eye(m) if weight_cov is None else weight_cov
        return cls(
            lambda X, order: basis.evaluate(np.asarray(X).reshape(-1), _as_order(order, 1)[0]),
            cov,
            basis.smoothness,
        )

    def smoothness(self, output: int = 0) -> tuple[int, ...]:
        return self._beta

    def derivative(self, order1, order2, X1, X2, out1: int = 0, out2: int = 0):
        a = _as_order(order1, self.input_dim)
        b = _as_order(order2, self.input_dim)
        self.check_order(a)
        self.check_order(b)
        F1 = self.features(_as_points(X1, self.input_dim), a)
        F2 = self.features(_as_points(X2, self.input_dim), b)
        return F1 @ self.weight_cov @ F2.T


class MultiOutputKernel(Kernel):
    """Kernel over the stacked index set ``{0..d'-1} x X``.

    ``blocks`` maps ``(i, j)`` with ``i <= j`` to the kernel of the pair of
    outputs; ``(j, i)`` is obtained by transposition and missing pairs are zero.
    """

    def __init__(self, blocks: dict, output_dim: int):
        self.output_dim = int(output_dim)
        self.blocks = {}
        for (i, j), k in blocks.items():
            if i > j:
                raise ValueError("specify only blocks (i, j) with i <= j")
            self.blocks[(i, j)] = k
        for i in range(self.output_dim):
            if (i, i) not in self.blocks:
                raise ValueError(f"missing diagonal block for output {i}")
        dims = {k.input_dim for k in self.blocks.values()}
        if len(dims) != 1:
            raise ValueError("all blocks must share the input dimension")
        self.input_dim = dims.pop()

    @classmethod
    def independent(cls, *kernels):
        return cls({(i, i): k for i, k in enumerate(kernels)}, len(kernels))

    def smoothness(self, output: int = 0) -> tuple[int, ...]:
        return self.blocks[(output, output)].smoothness()

    def derivative(self, order1, order2, X1, X2, out1: int = 0, out2: int = 0):
        if (out1, out2) in self.blocks:
            return self.blocks[(out1, out2)].derivative(order1, order2, X1, X2)
        if (out2, out1) in self.blocks:
            return self.blocks[(out2, out1)].derivative(order2, order1, X2, X1).T
        n1 = _as_points(X1, self.input_dim).shape[0]
        n2 = _as_points(X2, self.input_dim).shape[0]
        return np.zeros((n1, n2))


class RecoveryKernel(Kernel):
    """``k = P k~ P' + (I - P) k~ (I - P)'`` for a trial projection ``P``.

    Observations made through ``P`` carry no information about the complement
    ``ker P``, which is what makes the posterior mean reproduce the classical
    weighted-residual solution.
    """

    def __init__(self, base: Kernel, projection):
        if base.output_dim != 1:
            raise ValueError("recovery priors are defined for single-output kernels")
        self.base = base
        self.projection = projection
        self.input_dim = base.input_dim
        self._coord = projection.coordinate_functionals()
        self._coord_cov = base.apply(self._coord, self._coord)

    def smoothness(self, output: int = 0) -> tuple[int, ...]:
        beta = self.base.smoothness()
        return tuple(min(b, s) for b, s in zip(beta, (self.projection.basis.smoothness,)))

    def apply(self, L1, L2) -> np.ndarray:
        B1 = self.projection.basis_values(L1)
        B2 = B1 if L2 is L1 else self.projection.basis_values(L2)
        C = self._coord
        K12 = self.base.apply(L1, L2)
        Kc2 = self.base.apply(C, L2)
        K1c = Kc2.T if L2 is L1 else self.base.apply(L1, C)
        return K12 - B1 @ Kc2 - K1c @ B2.T + 2.0 * B1 @ self._coord_cov @ B2.T

    def derivative(self, order1, order2, X1, X2, out1: int = 0, out2: int = 0):
        from .operators import point_evaluation

        L1 = point_evaluation(X1, order1, input_dim=self.input_dim)
        L2 = point_evaluation(X2, order2, input_dim=self.input_dim)
        return self.apply(L1, L2)


def kernel_derivative(kernel: Kernel, order1, order2, x1, x2) -> float:
    return float(kernel.derivative(order1, order2, [x1], [x2])[0, 0])


def build_recovery_prior(base_mean, base_kernel: Kernel, projection):
    """Transform a prior so that weighted-residual observations recover the
    classical solution in the posterior mean.

    Returns the projected mean (an element of the trial span) and a
    :class:`RecoveryKernel`.
    """
    from .means import TrialSpanMean

    coords = projection.project(base_mean)
    return TrialSpanMean(projection.basis, coords), RecoveryKernel(base_kernel, projection)
