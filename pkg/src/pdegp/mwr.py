"""Classical method of weighted residuals in one dimension.

This module is deliberately independent of the GP machinery: it assembles
``D_hat c = f_hat`` directly from basis evaluations, closed-form element
matrices and its own Gauss rule, so it can serve as the reference the
probabilistic solver is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bases import LagrangeBasis1D, PolynomialBasis1D, lagrange_basis
from .errors import ContractError, SingularSystemError

MAX_CONDITION = 1e12
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(5)

__all__ = [
    "CollocationTests",
    "GalerkinTests",
    "LagrangeBasis1D",
    "MwrSystem",
    "PolynomialBasis1D",
    "StrongOperator1D",
    "SubdomainTests",
    "assemble",
    "lagrange_basis",
    "solve",
]


def _gauss(a: float, b: float, breakpoints=()):
    cuts = np.unique([a, b, *[p for p in breakpoints if a < p < b]])
    lo, hi = cuts[:-1, None], cuts[1:, None]
    x = 0.5 * (hi - lo) * _GAUSS_NODES + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * _GAUSS_WEIGHTS
    return x.ravel(), w.ravel()


def _values(f, x):
    return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)


@dataclass(frozen=True)
class StrongOperator1D:
    """``D[u] = sum_k coefficients[k] * u^(k)`` with constant coefficients."""

    coefficients: dict

    def apply_to_basis(self, basis, x) -> np.ndarray:
        return sum(c * basis.evaluate(x, k) for k, c in self.coefficients.items())


@dataclass(frozen=True)
class CollocationTests:
    """Dirac test functionals at ``points``."""

    points: np.ndarray


@dataclass(frozen=True)
class SubdomainTests:
    """Indicator test functions of the intervals ``(a_i, b_i)`` (finite volumes)."""

    intervals: tuple


@dataclass(frozen=True)
class GalerkinTests:
    """Test functions from a basis, used with the weak form ``int kappa u' psi'``."""

    basis: object
    kappa: float | object = 1.0


@dataclass
class MwrSystem:
    D_hat: np.ndarray
    f_hat: np.ndarray
    c: np.ndarray | None = None

    @property
    def residual(self) -> float:
        if self.c is None:
            raise ContractError("system has not been solved")
        return float(np.max(np.abs(self.D_hat @ self.c - self.f_hat)))


def _stiffness(trial, tests: GalerkinTests) -> np.ndarray:
    psi = tests.basis
    same_grid = (
        isinstance(trial, LagrangeBasis1D)
        and isinstance(psi, LagrangeBasis1D)
        and trial.nodes.size == psi.nodes.size
        and np.allclose(trial.nodes, psi.nodes, rtol=0, atol=0)
        and not callable(tests.kappa)
    )
    if same_grid:
        # element matrices kappa/h [[1, -1], [-1, 1]] assembled on the full grid
        nodes = trial.nodes
        N = nodes.size
        K = np.zeros((N, N))
        for e in range(N - 1):
            h = nodes[e + 1] - nodes[e]
            K[e : e + 2, e : e + 2] += tests.kappa / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
        return K[np.ix_(psi._cols, trial._cols)]
    a, b = psi.domain
    x, w = _gauss(a, b, np.union1d(psi.breakpoints, trial.breakpoints))
    kappa = _values(tests.kappa, x) if callable(tests.kappa) else tests.kappa
    return psi.evaluate(x, 1).T @ ((w * kappa)[:, None] * trial.evaluate(x, 1))


def assemble(trial, tests, operator: StrongOperator1D | None, rhs, boundary=None) -> MwrSystem:
    """Assemble ``D_hat`` and ``f_hat``.

    Parameters
    ----------
    trial
        Trial basis (``LagrangeBasis1D`` or ``PolynomialBasis1D``).
    tests
        ``CollocationTests``, ``SubdomainTests`` or ``GalerkinTests``.
    operator
        Strong-form operator; ignored for Galerkin tests, which use the weak
        stiffness form.
    rhs
        Right-hand side ``f`` as a callable of ``x``.
    boundary
        Optional list of ``(x_b, value)`` Dirichlet conditions.  Their rows are
        placed before the PDE rows.
    """
    if isinstance(tests, CollocationTests):
        if operator is None:
            raise ContractError("collocation requires a strong-form operator")
        x = np.asarray(tests.points, dtype=float).reshape(-1)
        D = operator.apply_to_basis(trial, x)
        f = _values(rhs, x).copy()
    elif isinstance(tests, SubdomainTests):
        if operator is None:
            raise ContractError("subdomain tests require a strong-form operator")
        rows, fs = [], []
        for a, b in tests.intervals:
            x, w = _gauss(a, b, trial.breakpoints)
            rows.append(w @ operator.apply_to_basis(trial, x))
            fs.append(w @ _values(rhs, x))
        D, f = np.array(rows), np.array(fs)
    elif isinstance(tests, GalerkinTests):
        psi = tests.basis
        a, b = psi.domain
        if np.any(np.abs(psi.evaluate(np.array([a, b]))) > 1e-14):
            raise ContractError("Galerkin test functions must vanish on the boundary")
        D = _stiffness(trial, tests)
        x, w = _gauss(a, b, psi.breakpoints)
        f = psi.evaluate(x).T @ (w * _values(rhs, x))
    else:
        raise ContractError(f"unsupported test functionals {type(tests).__name__}")
    if boundary:
        xb = np.array([p for p, _ in boundary], dtype=float)
        D = np.vstack([trial.evaluate(xb), D])
        f = np.concatenate([[v for _, v in boundary], f])
    return MwrSystem(np.asarray(D, dtype=float), np.asarray(f, dtype=float))


def solve(system: MwrSystem) -> np.ndarray:
    """Coordinates ``c = D_hat^-1 f_hat``; the system is updated in place."""
    D = system.D_hat
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise SingularSystemError(f"D_hat must be square, got shape {D.shape}")
    cond = np.linalg.cond(D)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularSystemError(f"D_hat is singular or ill-conditioned (cond {cond:.3e})")
    system.c = np.linalg.solve(D, system.f_hat)
    return system.c
