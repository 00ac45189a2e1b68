"""Information blocks: PDEs, boundary conditions, constraints and measurements.

Each constructor returns an :class:`InformationBlock` encoding the affine
observation ``L[u] + eps = y`` of a (possibly multi-output) process, i.e. the
information operator ``I[u] = L[u] - y`` is conditioned to be zero up to noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .gp import GaussianVector
from .kernels import _as_points
from .means import MeanFunction
from .operators import (
    Box,
    DiffOp,
    FunctionalSet,
    QuadratureRule,
    StiffnessForm,
    TrialProjection,
    integral_functional,
    point_evaluation,
)

LABELS = ("PDE", "BC", "STAT", "MEAS")


@dataclass(frozen=True)
class InformationBlock:
    functionals: FunctionalSet
    rhs: np.ndarray
    noise_mean: np.ndarray
    noise_cov: np.ndarray
    label: str = "PDE"

    def __post_init__(self):
        n = len(self.functionals)
        if n == 0:
            raise ContractError("an information block needs at least one functional")
        rhs = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        mu = np.zeros(n) if self.noise_mean is None else np.atleast_1d(np.asarray(self.noise_mean, float))
        cov = np.zeros((n, n)) if self.noise_cov is None else np.asarray(self.noise_cov, float)
        if rhs.shape != (n,) or mu.shape != (n,) or cov.shape != (n, n):
            raise ContractError(
                f"block dimensions disagree: {n} functionals, rhs {rhs.shape}, "
                f"noise mean {mu.shape}, noise cov {cov.shape}"
            )
        if self.label not in LABELS:
            raise ContractError(f"unknown block label {self.label!r}")
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "noise_mean", mu)
        object.__setattr__(self, "noise_cov", cov)

    def __len__(self) -> int:
        return len(self.functionals)

    @property
    def noise(self) -> GaussianVector:
        return GaussianVector(self.noise_mean, self.noise_cov)

    def residual(self, f: MeanFunction) -> np.ndarray:
        """``I[f] = L[f] - y`` for a deterministic (possibly joint) function."""
        return self.functionals.apply(f) - self.rhs


def _exact(L: FunctionalSet, rhs, label: str) -> InformationBlock:
    return InformationBlock(L, rhs, None, None, label)


def _rhs_values(rhs, X) -> np.ndarray:
    if isinstance(rhs, MeanFunction):
        return rhs(X)
    if callable(rhs):
        x = X[:, 0] if X.shape[1] == 1 else X
        return np.broadcast_to(np.asarray(rhs(x), dtype=float), (X.shape[0],)).copy()
    return np.broadcast_to(np.asarray(rhs, dtype=float), (X.shape[0],)).copy()


def pde_collocation_block(
    D: DiffOp,
    rhs,
    X_pde,
    *,
    domain: Box | None = None,
    rhs_output: int | None = None,
) -> InformationBlock:
    """``D[u](x_i) = f(x_i)`` at collocation points.

    When ``rhs_output`` names the output of an uncertain right-hand side, the
    block observes the jointly linear ``D[u](x_i) - f(x_i) = 0`` instead and
    ``rhs`` is ignored.
    """
    X = _as_points(X_pde, D.input_dim)
    if domain is not None:
        domain.check_contains(X, "collocation point")
    L = point_evaluation(X, input_dim=D.input_dim).compose(D)
    if rhs_output is not None:
        L = L - point_evaluation(X, output=rhs_output, input_dim=D.input_dim)
        return _exact(L, np.zeros(X.shape[0]), "PDE")
    return _exact(L, _rhs_values(rhs, X), "PDE")


def weak_galerkin_block(
    form: StiffnessForm,
    rhs_f,
    tests,
    *,
    domain: Box | None = None,
    rhs_output: int | None = None,
) -> InformationBlock:
    """``B(u, psi_i) = <f, psi_i>`` for every test function of a basis."""
    if domain is not None:
        a, b = tests.domain
        for j in range(tests.size):
            lo, hi = tests.support(j)
            if lo < domain.lower[0] - 1e-12 or hi > domain.upper[0] + 1e-12:
                raise DomainError(f"test function {j} has support ({lo}, {hi}) outside {domain}")
    L = form.functionals(tests, domain)
    if rhs_output is not None:
        L = L - form.load_functionals(tests, domain, output=rhs_output)
        return _exact(L, np.zeros(len(L)), "PDE")
    return _exact(L, form.load(rhs_f, tests, domain), "PDE")


def mwr_block(
    tests,
    projection: TrialProjection | None,
    operator,
    rhs,
    *,
    domain: Box | None = None,
    label: str = "PDE",
) -> InformationBlock:
    """Weighted-residual observation ``l_i o D o P [u] = l_i[f]``.

    ``operator`` is either a :class:`StiffnessForm` (``tests`` is then a basis
    of test functions) or a :class:`DiffOp` (``tests`` is a
    :class:`FunctionalSet`).  ``projection=None`` means the identity, which
    reduces to the plain weak or strong test-functional block.
    """
    if isinstance(operator, StiffnessForm):
        L = operator.functionals(tests, domain)
        y = operator.load(rhs, tests, domain)
    elif isinstance(operator, DiffOp):
        if not isinstance(tests, FunctionalSet):
            raise ContractError("strong-form weighted residuals need a FunctionalSet of tests")
        L = tests.compose(operator)
        y = tests.apply(rhs) if isinstance(rhs, MeanFunction) else np.broadcast_to(
            np.asarray(rhs, dtype=float), (len(tests),)
        ).copy()
    elif operator is None:
        L = tests
        y = tests.apply(rhs) if isinstance(rhs, MeanFunction) else np.broadcast_to(
            np.asarray(rhs, dtype=float), (len(tests),)
        ).copy()
    else:
        raise ContractError(f"unsupported operator {type(operator).__name__}")
    if projection is not None:
        L = L.compose(projection)
    return _exact(L, y, label)


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet or Neumann condition at boundary sites of a box domain.

    For Neumann conditions ``-kappa d_eta u(x) = value`` with exterior normal
    ``eta``; in 1D ``eta = -1`` at the left and ``+1`` at the right endpoint.
    ``values`` may be a sequence of numbers, or ``flux_output`` may name the
    output of the process carrying the boundary values, in which case the block
    observes ``B[u](x) - g(x) = 0`` jointly.
    """

    kind: str
    sites: tuple
    domain: Box
    values: tuple | None = None
    kappa: float = 1.0
    normals: tuple | None = None
    output: int = 0
    flux_output: int | None = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise ContractError(f"unknown boundary condition kind {self.kind!r}")


def _exterior_normals(domain: Box, X: np.ndarray) -> np.ndarray:
    lo, hi = np.array(domain.lower), np.array(domain.upper)
    tol = 1e-12 * max(hi - lo)
    N = np.zeros_like(X)
    N[np.abs(X - lo) <= tol] = -1.0
    N[np.abs(X - hi) <= tol] = 1.0
    if np.any(np.count_nonzero(N, axis=1) != 1):
        raise DomainError("normals at box corners are ambiguous; pass them explicitly")
    return N


def boundary_block(bc: BoundaryCondition) -> InformationBlock:
    d = bc.domain.dim
    X = _as_points(np.asarray(bc.sites, dtype=float), d)
    if not np.all(bc.domain.on_boundary(X)):
        bad = X[~bc.domain.on_boundary(X)][0]
        raise DomainError(f"boundary site {bad.tolist()} is not on the boundary of {bc.domain}")
    n = X.shape[0]
    if bc.kind == "dirichlet":
        L = point_evaluation(X, output=bc.output, input_dim=d)
    else:
        N = _exterior_normals(bc.domain, X) if bc.normals is None else _as_points(bc.normals, d)
        rows = []
        for i in range(n):
            terms = []
            for j in range(d):
                if N[i, j] != 0.0:
                    alpha = [0] * d
                    alpha[j] = 1
                    terms.append((bc.output, alpha, -bc.kappa * N[i, j]))
            rows.append(point_evaluation(X[i : i + 1], input_dim=d).compose(DiffOp(terms, d)))
        L = FunctionalSet.stack(*rows)
    if bc.flux_output is not None:
        L = L - point_evaluation(X, output=bc.flux_output, input_dim=d)
        return _exact(L, np.zeros(n), "BC")
    if bc.values is None:
        raise ContractError("boundary values or a flux output are required")
    return _exact(L, np.broadcast_to(np.asarray(bc.values, dtype=float), (n,)).copy(), "BC")


def stationarity_block(
    qv_output: int,
    qa_output: int,
    width: float,
    height: float,
    *,
    output_dim: int | None = None,
    rule: QuadratureRule | None = None,
) -> InformationBlock:
    """Net heat balance ``h int_0^w qV - h (qA(0) + qA(w)) = 0`` of a 1D slice."""
    if output_dim is not None and not (0 <= qv_output < output_dim and 0 <= qa_output < output_dim):
        raise ContractError(
            f"outputs {qv_output}, {qa_output} not available in a {output_dim}-output process"
        )
    rule = QuadratureRule.gauss_legendre(64) if rule is None else rule
    source = integral_functional(None, (0.0, width), rule, output=qv_output)
    sides = point_evaluation([0.0, width], output=qa_output)
    L = height * source - height * (np.ones((1, 2)) @ sides)
    return _exact(L, np.zeros(1), "STAT")


def measurement_block(X_meas, y_meas, noise_std: float, *, output: int = 0, input_dim: int = 1):
    """Noisy point observations ``u(x_i) + eps_i = y_i`` with ``eps ~ N(0, s^2 I)``."""
    if noise_std < 0:
        raise ContractError("noise_std must be non-negative")
    X = _as_points(np.asarray(X_meas, dtype=float).reshape(-1, input_dim), input_dim)
    if X.shape[0] == 0:
        raise ContractError("a measurement block needs at least one site")
    n = X.shape[0]
    return InformationBlock(
        point_evaluation(X, output=output, input_dim=input_dim),
        np.asarray(y_meas, dtype=float).reshape(n),
        np.zeros(n),
        noise_std**2 * np.eye(n),
        "MEAS",
    )
