"""Gaussian-process solvers for linear PDEs.

A prior process is conditioned on affine observations ``L[u] + eps = y`` of
the solution: PDE residuals tested against collocation points or weak test
functions, boundary conditions, integral constraints and noisy measurements.
With the recovery prior and weighted-residual information the posterior mean
reproduces the classical weighted-residual (e.g. finite element) solution,
while the posterior covariance quantifies the discretization uncertainty.
"""

from . import mwr
from .bases import LagrangeBasis1D, PolynomialBasis1D, lagrange_basis
from .errors import (
    ContractError,
    DomainError,
    IllConditionedBasisError,
    NumericalError,
    SingularSystemError,
    UnsupportedOrderError,
)
from .gp import GaussianProcess, GaussianVector, condition, predict, pushforward, sample
from .information import (
    BoundaryCondition,
    InformationBlock,
    boundary_block,
    measurement_block,
    mwr_block,
    pde_collocation_block,
    stationarity_block,
    weak_galerkin_block,
)
from .kernels import (
    IsotropicMaternKernel,
    Kernel,
    MaternKernel1D,
    MultiOutputKernel,
    ParametricKernel,
    RecoveryKernel,
    TensorProductKernel,
    build_recovery_prior,
    kernel_derivative,
    matern_eval,
)
from .means import (
    ConstantMean,
    FunctionMean,
    MeanFunction,
    MultiOutputMean,
    PolynomialMean,
    TrialSpanMean,
    ZeroMean,
)
from .operators import (
    Box,
    DiffOp,
    FunctionalSet,
    Interval,
    OperatorChain,
    QuadratureRule,
    StiffnessForm,
    TrialProjection,
    apply_diffop_to_function,
    compose,
    integral_functional,
    l2_project,
    point_evaluation,
)
from .solver import Policy, SolverState, StoppingCriterion, run, step

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
