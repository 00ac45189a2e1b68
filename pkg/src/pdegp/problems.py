"""Ready-made problem setups: the 1D weak Poisson/FEM comparison and the CPU
heat-conduction slice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from . import mwr
from .bases import LagrangeBasis1D
from .gp import GaussianProcess
from .information import (
    BoundaryCondition,
    InformationBlock,
    boundary_block,
    measurement_block,
    mwr_block,
    pde_collocation_block,
    stationarity_block,
)
from .kernels import MaternKernel1D, MultiOutputKernel, build_recovery_prior
from .means import ConstantMean, FunctionMean, MultiOutputMean, PolynomialMean
from .operators import (
    DiffOp,
    Interval,
    QuadratureRule,
    StiffnessForm,
    TrialProjection,
    point_evaluation,
)
from .solver import Policy, SolverState, run

# ---------------------------------------------------------------------------------------
# Poisson equation with linear Lagrange elements
# ---------------------------------------------------------------------------------------


@dataclass
class PoissonFemSetup:
    """``-kappa u'' = f`` on ``(a, b)`` with Dirichlet values ``bc``.

    ``num_basis`` interior hats serve as test functions.  The trial basis adds
    the two boundary half hats, and the boundary conditions are observed through
    the projection as separate rows (``[BC; PDE]``).
    """

    rhs: object = field(default_factory=lambda: PolynomialMean([1.0, 1.0]))
    domain: tuple = (-1.0, 1.0)
    bc: tuple = (0.0, 0.0)
    kappa: float = 1.0
    num_basis: int = 3
    nu: float = 1.5
    lengthscale: float = 0.5
    output_scale_sq: float = 1.0
    prior_mean: float = 0.0

    def __post_init__(self):
        a, b = self.domain
        self.nodes = np.linspace(a, b, self.num_basis + 2)
        self.trial = LagrangeBasis1D(self.nodes, boundary="include")
        self.tests = LagrangeBasis1D(self.nodes, boundary="clamped")
        self.projection = TrialProjection(self.trial)
        self.form = StiffnessForm(self.kappa)
        self.base_kernel = MaternKernel1D(self.nu, self.lengthscale, self.output_scale_sq)

    def blocks(self) -> list[InformationBlock]:
        """Two boundary rows followed by one weak-form row per test function."""
        a, b = self.domain
        bc_rows = [
            mwr_block(point_evaluation([x]), self.projection, None, [v], label="BC")
            for x, v in zip((a, b), self.bc)
        ]
        pde = mwr_block(self.tests, self.projection, self.form, self.rhs)
        rows = [InformationBlock(pde.functionals[i], pde.rhs[i : i + 1], None, None, "PDE") for i in range(len(pde))]
        return bc_rows + rows

    def policy(self) -> Policy:
        return Policy(self.blocks())

    def classical(self) -> mwr.MwrSystem:
        a, b = self.domain
        rhs = self.rhs if callable(self.rhs) else (lambda x: self.rhs)
        system = mwr.assemble(
            self.trial,
            mwr.GalerkinTests(self.tests, self.kappa),
            None,
            rhs,
            boundary=[(a, self.bc[0]), (b, self.bc[1])],
        )
        mwr.solve(system)
        return system

    def matern_prior(self) -> GaussianProcess:
        return GaussianProcess(ConstantMean(self.prior_mean), self.base_kernel)

    def recovery_prior(self) -> GaussianProcess:
        mean, kernel = build_recovery_prior(ConstantMean(self.prior_mean), self.base_kernel, self.projection)
        return GaussianProcess(mean, kernel)


def solve_poisson_fem(setup: PoissonFemSetup, probes: np.ndarray) -> dict:
    system = setup.classical()
    coord = setup.projection.coordinate_functionals()
    out = {"c_mwr": system.c, "probes": probes, "u_mwr": setup.trial.reconstruct(system.c, probes)}
    for name, prior in (("matern", setup.matern_prior()), ("recovery", setup.recovery_prior())):
        post = run(prior, setup.policy())
        coords = post.mean_functional(coord)
        out[name] = {
            "posterior": post,
            "mean": post.mean_at(probes),
            "std": post.std_at(probes),
            "coords": coords,
            "coord_error": float(np.max(np.abs(coords - system.c))),
            "coord_cov_norm": float(np.linalg.norm(post.cov_functional(coord))),
        }
    return out


# ---------------------------------------------------------------------------------------
# CPU die, one-dimensional slice
# ---------------------------------------------------------------------------------------

U, QV, QA = 0, 1, 2


@dataclass
class CpuSetup:
    """Stationary heat conduction across a 1D slice of a hexa-core CPU die.

    The heat-source estimate is synthetic: six Gaussian bumps of equal power
    (the cores crossed by the slice) on top of uniform cooling through the top
    surface.  The side fluxes balance the net source so that the estimate is
    stationary.  Lengths are in millimetres, temperatures in degrees Celsius.
    """

    width: float = 16.28
    height: float = 0.75
    kappa: float = 1.56
    core_power: float = 0.9
    core_spread: float = 0.6
    cooling: float = 0.2
    ambient: float = 60.0
    num_collocation: int = 30
    dts_sites: tuple = (2.5, 8.14, 13.75)
    dts_noise_std: float = 0.5
    nu: float = 2.5
    lengthscale: float = 3.0
    output_scale_sq: float = 9.0
    rhs_lengthscale: float = 1.5
    rhs_output_scale_sq: float = 0.01
    flux_output_scale_sq: float = 0.25
    quadrature_nodes: int = 64

    @property
    def core_centers(self) -> np.ndarray:
        return self.width * (np.arange(6) + 0.5) / 6

    def heat_source(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        bumps = np.exp(-0.5 * ((x[..., None] - self.core_centers) / self.core_spread) ** 2)
        return self.core_power * bumps.sum(axis=-1) - self.cooling

    def side_flux(self) -> float:
        x = np.linspace(0.0, self.width, 20001)
        return 0.5 * float(trapezoid(self.heat_source(x), x))

    def reference_temperature(self, x) -> np.ndarray:
        """Temperature solving the Neumann problem with the estimated sources,
        shifted so that its mean over the slice equals ``ambient``.
        """
        grid = np.linspace(0.0, self.width, 20001)
        q = self.heat_source(grid)
        slope = self.side_flux() / self.kappa - cumulative_trapezoid(q, grid, initial=0.0) / self.kappa
        u = cumulative_trapezoid(slope, grid, initial=0.0)
        u += self.ambient - trapezoid(u, grid) / self.width
        return np.interp(x, grid, u)

    def measurements(self, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        sites = np.asarray(self.dts_sites, dtype=float)
        return self.reference_temperature(sites) + self.dts_noise_std * rng.standard_normal(sites.size)

    @property
    def domain(self):
        return Interval(0.0, self.width)

    @property
    def operator(self) -> DiffOp:
        return DiffOp.laplacian(1, -self.kappa)

    def prior(self) -> GaussianProcess:
        qa = self.side_flux()
        mean = MultiOutputMean(
            ConstantMean(self.ambient),
            FunctionMean(self.heat_source),
            ConstantMean(qa),
        )
        kernel = MultiOutputKernel.independent(
            MaternKernel1D(self.nu, self.lengthscale, self.output_scale_sq),
            MaternKernel1D(self.nu, self.rhs_lengthscale, self.rhs_output_scale_sq),
            MaternKernel1D(self.nu, 4.0 * self.width, self.flux_output_scale_sq),
        )
        return GaussianProcess(mean, kernel)

    def collocation_points(self) -> np.ndarray:
        return np.linspace(0.0, self.width, self.num_collocation + 2)[1:-1]

    def blocks(self, seed: int = 0) -> dict[str, InformationBlock]:
        pde = pde_collocation_block(
            self.operator, None, self.collocation_points(), domain=self.domain, rhs_output=QV
        )
        nbc = boundary_block(
            BoundaryCondition(
                "neumann", (0.0, self.width), self.domain, kappa=self.kappa, output=U, flux_output=QA
            )
        )
        stat = stationarity_block(
            QV, QA, self.width, self.height, output_dim=3,
            rule=QuadratureRule.gauss_legendre(self.quadrature_nodes),
        )
        dts = measurement_block(self.dts_sites, self.measurements(seed), self.dts_noise_std, output=U)
        return {"PDE": pde, "NBC": nbc, "STAT": stat, "DTS": dts}

    def policy(self, seed: int = 0) -> Policy:
        return Policy(list(self.blocks(seed).values()))


CPU_STAGES = ("PDE", "NBC", "STAT", "DTS")


def solve_cpu(setup: CpuSetup, probes: np.ndarray, seed: int = 0) -> dict:
    blocks = setup.blocks(seed)
    prior = setup.prior()
    stages = {"prior": prior}
    snapshots: list[SolverState] = []
    post = run(prior, Policy([blocks[s] for s in CPU_STAGES]), callback=snapshots.append)
    for name, state in zip(CPU_STAGES, snapshots):
        stages[name] = state.posterior()
    stat = blocks["STAT"].functionals
    pred = post.predict_functionals(stat)
    return {
        "posterior": post,
        "stages": stages,
        "probes": probes,
        "mean": post.mean_at(probes, U),
        "std": post.std_at(probes, U),
        "stage_std": {k: gp.std_at(probes, U) for k, gp in stages.items()},
        "qv_mean": post.mean_at(probes, QV),
        "qv_std": post.std_at(probes, QV),
        "stat_mean": float(pred.mean[0]),
        "stat_var": float(pred.cov[0, 0]),
        "blocks": blocks,
    }
