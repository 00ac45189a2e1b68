import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import solve_banded

from pdegp import mwr
from pdegp.errors import ContractError, SingularSystemError

NEG_D2 = mwr.StrongOperator1D({2: -1.0})
ONE = lambda x: np.ones_like(x)  # noqa: E731
EXACT = lambda x: 0.5 * x * (1 - x)  # noqa: E731  solution of -u'' = 1, u(0) = u(1) = 0


def hats(n, a=0.0, b=1.0, boundary="clamped"):
    return mwr.LagrangeBasis1D.uniform(a, b, n, boundary)


# ---------------------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------------------


def test_kronecker_property():
    B = hats(3)
    np.testing.assert_array_equal(B.evaluate(B.nodes[1:-1]), np.eye(3))


def test_hat_vanishes_at_neighbours_and_outside():
    B = mwr.lagrange_basis([0.0, 0.2, 0.5, 0.6, 1.0])
    V = B.evaluate([0.0, 0.2, 0.5, 0.6, 1.0])
    np.testing.assert_array_equal(V[[0, 4]], 0.0)
    assert B.evaluate([0.55])[0, 0] == 0.0


def test_midpoint_value_is_half():
    B = mwr.lagrange_basis([0.0, 0.3, 0.4, 1.0])
    np.testing.assert_allclose(B.evaluate([0.35])[0], [0.5, 0.5], rtol=1e-15)


def test_reconstruction_at_node():
    B = hats(3)
    assert B.reconstruct([1.0, 2.0, 1.0], [0.5])[0] == 2.0


def test_span_is_piecewise_linear_interpolation(rng):
    nodes = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 6)]))
    B = mwr.lagrange_basis(nodes, "include")
    f = np.cos
    x = rng.uniform(0, 1, 50)
    np.testing.assert_allclose(B.reconstruct(f(nodes), x), np.interp(x, nodes, f(nodes)), atol=1e-14)


@pytest.mark.parametrize("nodes", [[0.0, 0.5, 0.4, 1.0], [0.0, 0.5, 0.5, 1.0], [0.0]])
def test_non_monotone_nodes_are_rejected(nodes):
    with pytest.raises(ContractError):
        mwr.lagrange_basis(nodes)


# ---------------------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------------------


def test_uniform_stiffness_entries():
    B = hats(3)  # h = 0.25
    sys = mwr.assemble(B, mwr.GalerkinTests(B), None, ONE)
    np.testing.assert_allclose(np.diag(sys.D_hat), 8.0, rtol=1e-14)
    np.testing.assert_allclose(np.diag(sys.D_hat, 1), -4.0, rtol=1e-14)
    np.testing.assert_allclose(np.diag(sys.D_hat, -1), -4.0, rtol=1e-14)
    assert sys.D_hat[0, 2] == 0.0
    np.testing.assert_allclose(sys.f_hat, 0.25, rtol=1e-14)


def test_stiffness_by_quadrature_matches_element_assembly(rng):
    nodes = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 5)]))
    B = mwr.lagrange_basis(nodes)
    closed = mwr.assemble(B, mwr.GalerkinTests(B), None, ONE).D_hat
    quad = mwr.assemble(B, mwr.GalerkinTests(B, kappa=lambda x: np.ones_like(x)), None, ONE).D_hat
    np.testing.assert_allclose(quad, closed, rtol=1e-12)


def test_collocation_row_for_monomials():
    trial = mwr.PolynomialBasis1D(2, (0.0, 1.0))
    sys = mwr.assemble(trial, mwr.CollocationTests(np.array([0.3])), NEG_D2, ONE)
    np.testing.assert_array_equal(sys.D_hat, [[0.0, 0.0, -2.0]])


def test_galerkin_tests_must_vanish_on_boundary():
    B = hats(3, boundary="include")
    with pytest.raises(ContractError):
        mwr.assemble(B, mwr.GalerkinTests(B), None, ONE)


def test_boundary_rows_come_first():
    trial = hats(3, boundary="include")
    sys = mwr.assemble(trial, mwr.GalerkinTests(hats(3)), None, ONE, boundary=[(0.0, 1.0), (1.0, 2.0)])
    np.testing.assert_array_equal(sys.D_hat[0], [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(sys.D_hat[1], [0, 0, 0, 0, 1])
    np.testing.assert_array_equal(sys.f_hat[:2], [1.0, 2.0])


def test_ritz_galerkin_is_symmetric(rng):
    nodes = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 10)]))
    B = mwr.lagrange_basis(nodes)
    D = mwr.assemble(B, mwr.GalerkinTests(B, kappa=lambda x: 1 + x**2), None, ONE).D_hat
    np.testing.assert_allclose(D, D.T, atol=1e-12)


# ---------------------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------------------


def test_fem_coordinates_for_unit_load():
    B = hats(3)
    sys = mwr.assemble(B, mwr.GalerkinTests(B), None, ONE)
    c = mwr.solve(sys)
    np.testing.assert_allclose(c, [0.09375, 0.125, 0.09375], rtol=1e-13)
    # independent tridiagonal oracle
    h = 0.25
    ab = np.array([[0, -1 / h, -1 / h], [2 / h] * 3, [-1 / h, -1 / h, 0]])
    np.testing.assert_allclose(c, solve_banded((1, 1), ab, np.full(3, h)), rtol=1e-13)
    assert sys.residual < 1e-9


def test_single_hat_is_a_scalar_solve():
    B = hats(1)
    sys = mwr.assemble(B, mwr.GalerkinTests(B), None, ONE)
    c = mwr.solve(sys)
    np.testing.assert_allclose(c, sys.f_hat / sys.D_hat[0, 0], rtol=1e-15)
    np.testing.assert_allclose(c, [0.125], rtol=1e-14)


def test_nodal_exactness_for_piecewise_constant_load():
    # load jumps at a grid node so every element sees a constant
    f = lambda x: np.where(x < 0.5, 1.0, 3.0)  # noqa: E731

    def F2(x):  # int_0^x (x - s) f(s) ds
        return np.where(x < 0.5, 0.5 * x**2, 0.5 * x - 0.125 + 1.5 * (x - 0.5) ** 2)

    def u(x):
        return x * F2(1.0) - F2(x)

    B = hats(7)
    c = mwr.solve(mwr.assemble(B, mwr.GalerkinTests(B), None, f))
    np.testing.assert_allclose(c, u(B.nodes[1:-1]), atol=1e-9)


def _l2_error(n):
    B = hats(n)
    f = lambda x: np.pi**2 * np.sin(np.pi * x)  # noqa: E731
    c = mwr.solve(mwr.assemble(B, mwr.GalerkinTests(B), None, f))
    err2 = 0.0
    for a, b in zip(B.nodes[:-1], B.nodes[1:]):
        e = lambda x: (B.reconstruct(c, np.atleast_1d(x))[0] - np.sin(np.pi * x)) ** 2  # noqa: E731
        err2 += integrate.quad(e, a, b, epsabs=1e-16, epsrel=1e-12)[0]
    return np.sqrt(err2)


def test_second_order_convergence():
    errs = [_l2_error(n) for n in (7, 15, 31)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((rates >= 1.8) & (rates <= 2.2)), rates


def test_singular_system_is_reported():
    # hats have no strong second derivative: every collocation row vanishes
    B = hats(3)
    sys = mwr.assemble(B, mwr.CollocationTests(B.nodes[1:-1] + 0.01), NEG_D2, ONE)
    with pytest.raises(SingularSystemError):
        mwr.solve(sys)


def test_non_square_system_is_reported():
    B = hats(3)
    sys = mwr.assemble(B, mwr.CollocationTests(np.array([0.3])), NEG_D2, ONE)
    with pytest.raises(SingularSystemError):
        mwr.solve(sys)


def test_residual_requires_solve():
    with pytest.raises(ContractError):
        mwr.MwrSystem(np.eye(2), np.ones(2)).residual


# ---------------------------------------------------------------------------------------
# method taxonomy on -u'' = 1, u(0) = u(1) = 0
# ---------------------------------------------------------------------------------------

BC = [(0.0, 0.0), (1.0, 0.0)]


def _check(trial, sys, tol=1e-10):
    c = mwr.solve(sys)
    assert sys.residual < 1e-9
    x = np.linspace(0, 1, 41)
    np.testing.assert_allclose(trial.reconstruct(c, x), EXACT(x), atol=tol)


def test_collocation_method():
    trial = mwr.PolynomialBasis1D(2, (0.0, 1.0))
    _check(trial, mwr.assemble(trial, mwr.CollocationTests(np.array([0.4])), NEG_D2, ONE, BC))


def test_subdomain_method():
    trial = mwr.PolynomialBasis1D(3, (0.0, 1.0))
    tests = mwr.SubdomainTests(((0.0, 0.5), (0.5, 1.0)))
    _check(trial, mwr.assemble(trial, tests, NEG_D2, ONE, BC))


def test_pseudospectral_method():
    trial = mwr.PolynomialBasis1D(6, (0.0, 1.0), kind="chebyshev")
    k = np.arange(1, 6)
    nodes = 0.5 - 0.5 * np.cos(np.pi * k / 6)  # interior Chebyshev extrema
    _check(trial, mwr.assemble(trial, mwr.CollocationTests(nodes), NEG_D2, ONE, BC))


def test_ritz_galerkin_method():
    B = hats(9)
    c = mwr.solve(mwr.assemble(B, mwr.GalerkinTests(B), None, ONE))
    np.testing.assert_allclose(c, EXACT(B.nodes[1:-1]), atol=1e-12)


def test_unsupported_tests_are_rejected():
    with pytest.raises(ContractError):
        mwr.assemble(hats(3), object(), NEG_D2, ONE)
    with pytest.raises(ContractError):
        mwr.assemble(hats(3), mwr.CollocationTests(np.array([0.5])), None, ONE)
