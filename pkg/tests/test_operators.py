import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pdegp as pg
from pdegp.errors import ContractError, DomainError, UnsupportedOrderError
from pdegp.operators import MultiIndex


def poly(*coef):
    return pg.PolynomialMean(coef)


# ---------------------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------------------


def test_multi_index_order_and_partial_order():
    a, b = MultiIndex((1, 0, 2)), MultiIndex((1, 1, 2))
    assert a.order == 3
    assert a <= b and not b <= a
    assert a + b == (2, 1, 4)
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_box_membership_and_boundary():
    box = pg.Box((0.0, 0.0), (1.0, 2.0))
    X = np.array([[0.5, 1.0], [0.0, 1.0], [1.5, 0.0]])
    np.testing.assert_array_equal(box.contains(X), [True, True, False])
    np.testing.assert_array_equal(box.on_boundary(X), [False, True, False])
    with pytest.raises(DomainError):
        box.check_contains(X)


# ---------------------------------------------------------------------------------------
# apply_diffop_to_function
# ---------------------------------------------------------------------------------------


def test_negative_laplacian_of_square():
    D = pg.DiffOp.laplacian(1, -1.0)
    np.testing.assert_allclose(pg.apply_diffop_to_function(D, poly(0, 0, 1), np.linspace(-3, 3, 7)), -2.0)


def test_negative_laplacian_annihilates_affine():
    D = pg.DiffOp.laplacian(1, -1.0)
    np.testing.assert_allclose(pg.apply_diffop_to_function(D, poly(1.5, -0.7), np.linspace(-3, 3, 7)), 0.0)


def test_heat_operator_on_two_dimensional_function():
    # inputs (t, x); D = c_p rho d/dt - kappa d^2/dx^2 with c_p rho = 2, kappa = 3
    D = pg.DiffOp([(0, (1, 0), 2.0), (0, (0, 2), -3.0)], input_dim=2)
    f = pg.FunctionMean(
        lambda X: X[:, 0] + X[:, 1] ** 2,
        {(1, 0): lambda X: np.ones(len(X)), (0, 2): lambda X: np.full(len(X), 2.0)},
        input_dim=2,
    )
    np.testing.assert_allclose(D(f, np.array([[0.1, 0.2], [1.0, -3.0]])), -4.0)


def test_missing_derivative_is_reported():
    f = pg.FunctionMean(np.sin)
    with pytest.raises(UnsupportedOrderError):
        pg.apply_diffop_to_function(pg.DiffOp.laplacian(1), f, [0.3])


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    c1=st.lists(st.floats(-2, 2), min_size=1, max_size=5),
    c2=st.lists(st.floats(-2, 2), min_size=1, max_size=5),
)
def test_diffop_is_linear(a, b, c1, c2):
    D = pg.DiffOp([(0, 2, -1.3), (0, 1, 0.4), (0, 0, 2.0)])
    x = np.linspace(-1, 1, 5)
    n = max(len(c1), len(c2))
    p1, p2 = np.pad(c1, (0, n - len(c1))), np.pad(c2, (0, n - len(c2)))
    lhs = D(poly(*(a * p1 + b * p2)), x)
    rhs = a * D(poly(*p1), x) + b * D(poly(*p2), x)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))


# ---------------------------------------------------------------------------------------
# compose
# ---------------------------------------------------------------------------------------


def test_point_evaluation_after_negative_laplacian():
    l = pg.point_evaluation([0.5]).compose(pg.DiffOp.laplacian(1, -1.0))
    assert l.apply(poly(0, 0, 0, 1))[0] == pytest.approx(-3.0, abs=1e-14)


def test_integral_of_derivative():
    l = pg.compose(pg.integral_functional(None, (0.0, 1.0)), pg.DiffOp.derivative(1))
    assert l.apply(poly(0, 0, 1))[0] == pytest.approx(1.0, abs=1e-14)


def test_stiffness_of_hat_with_itself():
    h = 0.2
    basis = pg.LagrangeBasis1D.uniform(0, 1, 4)
    B = pg.StiffnessForm(1.0).functionals(basis)
    for i in range(basis.size):
        e = np.zeros(basis.size)
        e[i] = 1.0
        assert B.apply(pg.TrialSpanMean(basis, e))[i] == pytest.approx(2 / h, rel=1e-13)


def test_composition_associativity(rng):
    # (l o D) o P and l o (D o P) on random trial-span functions
    basis = pg.PolynomialBasis1D(5, (-1, 1), kind="chebyshev")
    P = pg.TrialProjection(basis)
    D = pg.DiffOp([(0, 2, -1.0), (0, 0, 0.5)])
    l = pg.point_evaluation(np.linspace(-0.9, 0.9, 7))
    left = l.compose(D).compose(P)
    right = l.compose(pg.OperatorChain(D, P))
    for _ in range(50):
        f = pg.TrialSpanMean(basis, rng.standard_normal(basis.size))
        np.testing.assert_allclose(left.apply(f), right.apply(f), atol=1e-12)
        np.testing.assert_allclose(left.apply(f), D(f, l.points), atol=1e-10)


def test_projection_then_pointwise_second_derivative_of_hats_is_rejected():
    P = pg.TrialProjection(pg.LagrangeBasis1D.uniform(0, 1, 3))
    with pytest.raises(UnsupportedOrderError):
        pg.point_evaluation([0.3]).compose(pg.DiffOp.laplacian(1)).compose(P)


def test_diffop_requires_single_output_functionals():
    L = pg.point_evaluation([0.3], output=1)
    with pytest.raises(ContractError):
        L.compose(pg.DiffOp.laplacian(1))


# ---------------------------------------------------------------------------------------
# l2_project / TrialProjection
# ---------------------------------------------------------------------------------------


def test_projection_fixes_basis_elements():
    basis = pg.LagrangeBasis1D.uniform(0, 1, 5)
    P = pg.TrialProjection(basis)
    for j in range(basis.size):
        np.testing.assert_allclose(pg.l2_project(P, lambda x: basis.evaluate(x)[:, j]), np.eye(5)[j], atol=1e-12)


def test_hat_gram_entries():
    h = 0.125
    P = pg.TrialProjection(pg.LagrangeBasis1D.uniform(0, 1, 7))
    np.testing.assert_allclose(np.diag(P.gram), 2 * h / 3, rtol=1e-13)
    np.testing.assert_allclose(np.diag(P.gram, 1), h / 6, rtol=1e-13)
    np.testing.assert_allclose(np.diag(P.gram, 2), 0.0, atol=1e-16)


def test_projection_of_identity_on_three_hats():
    P = pg.TrialProjection(pg.LagrangeBasis1D.uniform(0, 1, 3))
    h = 0.25
    gram = h / 6 * np.array([[4.0, 1, 0], [1, 4, 1], [0, 1, 4]])
    load = h * np.array([0.25, 0.5, 0.75])  # int phi_i x dx = h x_i for interior hats
    np.testing.assert_allclose(pg.l2_project(P, lambda x: x), np.linalg.solve(gram, load), rtol=1e-13)


def test_projection_is_idempotent(rng):
    basis = pg.LagrangeBasis1D.uniform(-1, 1, 9, boundary="include")
    P = pg.TrialProjection(basis)
    c = pg.l2_project(P, np.cos)
    np.testing.assert_allclose(pg.l2_project(P, P.reconstruct(c)), c, atol=1e-12)


def test_projection_coordinate_functionals_match_project():
    P = pg.TrialProjection(pg.LagrangeBasis1D.uniform(0, 2, 4))
    f = poly(1, -2, 0.5, 0.1)
    np.testing.assert_allclose(P.coordinate_functionals().apply(f), P.project(f), rtol=1e-14)


def test_singular_trial_gram_rejected():
    with pytest.raises(pg.IllConditionedBasisError):
        pg.TrialProjection(pg.PolynomialBasis1D(25, (0, 1)))


# ---------------------------------------------------------------------------------------
# apply_functionals_to_kernel
# ---------------------------------------------------------------------------------------


def test_two_point_exponential_gram():
    k = pg.MaternKernel1D(0.5, 1.0, 1.0)
    L = pg.point_evaluation([0.0, 1.0])
    e = np.exp(-1.0)
    np.testing.assert_allclose(pg.operators.apply_functionals_to_kernel(L, k, L), [[1, e], [e, 1]], rtol=1e-15)


@pytest.mark.parametrize("nu", [1.5, 2.5])
def test_derivative_against_value_at_zero_lag(nu):
    k = pg.MaternKernel1D(nu, 0.7, 3.0)
    G = k.apply(pg.point_evaluation([0.0], order=1), pg.point_evaluation([0.0]))
    assert G.shape == (1, 1) and G[0, 0] == 0.0


def _random_functional_set(rng, n):
    pts = rng.uniform(0, 1, (n, 1))
    L = pg.point_evaluation(pts, order=rng.integers(0, 3, (n, 1)))
    L = L + 0.5 * pg.integral_functional(lambda x: x, (0.0, 1.0)).__rmatmul__(np.ones((n, 1)))
    return rng.standard_normal((n, n)) @ L


def test_kernel_application_order_invariance(rng):
    k = pg.MaternKernel1D(2.5, 0.4, 1.2)
    L1, L2 = _random_functional_set(rng, 6), _random_functional_set(rng, 4)
    A = pg.operators.apply_functionals_to_kernel(L1, k, L2)
    B = pg.operators.apply_functionals_to_kernel(L2, k, L1)
    assert A.shape == (6, 4)
    assert np.abs(A - B.T).max() < 1e-12 * max(1.0, np.abs(A).max())


def test_integral_kernel_application_is_nested_quadrature():
    k = pg.MaternKernel1D(1.5, 0.5, 1.0)
    rule = pg.QuadratureRule.gauss_legendre(8)
    I = pg.integral_functional(None, (0.0, 1.0), rule)
    x, w = rule.on_interval(0.0, 1.0)
    assert k.apply(I, I)[0, 0] == pytest.approx(w @ k(x, x) @ w, rel=1e-14)


# ---------------------------------------------------------------------------------------
# integral_functional / quadrature
# ---------------------------------------------------------------------------------------


def test_integral_of_one():
    assert pg.integral_functional(None, (0.0, 1.0)).apply(poly(1.0))[0] == pytest.approx(1.0, rel=1e-15)


def test_indicator_weighted_integral():
    l = pg.integral_functional(None, (0.0, 0.5), domain=pg.Interval(0, 1))
    assert l.apply(poly(0, 1))[0] == pytest.approx(0.125, rel=1e-15)


def test_hat_weighted_integral_is_hat_area():
    basis = pg.LagrangeBasis1D.uniform(0, 1, 3)
    phi = lambda x: basis.evaluate(x)[:, 1]
    l = pg.integral_functional(phi, (0.0, 1.0), breakpoints=basis.breakpoints)
    assert l.apply(poly(1.0))[0] == pytest.approx(0.25, rel=1e-14)


def test_integral_region_outside_domain():
    with pytest.raises(DomainError):
        pg.integral_functional(None, (0.5, 1.5), domain=pg.Interval(0, 1))


@pytest.mark.parametrize("q", [1, 2, 5, 8, 16])
def test_gauss_rule_exactness(q):
    rule = pg.QuadratureRule.gauss_legendre(q)
    assert rule.exactness_degree == 2 * q - 1
    for deg in range(2 * q):
        exact = (1 - (-1) ** (deg + 1)) / (deg + 1)
        approx = rule.weights @ rule.nodes**deg
        assert abs(approx - exact) <= 1e-13 * max(1.0, abs(exact))


def test_two_dimensional_integral():
    box = pg.Box((0.0, 0.0), (1.0, 2.0))
    f = pg.FunctionMean(lambda X: X[:, 0] * X[:, 1] ** 2, input_dim=2)
    assert pg.integral_functional(None, box).apply(f)[0] == pytest.approx(0.5 * 8 / 3, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    c1=st.lists(st.floats(-2, 2), min_size=1, max_size=6),
    c2=st.lists(st.floats(-2, 2), min_size=1, max_size=6),
)
def test_functionals_are_linear(a, b, c1, c2):
    L = pg.FunctionalSet.stack(
        pg.point_evaluation([0.2, 0.7], order=[[1], [2]]),
        pg.integral_functional(np.cos, (0.0, 1.0)),
        pg.StiffnessForm(2.0).functionals(pg.LagrangeBasis1D.uniform(0, 1, 3)),
    )
    n = max(len(c1), len(c2))
    p1, p2 = np.pad(c1, (0, n - len(c1))), np.pad(c2, (0, n - len(c2)))
    lhs = L.apply(poly(*(a * p1 + b * p2)))
    rhs = a * L.apply(poly(*p1)) + b * L.apply(poly(*p2))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))


# ---------------------------------------------------------------------------------------
# FunctionalSet algebra
# ---------------------------------------------------------------------------------------


def test_functional_set_algebra():
    L = pg.point_evaluation([0.1, 0.5, 0.9])
    f = poly(1.0, 2.0)
    np.testing.assert_allclose((2.0 * L).apply(f), 2 * L.apply(f))
    np.testing.assert_allclose((L - L).apply(f), 0.0)
    np.testing.assert_allclose((np.array([[1.0, -1.0, 0.0]]) @ L).apply(f), [-0.8])
    np.testing.assert_allclose(L[1:].apply(f), L.apply(f)[1:])
    assert len(pg.FunctionalSet.stack(L, L[:1])) == 4


def test_functional_sets_of_different_lengths_cannot_be_added():
    with pytest.raises(ContractError):
        pg.point_evaluation([0.1]) + pg.point_evaluation([0.1, 0.2])
