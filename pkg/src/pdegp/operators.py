"""Linear functionals and operators acting on GP sample paths.

A :class:`FunctionalSet` is a block of ``n`` bounded linear functionals.  Each is
stored as a weighted sum over shared *atoms*, where an atom is the point
evaluation of a partial derivative of one output,

    L_i[u] = sum_q W[i, q] * d^{alpha_q} u_{o_q}(x_q).

Point evaluations, derivatives, quadrature integrals, weak-form tests and the
coordinate map of an L2 projection all reduce to this form, and composing with a
differential operator or a trial projection produces another set of the same
kind.  Kernels and mean functions only need to evaluate their derivatives at
atoms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractError, DomainError, IllConditionedBasisError, UnsupportedOrderError
from .kernels import _as_order, _as_points
from .means import MeanFunction, TrialSpanMean

MAX_BASIS_CONDITION = 1e12


class MultiIndex(tuple):
    """Tuple of non-negative derivative orders, one per input dimension."""

    def __new__(cls, orders):
        if np.isscalar(orders):
            orders = (orders,)
        orders = tuple(int(a) for a in orders)
        if any(a < 0 for a in orders):
            raise ValueError(f"multi-index entries must be non-negative, got {orders}")
        return super().__new__(cls, orders)

    @property
    def order(self) -> int:
        return sum(self)

    def __le__(self, other) -> bool:
        return all(a <= b for a, b in zip(self, other))

    def __add__(self, other) -> "MultiIndex":
        return MultiIndex(a + b for a, b in zip(self, other))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box domain; a 1D box is an interval."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("box bounds must satisfy lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def _scale(self) -> float:
        return max(b - a for a, b in zip(self.lower, self.upper))

    def contains(self, X, tol: float = 1e-12) -> np.ndarray:
        X = _as_points(X, self.dim)
        t = tol * self._scale()
        return np.all((X >= np.array(self.lower) - t) & (X <= np.array(self.upper) + t), axis=1)

    def on_boundary(self, X, tol: float = 1e-12) -> np.ndarray:
        X = _as_points(X, self.dim)
        t = tol * self._scale()
        near = (np.abs(X - np.array(self.lower)) <= t) | (np.abs(X - np.array(self.upper)) <= t)
        return self.contains(X, tol) & np.any(near, axis=1)

    def check_contains(self, X, what: str = "point") -> None:
        inside = self.contains(X)
        if not np.all(inside):
            bad = _as_points(X, self.dim)[~inside][0]
            raise DomainError(f"{what} {bad.tolist()} lies outside the domain {self}")


def Interval(a: float, b: float) -> Box:
    return Box((a,), (b,))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference interval ``[-1, 1]``."""

    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    @classmethod
    def gauss_legendre(cls, num_nodes: int) -> "QuadratureRule":
        x, w = np.polynomial.legendre.leggauss(int(num_nodes))
        return cls(x, w, 2 * int(num_nodes) - 1)

    @property
    def size(self) -> int:
        return self.nodes.size

    def on_interval(self, a: float, b: float, breakpoints=None) -> tuple[np.ndarray, np.ndarray]:
        """Composite nodes and weights on ``[a, b]``, split at ``breakpoints``."""
        cuts = [a, b]
        if breakpoints is not None:
            bp = np.asarray(breakpoints, dtype=float)
            cuts += list(bp[(bp > a) & (bp < b)])
        cuts = np.unique(cuts)
        lo, hi = cuts[:-1, None], cuts[1:, None]
        x = 0.5 * (hi - lo) * self.nodes[None, :] + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * self.weights[None, :]
        return x.reshape(-1), w.reshape(-1)

    def on_box(self, box: Box) -> tuple[np.ndarray, np.ndarray]:
        grids = [self.on_interval(a, b) for a, b in zip(box.lower, box.upper)]
        X = np.stack(np.meshgrid(*[g[0] for g in grids], indexing="ij"), axis=-1)
        W = np.ones(X.shape[:-1])
        for i, g in enumerate(grids):
            shape = [1] * len(grids)
            shape[i] = -1
            W = W * g[1].reshape(shape)
        return X.reshape(-1, box.dim), W.reshape(-1)


DEFAULT_RULE = QuadratureRule.gauss_legendre(5)


class FunctionalSet:
    """Ordered block of linear functionals stored as weighted derivative atoms.

    Parameters
    ----------
    points : (Q, d) array
        Atom locations.
    orders : (Q, d) int array
        Derivative multi-index of each atom.
    outputs : (Q,) int array
        Output component each atom reads.
    weights : (n, Q) array
        Row ``i`` holds the coefficients of functional ``i``.
    """

    # let ``ndarray @ FunctionalSet`` reach __rmatmul__
    __array_ufunc__ = None

    def __init__(self, points, orders, outputs, weights):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        self.points = points
        self.orders = np.asarray(orders, dtype=int).reshape(points.shape)
        self.outputs = np.asarray(outputs, dtype=int).reshape(points.shape[0])
        self.weights = np.atleast_2d(np.asarray(weights, dtype=float))
        if self.weights.shape[1] != points.shape[0]:
            if points.shape[0] == 0 and self.weights.size == 0:
                self.weights = self.weights.reshape(-1, 0)
            else:
                raise ContractError(
                    f"weights have {self.weights.shape[1]} columns for {points.shape[0]} atoms"
                )

    @property
    def input_dim(self) -> int:
        return self.points.shape[1]

    @property
    def num_atoms(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __repr__(self):
        return f"FunctionalSet(n={len(self)}, atoms={self.num_atoms}, dim={self.input_dim})"

    @cached_property
    def _groups(self) -> dict:
        groups: dict = {}
        keys = np.concatenate([self.orders, self.outputs[:, None]], axis=1)
        if keys.shape[0] == 0:
            return groups
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        for g, key in enumerate(uniq):
            groups[(tuple(int(a) for a in key[:-1]), int(key[-1]))] = np.nonzero(inv == g)[0]
        return groups

    def atom_groups(self) -> dict:
        """Atom indices grouped by ``(order, output)``."""
        return self._groups

    def max_order(self, output: int = 0) -> tuple[int, ...]:
        mask = self.outputs == output
        if not np.any(mask):
            return (0,) * self.input_dim
        return tuple(int(v) for v in self.orders[mask].max(axis=0))

    def apply(self, f) -> np.ndarray:
        """Evaluate the functionals on a :class:`MeanFunction`."""
        return f.apply(self)

    def __call__(self, f) -> np.ndarray:
        return self.apply(f)

    def compress(self) -> "FunctionalSet":
        """Merge duplicate atoms and drop atoms with all-zero weights."""
        if self.num_atoms == 0:
            return self
        keys = np.concatenate([self.points, self.orders, self.outputs[:, None]], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        W = np.zeros((len(self), uniq.shape[0]))
        np.add.at(W.T, inv, self.weights.T)
        keep = np.any(W != 0.0, axis=0)
        d = self.input_dim
        return FunctionalSet(uniq[keep, :d], uniq[keep, d : 2 * d], uniq[keep, 2 * d], W[:, keep])

    def _concat_atoms(self, other: "FunctionalSet", Wa, Wb) -> "FunctionalSet":
        return FunctionalSet(
            np.concatenate([self.points, other.points]),
            np.concatenate([self.orders, other.orders]),
            np.concatenate([self.outputs, other.outputs]),
            np.concatenate([Wa, Wb], axis=1),
        )

    def __add__(self, other: "FunctionalSet") -> "FunctionalSet":
        if len(self) != len(other):
            raise ContractError("functional sets must have equal length to be added")
        return self._concat_atoms(other, self.weights, other.weights).compress()

    def __neg__(self) -> "FunctionalSet":
        return FunctionalSet(self.points, self.orders, self.outputs, -self.weights)

    def __sub__(self, other: "FunctionalSet") -> "FunctionalSet":
        return self + (-other)

    def __mul__(self, scalar: float) -> "FunctionalSet":
        return FunctionalSet(self.points, self.orders, self.outputs, scalar * self.weights)

    __rmul__ = __mul__

    def __rmatmul__(self, A) -> "FunctionalSet":
        """``A @ L``: new functionals as linear combinations of the rows of ``L``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return FunctionalSet(self.points, self.orders, self.outputs, A @ self.weights)

    def __getitem__(self, rows) -> "FunctionalSet":
        W = self.weights[rows]
        return FunctionalSet(self.points, self.orders, self.outputs, np.atleast_2d(W)).compress()

    def compose(self, op) -> "FunctionalSet":
        return compose(self, op)

    @staticmethod
    def stack(*sets: "FunctionalSet") -> "FunctionalSet":
        """Concatenate blocks of functionals (rows) into one set."""
        sets = [s for s in sets if s is not None]
        if not sets:
            raise ContractError("nothing to stack")
        dims = {s.input_dim for s in sets}
        if len(dims) != 1:
            raise ContractError("cannot stack functionals on different input dimensions")
        n = sum(len(s) for s in sets)
        Q = sum(s.num_atoms for s in sets)
        W = np.zeros((n, Q))
        r = c = 0
        for s in sets:
            W[r : r + len(s), c : c + s.num_atoms] = s.weights
            r += len(s)
            c += s.num_atoms
        return FunctionalSet(
            np.concatenate([s.points for s in sets]),
            np.concatenate([s.orders for s in sets]),
            np.concatenate([s.outputs for s in sets]),
            W,
        ).compress()


def point_evaluation(X, order=None, output: int = 0, input_dim: int | None = None) -> FunctionalSet:
    """``delta_x o d^order`` for each row of ``X``.

    ``order`` is one multi-index shared by all points or an ``(n, d)`` array
    with one multi-index per point.
    """
    if input_dim is None:
        arr = np.asarray(X, dtype=float)
        input_dim = 1 if arr.ndim <= 1 else arr.shape[1]
    X = _as_points(X, input_dim)
    n = X.shape[0]
    if order is not None and np.ndim(order) == 2:
        orders = np.asarray(order, dtype=int).reshape(n, input_dim)
        if np.any(orders < 0):
            raise ValueError("derivative orders must be non-negative")
    else:
        orders = np.tile(_as_order(order, input_dim), (n, 1))
    return FunctionalSet(X, orders, np.full(n, output), np.eye(n))


def integral_functional(
    weight=None,
    region=None,
    rule: QuadratureRule | None = None,
    *,
    output: int = 0,
    order=None,
    breakpoints=None,
    domain: Box | None = None,
) -> FunctionalSet:
    """Single functional ``f -> int_region weight(x) d^order f(x) dx`` by quadrature.

    ``region`` is an interval ``(a, b)`` or a :class:`Box`; the rule is applied
    on every piece between ``breakpoints`` (1D only).
    """
    if region is None:
        raise ContractError("an integration region is required")
    box = region if isinstance(region, Box) else Interval(*region)
    if domain is not None:
        domain.check_contains(np.array([box.lower, box.upper]), "integration region corner")
    rule = DEFAULT_RULE if rule is None else rule
    if box.dim == 1:
        x, w = rule.on_interval(box.lower[0], box.upper[0], breakpoints)
        X = x.reshape(-1, 1)
        arg = x
    else:
        X, w = rule.on_box(box)
        arg = X
    if weight is not None:
        w = w * np.broadcast_to(np.asarray(weight(arg), dtype=float), w.shape)
    alpha = _as_order(order, box.dim)
    return FunctionalSet(X, np.tile(alpha, (X.shape[0], 1)), np.full(X.shape[0], output), w[None, :])


class DiffOp:
    """Linear differential operator ``D[u] = sum A * d^alpha u_i`` with constant
    coefficients and a scalar result.

    ``terms`` is a list of ``(output, alpha, coefficient)``.
    """

    def __init__(self, terms, input_dim: int = 1):
        self.input_dim = input_dim
        self.terms = [(int(i), MultiIndex(_as_order(a, input_dim)), float(c)) for i, a, c in terms]
        if not self.terms:
            raise ContractError("a differential operator needs at least one term")

    def __repr__(self):
        return f"DiffOp({[(i, tuple(a), c) for i, a, c in self.terms]})"

    @classmethod
    def identity(cls, input_dim: int = 1, output: int = 0):
        return cls([(output, (0,) * input_dim, 1.0)], input_dim)

    @classmethod
    def derivative(cls, alpha, input_dim: int = 1, coefficient: float = 1.0):
        return cls([(0, alpha, coefficient)], input_dim)

    @classmethod
    def laplacian(cls, input_dim: int = 1, coefficient: float = 1.0, dims=None):
        """``coefficient * sum_i d^2/dx_i^2`` over ``dims`` (default: all)."""
        dims = range(input_dim) if dims is None else dims
        terms = []
        for i in dims:
            alpha = [0] * input_dim
            alpha[i] = 2
            terms.append((0, alpha, coefficient))
        return cls(terms, input_dim)

    @property
    def order(self) -> int:
        return max(a.order for _, a, _ in self.terms)

    def __mul__(self, scalar: float) -> "DiffOp":
        return DiffOp([(i, a, scalar * c) for i, a, c in self.terms], self.input_dim)

    __rmul__ = __mul__

    def __add__(self, other: "DiffOp") -> "DiffOp":
        return DiffOp(self.terms + other.terms, self.input_dim)

    def __neg__(self) -> "DiffOp":
        return self * -1.0

    def __call__(self, f: MeanFunction, X) -> np.ndarray:
        return apply_diffop_to_function(self, f, X)

    def image(self, f: MeanFunction) -> MeanFunction:
        return _DiffOpImage(self, f)

    def pullback(self, L: FunctionalSet) -> FunctionalSet:
        if np.any(L.outputs != 0):
            raise ContractError("a differential operator has a single output (index 0)")
        pts, ords, outs, Ws = [], [], [], []
        for i, alpha, coeff in self.terms:
            pts.append(L.points)
            ords.append(L.orders + np.array(alpha))
            outs.append(np.full(L.num_atoms, i))
            Ws.append(coeff * L.weights)
        return FunctionalSet(
            np.concatenate(pts), np.concatenate(ords), np.concatenate(outs), np.concatenate(Ws, axis=1)
        ).compress()


class _DiffOpImage(MeanFunction):
    def __init__(self, op: DiffOp, f: MeanFunction):
        self.op = op
        self.f = f
        self.input_dim = op.input_dim

    def derivative(self, order, X, output: int = 0):
        beta = np.array(_as_order(order, self.input_dim))
        X = _as_points(X, self.input_dim)
        out = np.zeros(X.shape[0])
        for i, alpha, coeff in self.op.terms:
            out += coeff * self.f.derivative(tuple(np.array(alpha) + beta), X, i)
        return out


def apply_diffop_to_function(D: DiffOp, f: MeanFunction, X) -> np.ndarray:
    """``D[f](X)`` using the exact derivatives exposed by ``f``."""
    X = _as_points(X, D.input_dim)
    out = np.zeros(X.shape[0])
    for i, alpha, coeff in D.terms:
        out += coeff * f.derivative(tuple(alpha), X, i)
    return out


class TrialProjection:
    """L2 projection onto the span of a 1D trial basis.

    The coordinate map is ``c = P^-1 (int phi_i u)_i`` with trial Gram matrix
    ``P_ij = int phi_i phi_j``; both integrals use the same composite Gauss rule,
    split at the basis breakpoints, so the projection is idempotent on the span
    to rounding error.  ``output`` selects the component of a multi-output path
    the projection acts on; other components pass through unchanged.
    """

    def __init__(self, basis, rule: QuadratureRule | None = None, output: int = 0):
        self.basis = basis
        if rule is None:
            # exact for products of two trial functions on every piece
            degree = getattr(basis, "degree", 1)
            rule = DEFAULT_RULE if degree <= 4 else QuadratureRule.gauss_legendre(degree + 1)
        self.rule = rule
        self.output = output
        a, b = basis.domain
        x, w = self.rule.on_interval(a, b, basis.breakpoints)
        Phi = basis.evaluate(x)
        gram = Phi.T @ (w[:, None] * Phi)
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > MAX_BASIS_CONDITION:
            raise IllConditionedBasisError(f"trial Gram matrix has condition number {cond:.3e}")
        self.gram = gram
        self._x = x
        self._coord_weights = np.linalg.solve(gram, Phi.T * w[None, :])

    @property
    def size(self) -> int:
        return self.basis.size

    def coordinate_functionals(self) -> FunctionalSet:
        """The coordinate map ``u -> c`` as ``m`` functionals."""
        Q = self._x.size
        return FunctionalSet(self._x, np.zeros((Q, 1), int), np.full(Q, self.output), self._coord_weights)

    def project(self, f) -> np.ndarray:
        """Trial coordinates of the projection of ``f`` (MeanFunction or callable)."""
        if isinstance(f, MeanFunction):
            vals = f.derivative(None, self._x, self.output)
        else:
            vals = np.asarray(f(self._x), dtype=float)
        return self._coord_weights @ vals

    def reconstruct(self, coords) -> TrialSpanMean:
        return TrialSpanMean(self.basis, coords)

    def image(self, f) -> TrialSpanMean:
        return self.reconstruct(self.project(f))

    def basis_values(self, L: FunctionalSet) -> np.ndarray:
        """``L iota``: the ``(n, m)`` matrix of ``L`` applied to each trial function."""
        if L.input_dim != 1:
            raise ContractError("trial projections are one-dimensional")
        B = np.zeros((L.num_atoms, self.size))
        for (order, output), idx in L.atom_groups().items():
            if output != self.output:
                continue
            if order[0] > self.basis.smoothness:
                raise UnsupportedOrderError(
                    f"trial basis is only {self.basis.smoothness} times differentiable"
                )
            B[idx] = self.basis.evaluate(L.points[idx, 0], order[0])
        return L.weights @ B

    def pullback(self, L: FunctionalSet) -> FunctionalSet:
        mine = L.outputs == self.output
        coord = self.coordinate_functionals()
        composed = self.basis_values(L) @ coord
        if not np.any(~mine):
            return composed.compress()
        rest = FunctionalSet(L.points[~mine], L.orders[~mine], L.outputs[~mine], L.weights[:, ~mine])
        return (composed + rest).compress()


def l2_project(p: TrialProjection, f) -> np.ndarray:
    return p.project(f)


class OperatorChain:
    """Composition ``ops[0] o ops[1] o ...`` of differential operators and projections."""

    def __init__(self, *ops):
        self.ops = ops

    def pullback(self, L: FunctionalSet) -> FunctionalSet:
        for op in self.ops:
            L = op.pullback(L)
        return L

    def image(self, f):
        for op in reversed(self.ops):
            f = op.image(f)
        return f


def compose(l: FunctionalSet, op) -> FunctionalSet:
    """``l o op`` for a differential operator, trial projection or chain."""
    return op.pullback(l)


class StiffnessForm:
    """1D weak form ``B(u, psi) = int kappa u' psi' + int c u psi``.

    ``kappa`` and ``reaction`` may be constants or callables of ``x``.
    """

    def __init__(self, kappa=1.0, reaction=0.0, rule: QuadratureRule | None = None):
        self.kappa = kappa
        self.reaction = reaction
        self.rule = DEFAULT_RULE if rule is None else rule

    @staticmethod
    def _coef(c, x):
        return np.broadcast_to(np.asarray(c(x) if callable(c) else c, dtype=float), x.shape)

    def _nodes(self, tests, domain: Box | None):
        a, b = tests.domain
        if domain is not None:
            domain.check_contains(np.array([a, b]), "test support endpoint")
            ends = np.array([domain.lower[0], domain.upper[0]])
        else:
            ends = np.array([a, b])
        at_ends = tests.evaluate(ends)
        if np.any(np.abs(at_ends) > 1e-14):
            raise DomainError("weak-form test functions must vanish on the boundary")
        return self.rule.on_interval(a, b, tests.breakpoints)

    def functionals(self, tests, domain: Box | None = None, output: int = 0) -> FunctionalSet:
        """``u -> B(u, psi_i)`` for every test function of a basis."""
        x, w = self._nodes(tests, domain)
        Q = x.size
        W = (w * self._coef(self.kappa, x))[None, :] * tests.evaluate(x, 1).T
        L = FunctionalSet(x, np.ones((Q, 1), int), np.full(Q, output), W)
        if np.any(self._coef(self.reaction, x) != 0.0):
            Wr = (w * self._coef(self.reaction, x))[None, :] * tests.evaluate(x, 0).T
            L = L + FunctionalSet(x, np.zeros((Q, 1), int), np.full(Q, output), Wr)
        return L.compress()

    def load(self, f, tests, domain: Box | None = None) -> np.ndarray:
        """``<f, psi_i>`` for every test function."""
        x, w = self._nodes(tests, domain)
        vals = f.derivative(None, x) if isinstance(f, MeanFunction) else np.asarray(f(x), dtype=float)
        vals = np.broadcast_to(vals, x.shape)
        return tests.evaluate(x).T @ (w * vals)

    def load_functionals(self, tests, domain: Box | None = None, output: int = 0) -> FunctionalSet:
        """``f -> <f, psi_i>`` as functionals on an uncertain right-hand side."""
        x, w = self._nodes(tests, domain)
        Q = x.size
        return FunctionalSet(
            x, np.zeros((Q, 1), int), np.full(Q, output), w[None, :] * tests.evaluate(x).T
        ).compress()


def apply_functionals_to_kernel(L1: FunctionalSet, k, L2: FunctionalSet) -> np.ndarray:
    return k.apply(L1, L2)
