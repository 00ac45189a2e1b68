"""Gaussian processes conditioned on affine observations of linear functionals.

A :class:`GaussianProcess` keeps its prior moments and the stacked evidence
``(L, y, mu, Sigma)`` gathered so far.  All Gram and cross-covariance terms are
evaluated on the *prior* kernel; posterior moments are expressed through the
representer weights ``w = G^+ (y - L[m] - mu)`` and a Cholesky factor of
``G = L k L' + Sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import linalg
from .errors import ContractError
from .kernels import Kernel, _as_order, _as_points
from .means import MeanFunction, ZeroMean
from .operators import FunctionalSet, point_evaluation

MAX_SAMPLE_POINTS = 2048


@dataclass(frozen=True)
class GaussianVector:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        if cov.size != mean.size**2:
            raise ContractError(f"covariance of shape {cov.shape} does not match mean of size {mean.size}")
        cov = cov.reshape(mean.size, mean.size)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def zeros(cls, n: int) -> "GaussianVector":
        return cls(np.zeros(n), np.zeros((n, n)))

    @classmethod
    def isotropic(cls, n: int, std: float) -> "GaussianVector":
        return cls(np.zeros(n), std**2 * np.eye(n))

    @property
    def size(self) -> int:
        return self.mean.size

    @property
    def var(self) -> np.ndarray:
        return np.diag(self.cov).copy()

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(self.var, 0.0, None))


@dataclass(frozen=True)
class Evidence:
    """Stacked observations together with the cached Gram factorization."""

    functionals: FunctionalSet | None = None
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    noise_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    noise_cov: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    gram: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    chol: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    jitter: np.ndarray = field(default_factory=lambda: np.zeros(0))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    blocks: tuple = ()

    @property
    def size(self) -> int:
        return self.y.size


def gram_extend(kernel: Kernel, evidence: Evidence, L: FunctionalSet, noise_cov) -> tuple:
    """Cross and corner blocks of the Gram matrix for a new observation block.

    Only the prior kernel is used.
    """
    corner = kernel.apply(L, L) + noise_cov
    corner = 0.5 * (corner + corner.T)
    if evidence.functionals is None:
        cross = np.zeros((0, len(L)))
    else:
        cross = kernel.apply(evidence.functionals, L)
    return cross, corner


def append_block(
    kernel: Kernel,
    evidence: Evidence,
    L: FunctionalSet,
    y,
    noise: GaussianVector,
    label: str | None = None,
) -> Evidence:
    """Grow the Gram matrix by one block; the factor and weights are left stale."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = len(L)
    if n == 0:
        raise ContractError("an observation block needs at least one functional")
    if y.size != n or noise.size != n:
        raise ContractError(
            f"dimension mismatch: {n} functionals, {y.size} values, noise of size {noise.size}"
        )
    cross, corner = gram_extend(kernel, evidence, L, noise.cov)
    m0 = evidence.size
    gram = np.zeros((m0 + n, m0 + n))
    gram[:m0, :m0] = evidence.gram
    gram[:m0, m0:] = cross
    gram[m0:, :m0] = cross.T
    gram[m0:, m0:] = corner
    return Evidence(
        functionals=L if evidence.functionals is None else FunctionalSet.stack(evidence.functionals, L),
        y=np.concatenate([evidence.y, y]),
        noise_mean=np.concatenate([evidence.noise_mean, noise.mean]),
        noise_cov=scipy.linalg.block_diag(evidence.noise_cov, noise.cov),
        gram=gram,
        chol=evidence.chol,
        jitter=evidence.jitter,
        weights=evidence.weights,
        blocks=evidence.blocks + ((label, n),),
    )


def factorize(
    mean: MeanFunction,
    evidence: Evidence,
    *,
    jitter: float = linalg.DEFAULT_JITTER,
    refine: int = 2,
) -> Evidence:
    """Extend the Cholesky factor over the new Gram rows and refresh the weights."""
    k = evidence.chol.shape[0]
    G = evidence.gram
    chol, tau = linalg.cholesky_extend(evidence.chol, G[:k, k:], G[k:, k:], jitter)
    residual = evidence.y - mean.apply(evidence.functionals) - evidence.noise_mean
    weights = linalg.refined_solve(chol, G, residual, refine)
    return replace(
        evidence, chol=chol, jitter=np.concatenate([evidence.jitter, tau]), weights=weights
    )


def extend_evidence(
    mean: MeanFunction,
    kernel: Kernel,
    evidence: Evidence,
    L: FunctionalSet,
    y,
    noise: GaussianVector,
    *,
    jitter: float = linalg.DEFAULT_JITTER,
    refine: int = 2,
    label: str | None = None,
) -> Evidence:
    grown = append_block(kernel, evidence, L, y, noise, label)
    return factorize(mean, grown, jitter=jitter, refine=refine)


class GaussianProcess:
    """Gaussian process ``u ~ GP(m, k)``, possibly conditioned on evidence.

    Conditioning never mutates; it returns a new process that shares the prior
    moments and extends the Cholesky factor of the evidence Gram matrix.
    """

    def __init__(
        self,
        mean: MeanFunction | None,
        kernel: Kernel,
        *,
        jitter: float = linalg.DEFAULT_JITTER,
        refine: int = 2,
        evidence: Evidence | None = None,
    ):
        self.kernel = kernel
        self.mean = ZeroMean(kernel.input_dim, kernel.output_dim) if mean is None else mean
        self.jitter = jitter
        self.refine = refine
        self.evidence = Evidence() if evidence is None else evidence

    def __repr__(self):
        return f"GaussianProcess(kernel={self.kernel!r}, observations={self.evidence.size})"

    @property
    def input_dim(self) -> int:
        return self.kernel.input_dim

    @property
    def output_dim(self) -> int:
        return self.kernel.output_dim

    @property
    def representer_weights(self) -> np.ndarray:
        return self.evidence.weights

    @property
    def prior(self) -> "GaussianProcess":
        return GaussianProcess(self.mean, self.kernel, jitter=self.jitter, refine=self.refine)

    def condition(self, L: FunctionalSet, y, noise: GaussianVector | None = None, *, label=None):
        """Condition on ``L[u] + eps = y`` with ``eps ~ N(mu, Sigma)`` independent of ``u``."""
        noise = GaussianVector.zeros(len(L)) if noise is None else noise
        evidence = extend_evidence(
            self.mean, self.kernel, self.evidence, L, y, noise,
            jitter=self.jitter, refine=self.refine, label=label,
        )
        return GaussianProcess(self.mean, self.kernel, jitter=self.jitter, refine=self.refine, evidence=evidence)

    def condition_block(self, block) -> "GaussianProcess":
        return self.condition(block.functionals, block.rhs, block.noise, label=block.label)

    # -- moments of arbitrary functionals -----------------------------------------------

    def mean_functional(self, L: FunctionalSet) -> np.ndarray:
        out = self.mean.apply(L)
        if self.evidence.size:
            out = out + self.kernel.apply(L, self.evidence.functionals) @ self.evidence.weights
        return out

    def cov_functional(self, L1: FunctionalSet, L2: FunctionalSet | None = None) -> np.ndarray:
        """Posterior cross-covariance ``L1 k_post L2'``."""
        same = L2 is None or L2 is L1
        L2 = L1 if L2 is None else L2
        K = self.kernel.apply(L1, L2)
        if not self.evidence.size:
            return K
        ev = self.evidence
        A1 = self.kernel.apply(ev.functionals, L1)
        A2 = A1 if same else self.kernel.apply(ev.functionals, L2)
        out = K - A1.T @ linalg.refined_solve(ev.chol, ev.gram, A2, self.refine)
        if same:
            out = 0.5 * (out + out.T)
        return out

    cross_covariance = cov_functional

    def predict_functionals(self, L: FunctionalSet) -> GaussianVector:
        return GaussianVector(self.mean_functional(L), self.cov_functional(L))

    def predict(self, X, output: int = 0, order=None) -> GaussianVector:
        L = point_evaluation(X, order, output=output, input_dim=self.input_dim)
        return self.predict_functionals(L)

    def mean_at(self, X, output: int = 0, order=None) -> np.ndarray:
        return self.mean_functional(point_evaluation(X, order, output=output, input_dim=self.input_dim))

    def std_at(self, X, output: int = 0) -> np.ndarray:
        """Marginal posterior standard deviations."""
        X = _as_points(X, self.input_dim)
        L = point_evaluation(X, output=output, input_dim=self.input_dim)
        prior_var = np.diag(self.kernel.apply(L, L))
        var = prior_var
        if self.evidence.size:
            ev = self.evidence
            A = self.kernel.apply(ev.functionals, L)
            var = prior_var - np.sum(A * linalg.refined_solve(ev.chol, ev.gram, A, self.refine), axis=0)
        return np.sqrt(np.clip(var, 0.0, None))

    def sample(self, X, count: int, seed: int = 0, output: int = 0) -> np.ndarray:
        """``count`` joint draws at ``X``; rows are samples."""
        X = _as_points(X, self.input_dim)
        if X.shape[0] > MAX_SAMPLE_POINTS:
            raise ContractError(f"at most {MAX_SAMPLE_POINTS} sample locations are supported")
        if count == 0:
            return np.zeros((0, X.shape[0]))
        pred = self.predict(X, output)
        chol, _ = linalg.cholesky(pred.cov, self.jitter)
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((X.shape[0], int(count)))
        return (pred.mean[:, None] + chol @ z).T

    def pushforward(self, op) -> "GaussianProcess":
        """The process ``op[u]`` with mean ``op[m]`` and kernel ``op k op'``."""
        return GaussianProcess(
            PushforwardMean(_MomentView(self), op),
            PushforwardKernel(_MomentView(self), op),
            jitter=self.jitter,
            refine=self.refine,
        )


class _MomentView:
    """Adapter exposing the (posterior) moments of a process to pushforwards."""

    def __init__(self, gp: GaussianProcess):
        self.gp = gp

    def mean(self, L):
        return self.gp.mean_functional(L)

    def cov(self, L1, L2):
        return self.gp.cov_functional(L1, L2)


class PushforwardMean(MeanFunction):
    def __init__(self, view: _MomentView, op):
        self.view = view
        self.op = op
        self.input_dim = view.gp.input_dim

    def apply(self, L):
        return self.view.mean(self.op.pullback(L))

    def derivative(self, order, X, output: int = 0):
        return self.apply(point_evaluation(X, order, output, self.input_dim))


class PushforwardKernel(Kernel):
    def __init__(self, view: _MomentView, op):
        self.view = view
        self.op = op
        self.input_dim = view.gp.input_dim
        base = view.gp.kernel
        order = getattr(op, "order", 0)
        self._beta = tuple(max(b - order, 0) for b in base.smoothness())

    def smoothness(self, output: int = 0):
        return self._beta

    def apply(self, L1, L2):
        P1 = self.op.pullback(L1)
        P2 = P1 if L2 is L1 else self.op.pullback(L2)
        return self.view.cov(P1, P2)

    def derivative(self, order1, order2, X1, X2, out1: int = 0, out2: int = 0):
        L1 = point_evaluation(X1, order1, out1, self.input_dim)
        L2 = point_evaluation(X2, order2, out2, self.input_dim)
        return self.apply(L1, L2)


def predict(gp: GaussianProcess, X, output: int = 0) -> GaussianVector:
    return gp.predict(X, output)


def condition(gp: GaussianProcess, L, y, noise: GaussianVector | None = None) -> GaussianProcess:
    return gp.condition(L, y, noise)


def pushforward(gp: GaussianProcess, op) -> GaussianProcess:
    return gp.pushforward(op)


def sample(gp: GaussianProcess, X, count: int, seed: int = 0) -> np.ndarray:
    return gp.sample(X, count, seed)
