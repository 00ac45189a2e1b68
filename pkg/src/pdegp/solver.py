"""Iterative solver: policy-driven conditioning with incremental linear algebra.

Each iteration asks the policy for one or more information blocks, grows the
Gram matrix with cross terms against the *prior* kernel, extends the Cholesky
factor by a block step and refreshes the representer weights.  The posterior
after any iteration is therefore the prior conditioned once on everything
observed so far, never a chain of re-conditioned processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .errors import ContractError
from .gp import Evidence, GaussianProcess, append_block, factorize, gram_extend as _gram_blocks
from .information import InformationBlock
from .linalg import cholesky_extend
from .means import MeanFunction
from .kernels import Kernel

__all__ = [
    "Policy",
    "SolverState",
    "StoppingCriterion",
    "cholesky_extend",
    "gram_extend",
    "run",
    "step",
]


@dataclass(frozen=True)
class SolverState:
    mean: MeanFunction
    kernel: Kernel
    evidence: Evidence = field(default_factory=Evidence)
    iteration: int = 0
    jitter: float = linalg.DEFAULT_JITTER
    refine: int = 2

    @classmethod
    def from_prior(cls, prior: GaussianProcess) -> "SolverState":
        return cls(prior.mean, prior.kernel, prior.evidence, 0, prior.jitter, prior.refine)

    @property
    def gram(self) -> np.ndarray:
        return self.evidence.gram

    @property
    def chol(self) -> np.ndarray:
        return self.evidence.chol

    @property
    def weights(self) -> np.ndarray:
        return self.evidence.weights

    def posterior(self) -> GaussianProcess:
        return GaussianProcess(
            self.mean, self.kernel, jitter=self.jitter, refine=self.refine, evidence=self.evidence
        )


Action = Callable[[SolverState], "InformationBlock | Sequence[InformationBlock]"]


class Policy:
    """Fixed schedule of actions; action ``i`` is used in iteration ``i + 1``.

    An action is either an :class:`InformationBlock`, a list of blocks observed
    together in one iteration, or a callable receiving the current
    :class:`SolverState` and returning one of those.
    """

    def __init__(self, actions: Sequence):
        self.actions = list(actions)
        if not self.actions:
            raise ContractError("a policy needs at least one action")

    def __len__(self) -> int:
        return len(self.actions)

    def __call__(self, state: SolverState) -> list[InformationBlock]:
        action = self.actions[state.iteration]
        if callable(action) and not isinstance(action, InformationBlock):
            action = action(state)
        blocks = [action] if isinstance(action, InformationBlock) else list(action)
        if not blocks or any(len(b) == 0 for b in blocks):
            raise ContractError(f"action {state.iteration} produced no functionals")
        return blocks


@dataclass(frozen=True)
class StoppingCriterion:
    """Stop after ``max_iterations`` or when the schedule is exhausted."""

    max_iterations: int | None = None

    def __call__(self, state: SolverState, policy: Policy) -> bool:
        if state.iteration >= len(policy):
            return True
        return self.max_iterations is not None and state.iteration >= self.max_iterations


def gram_extend(state: SolverState, block: InformationBlock) -> SolverState:
    """Append a block's rows and columns to the Gram matrix (prior kernel only)."""
    ev = append_block(state.kernel, state.evidence, block.functionals, block.rhs, block.noise, block.label)
    return replace(state, evidence=ev)


def step(state: SolverState, blocks: Sequence[InformationBlock]) -> SolverState:
    for block in blocks:
        state = gram_extend(state, block)
    ev = factorize(state.mean, state.evidence, jitter=state.jitter, refine=state.refine)
    return replace(state, evidence=ev, iteration=state.iteration + 1)


def run(
    prior: GaussianProcess,
    policy: Policy,
    stopping: StoppingCriterion | None = None,
    *,
    callback: Callable[[SolverState], None] | None = None,
) -> GaussianProcess:
    """Condition ``prior`` on the blocks produced by ``policy`` until ``stopping``."""
    stopping = StoppingCriterion() if stopping is None else stopping
    state = SolverState.from_prior(prior)
    while not stopping(state, policy):
        state = step(state, policy(state))
        if callback is not None:
            callback(state)
    return state.posterior()


def gram_blocks(state: SolverState, block: InformationBlock):
    """``(cross, corner)`` blocks a new observation would add to the Gram matrix."""
    return _gram_blocks(state.kernel, state.evidence, block.functionals, block.noise_cov)
