"""Dense Cholesky helpers with jitter escalation and block extension."""

from __future__ import annotations

import numpy as np
import scipy.linalg

DEFAULT_JITTER = 1e-10
MAX_JITTER = 1e-6


class NumericalError(RuntimeError):
    """Raised when a matrix cannot be factorized even after jitter escalation."""


def _jitter_diagonal(diag: np.ndarray, rel: float) -> np.ndarray:
    # Relative to each diagonal entry so the regularization does not depend on how
    # observations are grouped into blocks.  Zero rows fall back to the mean.
    diag = np.abs(np.asarray(diag, dtype=float))
    floor = diag.mean() if diag.size else 0.0
    if floor == 0.0:
        floor = 1.0
    return rel * np.where(diag > 1e-14 * floor, diag, floor)


def jitter_schedule(start: float = DEFAULT_JITTER, stop: float = MAX_JITTER):
    rel = start
    while rel <= stop * (1 + 1e-12):
        yield rel
        rel *= 10.0


def cholesky(
    A: np.ndarray, jitter: float = DEFAULT_JITTER, max_jitter: float = MAX_JITTER
) -> tuple[np.ndarray, np.ndarray]:
    """Lower Cholesky factor of ``A + diag(tau)`` with escalating relative jitter.

    Returns
    -------
    L : (n, n) array
        Lower-triangular factor.
    tau : (n,) array
        The jitter that was actually added to the diagonal.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0)), np.zeros(0)
    if jitter == 0.0:
        try:
            return np.linalg.cholesky(A), np.zeros(n)
        except np.linalg.LinAlgError:
            jitter = DEFAULT_JITTER
    for rel in jitter_schedule(jitter, max(max_jitter, jitter)):
        tau = _jitter_diagonal(np.diag(A), rel)
        try:
            return np.linalg.cholesky(A + np.diag(tau)), tau
        except np.linalg.LinAlgError:
            continue
    w = np.linalg.eigvalsh(0.5 * (A + A.T))
    raise NumericalError(
        f"Cholesky failed for {n}x{n} matrix after jitter {max_jitter:g}; "
        f"eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}]"
    )


def cholesky_extend(
    L: np.ndarray,
    cross: np.ndarray,
    corner: np.ndarray,
    jitter: float = DEFAULT_JITTER,
    max_jitter: float = MAX_JITTER,
) -> tuple[np.ndarray, np.ndarray]:
    """Extend a lower Cholesky factor by one block row/column.

    Given ``L L^T = G_old + jitter`` and the new blocks of

        G_new = [[G_old, cross], [cross^T, corner]],

    returns the factor of ``G_new`` (plus jitter on the new diagonal only) and the
    jitter added to the new rows.  The leading block of the result is ``L``
    unchanged.
    """
    L = np.asarray(L, dtype=float)
    corner = np.asarray(corner, dtype=float)
    n_old, n_new = L.shape[0], corner.shape[0]
    cross = np.asarray(cross, dtype=float).reshape(n_old, n_new)
    if n_old == 0:
        return cholesky(corner, jitter, max_jitter)
    B = scipy.linalg.solve_triangular(L, cross, lower=True).T
    schur = corner - B @ B.T
    schur = 0.5 * (schur + schur.T)
    # jitter is sized by the corner's own diagonal, matching a batch factorization
    if jitter == 0.0:
        try:
            C = np.linalg.cholesky(schur)
            tau = np.zeros(n_new)
        except np.linalg.LinAlgError:
            jitter = DEFAULT_JITTER
    if jitter != 0.0:
        for rel in jitter_schedule(jitter, max(max_jitter, jitter)):
            tau = _jitter_diagonal(np.diag(corner), rel)
            try:
                C = np.linalg.cholesky(schur + np.diag(tau))
                break
            except np.linalg.LinAlgError:
                continue
        else:
            w = np.linalg.eigvalsh(schur)
            raise NumericalError(
                f"Schur complement of the {n_new}x{n_new} extension is not PSD "
                f"after jitter {max_jitter:g}; min eigenvalue {w[0]:.3e}"
            )
    out = np.zeros((n_old + n_new, n_old + n_new))
    out[:n_old, :n_old] = L
    out[n_old:, :n_old] = B
    out[n_old:, n_old:] = C
    return out, tau


def cho_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    if L.shape[0] == 0:
        return np.zeros_like(np.asarray(b, dtype=float))
    return scipy.linalg.cho_solve((L, True), b)


def refined_solve(
    L: np.ndarray, A: np.ndarray, b: np.ndarray, steps: int = 2
) -> np.ndarray:
    """Solve ``A x = b`` using the jittered factor ``L`` plus iterative refinement.

    The refinement pulls the solution from ``(A + jitter)^-1 b`` towards ``A^+ b``
    on the well-conditioned part of the spectrum, and never amplifies components
    in the null space of ``A``.
    """
    x = cho_solve(L, b)
    for _ in range(steps):
        x = x + cho_solve(L, b - A @ x)
    return x
