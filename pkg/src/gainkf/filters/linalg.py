"""Conditioning helpers for covariance algebra."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..exceptions import FilterDivergedError, IllConditionedInnovationError

CHOL_JITTER = 1e-9
CHOL_ESCALATIONS = 3


def symmetrize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def chol_with_jitter(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding jitter*I only when the plain
    factorization fails; jitter starts at 1e-9 and escalates x10 up to 3 times."""
    A = symmetrize(A)
    jitters = [0.0] + [CHOL_JITTER * 10.0 ** k for k in range(CHOL_ESCALATIONS + 1)]
    for jitter in jitters:
        try:
            return np.linalg.cholesky(A + jitter * np.eye(A.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise FilterDivergedError(
        f"covariance not positive definite after jitter up to {jitters[-1]:g}")


def solve_spd(S: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve S X = B for symmetric positive-definite S.

    Cholesky first; a pivoted LU fallback covers borderline cases.
    Raises IllConditionedInnovationError when S is singular.
    """
    S = symmetrize(S)
    try:
        c, low = scipy.linalg.cho_factor(S, check_finite=False)
        return scipy.linalg.cho_solve((c, low), B, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        pass
    try:
        X = scipy.linalg.solve(S, B, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise IllConditionedInnovationError(f"innovation covariance is singular: {exc}")
    if not np.all(np.isfinite(X)):
        raise IllConditionedInnovationError("innovation solve produced non-finite values")
    return X
