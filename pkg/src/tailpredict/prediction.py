"""Best transformed-linear prediction from a TPDM.

Partitioning the (p+1)-dimensional TPDM around a target variable, the weight
vector solving Sigma_11 b = Sigma_12 minimizes the tail ratio of the
symmetrized prediction error, whose value is the Schur complement
K = Sigma_22 - Sigma_21 b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import SolveError, TailpredictError
from .simulate import ParetoSpec, default_pareto_spec
from .translinear import softplus, softplus_inv
from .tpdm import TPDM

_RESIDUAL_TOL = 1e-10
_COND_LIMIT = 1e12
_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)


@dataclass
class PartitionedTPDM:
    """TPDM split around a target index: predictors block, cross column, target scalar."""

    s11: np.ndarray
    s12: np.ndarray
    s22: float
    target: int

    @classmethod
    def from_tpdm(cls, tpdm, target: int) -> "PartitionedTPDM":
        mat = tpdm.matrix if isinstance(tpdm, TPDM) else np.asarray(tpdm, dtype=float)
        p = mat.shape[0]
        if not -p <= target < p:
            raise ValueError(f"target index {target} out of range for dimension {p}")
        target = target % p
        keep = [i for i in range(p) if i != target]
        s22 = float(mat[target, target])
        if s22 <= 0:
            raise ValueError("target diagonal entry must be positive")
        return cls(s11=mat[np.ix_(keep, keep)], s12=mat[keep, target], s22=s22, target=target)


@dataclass
class PredictionWeights:
    """Solution of the normal equations Sigma_11 b = Sigma_12."""

    values: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


def solve_weights(tpdm, target: int) -> PredictionWeights:
    """Prediction weights b = Sigma_11^-1 Sigma_12 via Cholesky with jitter escalation.

    Raises SolveError when Sigma_11 is singular or its condition estimate
    exceeds 1e12.  One step of iterative refinement pushes the normal-equation
    residual below 1e-10.
    """
    part = tpdm if isinstance(tpdm, PartitionedTPDM) else PartitionedTPDM.from_tpdm(tpdm, target)
    s11, s12 = part.s11, part.s12

    lam = np.linalg.eigvalsh(s11)
    if lam[0] <= 0 or lam[-1] / lam[0] > _COND_LIMIT:
        cond = np.inf if lam[0] <= 0 else lam[-1] / lam[0]
        raise SolveError(f"predictor block is singular or ill-conditioned "
                         f"(condition estimate {cond:.3e})")

    scale = float(np.mean(np.diag(s11)))
    factor = None
    for eps in _JITTERS:
        try:
            factor = cho_factor(s11 + eps * scale * np.eye(s11.shape[0]), lower=True)
            break
        except LinAlgError:
            continue
    if factor is None:
        raise SolveError("Cholesky factorization failed at every jitter level")

    b = cho_solve(factor, s12)
    for _ in range(3):
        r = s12 - s11 @ b
        if np.max(np.abs(r)) < _RESIDUAL_TOL:
            break
        b = b + cho_solve(factor, r)
    residual = float(np.max(np.abs(s12 - s11 @ b)))
    return PredictionWeights(values=b, residual=residual)


def predict(weights: PredictionWeights, x):
    """Transformed-linear point prediction t(b^T t^-1(x)); rows of a matrix batch."""
    b = weights.values if isinstance(weights, PredictionWeights) else np.asarray(weights, dtype=float)
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("predictor values must be finite and strictly positive")
    if arr.ndim == 1:
        if arr.shape[0] != b.shape[0]:
            raise ValueError(f"length mismatch: weights {b.shape[0]}, x {arr.shape[0]}")
        return float(softplus(b @ softplus_inv(arr)))
    if arr.shape[1] != b.shape[0]:
        raise ValueError(f"length mismatch: weights {b.shape[0]}, x rows {arr.shape[1]}")
    return softplus(softplus_inv(arr) @ b)


def prediction_error_k(part: PartitionedTPDM, weights: PredictionWeights) -> float:
    """Schur complement K = Sigma_22 - Sigma_21 b, clipped at zero."""
    k = part.s22 - float(part.s12 @ weights.values)
    if k < -1e-10:
        raise TailpredictError(f"negative prediction error K = {k:.3e}; TPDM is inconsistent")
    return max(k, 0.0)


def d_statistic(x_true, x_pred):
    """Symmetrized transformed difference max(a (-) b, b (-) a) = t(|t^-1(a) - t^-1(b)|)."""
    a = np.asarray(x_true, dtype=float)
    b = np.asarray(x_pred, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("inputs must be strictly positive")
    out = softplus(np.abs(softplus_inv(a) - softplus_inv(b)))
    if np.ndim(x_true) == 0 and np.ndim(x_pred) == 0:
        return float(out)
    return out


def d_statistic_bound(k: float, level: float = 0.95, spec: ParetoSpec | None = None) -> float:
    """Bound d* with P(D <= d*) ~ level from the tail ratio identity TR(D) = K.

    Solves K * P(Z > d*) = 1 - level under the configured input law, i.e.
    d* = sqrt(K / (1 - level)) - shift for the shifted-Pareto Z.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    if k <= 0:
        raise ValueError("K must be positive")
    if spec is None:
        spec = default_pareto_spec()
    return float(np.sqrt(k / (1.0 - level)) - spec.shift)


def prediction_ip_matrix(part: PartitionedTPDM, weights: PredictionWeights) -> np.ndarray:
    """2 x 2 inner-product matrix of (prediction, target): [[v, v], [v, s22]] with v = Sigma_21 b."""
    v = float(part.s12 @ weights.values)
    if v > part.s22 + 1e-10:
        raise TailpredictError(f"explained mass {v:.6g} exceeds target mass {part.s22:.6g}; "
                               "the TPDM is not positive semi-definite")
    v = min(v, part.s22)
    return np.array([[v, v], [v, part.s22]])
