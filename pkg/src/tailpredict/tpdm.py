"""Tail pairwise dependence matrix: generator algebra and pairwise estimation.

The TPDM collects the second angular moments sigma_ij = int w_i w_j dH(w)
of a regularly varying vector with tail index 2.  It is symmetric, has
nonnegative entries, and is positive semi-definite; for a construction
X = A (*) Z it equals A+ A+^T with A+ the zero-clipped generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import FitError, TailpredictError
from .translinear import zero_clip

_PSD_TOL = -1e-8


@dataclass
class TPDM:
    """Estimated or exact tail pairwise dependence matrix with fit metadata."""

    matrix: np.ndarray
    quantile: float | None = None
    n_exceed: np.ndarray | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("TPDM matrix must be square")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_csv(self, path) -> None:
        cols = [f"x{j + 1}" for j in range(self.dim)]
        pd.DataFrame(self.matrix, columns=cols).to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path) -> "TPDM":
        return cls(matrix=pd.read_csv(path).to_numpy(dtype=float))


def tpdm_of_generator(A) -> TPDM:
    """Exact TPDM of X = A (*) Z: clip(A) clip(A)^T."""
    A0 = np.atleast_2d(zero_clip(A))
    return TPDM(matrix=A0 @ A0.T)


def psd_check(M, tol: float = _PSD_TOL) -> tuple[float, bool]:
    """Smallest eigenvalue of a symmetric matrix and whether it clears tol."""
    mat = M.matrix if isinstance(M, TPDM) else np.asarray(M, dtype=float)
    lam = float(np.linalg.eigvalsh(mat)[0])
    return lam, lam >= tol


def psd_project(M, diagonal=None) -> np.ndarray:
    """Clip negative eigenvalues at zero and reconstitute; optionally reset the diagonal."""
    mat = np.asarray(M, dtype=float)
    lam, vec = np.linalg.eigh(mat)
    out = (vec * np.maximum(lam, 0.0)) @ vec.T
    out = 0.5 * (out + out.T)
    if diagonal is not None:
        np.fill_diagonal(out, diagonal)
    return np.maximum(out, 0.0)


def estimate_pairwise(data, quantile: float = 0.95, tail_ratios=None,
                      min_exceedances: int = 50) -> TPDM:
    """Pairwise TPDM estimate from data on a known-tail-ratio scale.

    For each pair (i, j), exceedances of the pair radius r_t = ||(x_ti, x_tj)||_2
    above its empirical `quantile` contribute the angular moment
    mean(w_ti w_tj), scaled by the pair's total angular mass, which equals
    tail_ratio_i + tail_ratio_j (2 on a marginally transformed scale).
    Diagonal entries are set to the known tail ratios.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise ValueError("data must be an n x p matrix")
    n, p = X.shape
    if n < 100:
        raise ValueError(f"need at least 100 observations, got {n}")
    if np.any(X < 0) or not np.all(np.isfinite(X)):
        raise ValueError("data must be finite and nonnegative")
    if not 0.0 < quantile < 1.0:
        raise ValueError("quantile must be in (0, 1)")

    if tail_ratios is None:
        ratios = np.ones(p)
    else:
        ratios = np.broadcast_to(np.asarray(tail_ratios, dtype=float), (p,)).copy()
    if np.any(ratios <= 0):
        raise ValueError("tail ratios must be positive")

    S = np.diag(ratios.astype(float))
    counts = np.zeros((p, p), dtype=int)
    for i in range(p):
        for j in range(i + 1, p):
            r = np.hypot(X[:, i], X[:, j])
            rstar = np.quantile(r, quantile)
            exc = r > rstar  # strict inequality breaks threshold ties
            n_exc = int(exc.sum())
            if n_exc < min_exceedances:
                raise FitError(f"pair ({i}, {j}): only {n_exc} radial exceedances "
                               f"above the {quantile} quantile (need >= {min_exceedances})")
            w = X[exc][:, (i, j)] / r[exc, None]
            S[i, j] = S[j, i] = (ratios[i] + ratios[j]) * float(np.mean(w[:, 0] * w[:, 1]))
            counts[i, j] = counts[j, i] = n_exc

    lam, ok = psd_check(S)
    if not ok:
        S = psd_project(S, diagonal=ratios)
        lam, ok = psd_check(S)
        if not ok:
            raise TailpredictError(f"TPDM not PSD even after projection (min eig {lam:.3e})")
    return TPDM(matrix=S, quantile=quantile, n_exceed=counts)
