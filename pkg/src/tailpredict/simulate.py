"""Simulation of regularly varying inputs and transformed-linear constructions.

Z is a vector of independent shifted-Pareto variables with tail index 2:
P(Z > z) = (z + delta)^-2 on (1 - delta, inf), with delta chosen so the
softplus preimage has mean zero.  X = A (*) Z = t(A t^-1(Z)) is then jointly
regularly varying with a discrete angular measure carried by the clipped,
normalized columns of A.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DegenerateError
from .marginals import solve_delta
from .translinear import softplus, softplus_inv, zero_clip

# Columns whose clipped norm falls below this carry no tail mass and are
# dropped from the discrete angular measure.
_NORM_TOL = 1e-12


@dataclass(frozen=True)
class ParetoSpec:
    """Shifted-Pareto law with survival (z + shift)^-2 for z > 1 - shift."""

    shift: float
    alpha: float = 2.0

    def __post_init__(self):
        if self.alpha != 2.0:
            raise ValueError("only tail index alpha = 2 is supported")
        if self.shift < 0:
            raise ValueError("shift must be nonnegative")

    @property
    def lower_bound(self) -> float:
        return 1.0 - self.shift

    def survival(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z > self.lower_bound, (z + self.shift) ** -2.0, 1.0)

    def ppf(self, p):
        """Quantile function: inverse of 1 - survival."""
        p = np.asarray(p, dtype=float)
        return (1.0 - p) ** -0.5 - self.shift

    def from_uniform(self, u):
        """Survival-inverse sampling transform Z = U^-1/2 - shift, U uniform(0, 1)."""
        u = np.asarray(u, dtype=float)
        return u ** -0.5 - self.shift


def default_pareto_spec() -> ParetoSpec:
    """The canonical input law: shift solving E[t^-1(Z)] = 0."""
    return ParetoSpec(shift=solve_delta())


def sample_z(q: int, n: int, spec: ParetoSpec | None = None, seed: int | None = None) -> np.ndarray:
    """n x q matrix of i.i.d. shifted-Pareto draws via the inverse CDF U^-1/2 - shift."""
    if q < 1 or n < 1:
        raise ValueError("q and n must be >= 1")
    if spec is None:
        spec = default_pareto_spec()
    rng = np.random.default_rng(seed)
    u = rng.random((n, q))
    # rng.random lies in [0, 1); an exact zero would map to infinity.
    u[u == 0.0] = np.finfo(float).tiny
    return spec.from_uniform(u)


def construct_x(A, Z) -> np.ndarray:
    """Row-wise transformed-linear construction X = t(t^-1(Z) A^T)."""
    A = np.asarray(A, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be 2-d")
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.shape[1] != A.shape[1]:
        raise ValueError(f"shape mismatch: A is {A.shape}, Z has {Z.shape[1]} columns")
    if np.any(Z <= 0):
        raise ValueError("Z entries must be strictly positive")
    return softplus(softplus_inv(Z) @ A.T)


@dataclass
class AngularPointMass:
    """One atom of a discrete angular measure on the unit quarter-sphere."""

    weight: float
    direction: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.direction = np.asarray(self.direction, dtype=float)

    @property
    def angle(self) -> float:
        """atan2 angle in [0, pi/2]; only defined for bivariate masses."""
        if self.direction.shape != (2,):
            raise ValueError("angle is only defined for 2-dimensional directions")
        return float(np.arctan2(self.direction[1], self.direction[0]))


def angular_measure_of(A) -> list[AngularPointMass]:
    """Discrete angular measure of X = A (*) Z: one atom per clipped column.

    Column a_j contributes weight ||a_j+||_2^2 at direction a_j+ / ||a_j+||_2,
    where + denotes componentwise clipping at zero.
    """
    A0 = np.atleast_2d(zero_clip(A))
    norms = np.linalg.norm(A0, axis=0)
    keep = norms > _NORM_TOL
    if not np.any(keep):
        raise DegenerateError("all columns clip to zero; the angular measure is degenerate")
    return [AngularPointMass(weight=float(norms[j] ** 2), direction=A0[:, j] / norms[j])
            for j in np.flatnonzero(keep)]


def total_angular_mass(masses: list[AngularPointMass]) -> float:
    return float(sum(m.weight for m in masses))


def matrix_to_csv(path, M, prefix: str = "x") -> None:
    """Write a simulated matrix as CSV with header <prefix>1..<prefix>p."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    cols = [f"{prefix}{j + 1}" for j in range(M.shape[1])]
    pd.DataFrame(M, columns=cols).to_csv(path, index=False)
