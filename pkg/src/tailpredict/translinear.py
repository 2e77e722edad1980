"""Transformed-linear algebra on the positive orthant.

The softplus map t(y) = log(1 + e^y) is a bijection from the reals onto the
positive half-line that is asymptotically the identity for large arguments.
Conjugating ordinary linear operations through t gives vector addition and
scalar multiplication that keep vectors nonnegative while acting linearly on
large values:

    x1 (+) x2 = t(t^-1(x1) + t^-1(x2))
    a (*) x   = t(a t^-1(x))
    A (*) z   = t(A t^-1(z))

All functions are pure and vectorized over numpy arrays.
"""

from __future__ import annotations

import numpy as np

# Crossover beyond which the linear / exponential asymptotes of t and t^-1 are
# exact to double precision; avoids overflow of exp at extreme levels.
_CROSSOVER = 30.0


def _as_finite_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr!r}")
    return arr


def _as_positive_array(x, name: str) -> np.ndarray:
    arr = _as_finite_array(x, name)
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} must have strictly positive entries")
    return arr


def _maybe_scalar(out: np.ndarray, *inputs) -> np.ndarray | float:
    if all(np.isscalar(v) or np.ndim(v) == 0 for v in inputs):
        return float(out)
    return out


def softplus(y):
    """t(y) = log(1 + e^y), computed stably for any magnitude of y."""
    arr = _as_finite_array(y, "y")
    # logaddexp(0, y) == log(e^0 + e^y); stable on both branches.
    return _maybe_scalar(np.logaddexp(0.0, arr), y)


def softplus_inv(x):
    """t^-1(x) = log(e^x - 1) for x > 0, computed stably on both branches."""
    arr = _as_finite_array(x, "x")
    if np.any(arr <= 0.0):
        raise ValueError("softplus_inv requires x > 0 (0 is not in the image of t)")
    out = np.empty_like(arr)
    hi = arr > _CROSSOVER
    out[hi] = arr[hi] + np.log1p(-np.exp(-arr[hi]))
    out[~hi] = np.log(np.expm1(arr[~hi]))
    return _maybe_scalar(out, x)


def tadd(x1, x2):
    """Transformed-linear vector addition, componentwise t(t^-1(x1) + t^-1(x2))."""
    a1 = _as_positive_array(x1, "x1")
    a2 = _as_positive_array(x2, "x2")
    if a1.shape != a2.shape:
        raise ValueError(f"shape mismatch: {a1.shape} vs {a2.shape}")
    return _maybe_scalar(softplus(softplus_inv(a1) + softplus_inv(a2)), x1, x2)


def tscale(a, x):
    """Transformed-linear scalar multiplication, componentwise t(a * t^-1(x))."""
    scalar = float(a)
    if not np.isfinite(scalar):
        raise ValueError("scalar must be finite")
    arr = _as_positive_array(x, "x")
    return _maybe_scalar(softplus(scalar * softplus_inv(arr)), x)


def tmat_apply(A, z):
    """Transformed-linear matrix action t(A t^-1(z)) for a p x q matrix A."""
    mat = _as_finite_array(A, "A")
    if mat.ndim != 2:
        raise ValueError("A must be a 2-d matrix")
    vec = _as_positive_array(z, "z")
    if vec.ndim != 1 or vec.shape[0] != mat.shape[1]:
        raise ValueError(f"shape mismatch: A is {mat.shape}, z has length {vec.shape}")
    return softplus(mat @ softplus_inv(vec))


def zero_clip(a):
    """Componentwise max(a, 0); negative coefficients carry no tail mass."""
    arr = _as_finite_array(a, "a")
    return _maybe_scalar(np.maximum(arr, 0.0), a)
