"""Marginal preprocessing: detrending, semiparametric CDFs, Pareto-scale transforms.

Each variable is detrended (optional), given a semiparametric distribution
function (empirical body below a high threshold, generalized Pareto tail
above it), and mapped to a common heavy-tailed scale

    X = 1 / sqrt(1 - F(X_orig)) - delta,

a shifted Pareto with survival (z + delta)^-2 and unit tail ratio.  The shift
delta is chosen so the softplus preimage of the transformed variable has mean
zero, which reduces bias in downstream tail-dependence estimation.  The whole
chain is invertible so predictions can be mapped back to the original data
scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize

from .errors import ConvergenceError, DegenerateError, TailpredictError
from .translinear import softplus_inv


@lru_cache(maxsize=1)
def solve_delta() -> float:
    """Shift delta such that E[t^-1(Z)] = 0 for Z with survival (z + delta)^-2.

    Writing Z = Y - delta with Y standard Pareto(2), solves
    integral of t^-1(y - delta) * 2 y^-3 dy over (1, inf) for the root in delta.
    """

    def objective(delta: float) -> float:
        f = lambda y: softplus_inv(y - delta) * 2.0 * y ** -3
        head, _ = quad(f, 1.0, 50.0, limit=200)
        tail, _ = quad(f, 50.0, np.inf, limit=200)
        return head + tail

    try:
        return brentq(objective, 0.5, 1.5, xtol=1e-10)
    except ValueError as exc:  # no sign change in bracket
        raise TailpredictError(f"failed to bracket the shift delta: {exc}") from exc


@dataclass
class TrendModel:
    """Moving-average location/scale trend evaluated at every time step."""

    window: int
    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be an odd integer >= 3")
        self.means = np.asarray(self.means, dtype=float)
        self.sds = np.asarray(self.sds, dtype=float)
        if np.any(self.sds <= 0):
            raise DegenerateError("trend standard deviations must be positive")

    def to_dict(self) -> dict:
        return {"window": self.window, "means": self.means.tolist(), "sds": self.sds.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrendModel":
        return cls(window=int(d["window"]), means=np.array(d["means"]), sds=np.array(d["sds"]))


def detrend(series, window: int):
    """Center and scale by a moving mean/sd; edge windows shrink, no data loss.

    Returns (residuals, TrendModel); residual_t = (x_t - mean_t) / sd_t.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be 1-d")
    n = x.shape[0]
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    if n < window:
        raise ValueError(f"series length {n} is shorter than window {window}")

    # Windowed sums via cumulative sums on index ranges clipped at the edges.
    # Shift by the global mean first so the variance update is well conditioned.
    shift = x.mean()
    xc = x - shift
    half = window // 2
    cs = np.concatenate([[0.0], np.cumsum(xc)])
    cs2 = np.concatenate([[0.0], np.cumsum(xc * xc)])
    lo = np.clip(np.arange(n) - half, 0, None)
    hi = np.clip(np.arange(n) + half + 1, None, n)
    cnt = (hi - lo).astype(float)
    s = cs[hi] - cs[lo]
    s2 = cs2[hi] - cs2[lo]
    means = s / cnt
    var = (s2 - s * s / cnt) / (cnt - 1.0)
    if np.any(var <= 0):
        raise DegenerateError("constant window encountered (zero variance)")
    sds = np.sqrt(var)
    model = TrendModel(window=window, means=means + shift, sds=sds)
    return (x - model.means) / model.sds, model


def retrend(model: TrendModel, values, t):
    """Inverse of detrend at time index t: value * sd_t + mean_t."""
    idx = np.asarray(t, dtype=int)
    return np.asarray(values, dtype=float) * model.sds[idx] + model.means[idx]


@dataclass
class GPDParams:
    """Generalized Pareto fit for exceedances y = x - u above threshold u."""

    sigma: float
    xi: float
    u: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def cdf(self, y):
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        if abs(self.xi) < 1e-12:
            return -np.expm1(-y / self.sigma)
        arg = 1.0 + self.xi * y / self.sigma
        if self.xi < 0:
            arg = np.maximum(arg, 0.0)
        return 1.0 - arg ** (-1.0 / self.xi)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        if abs(self.xi) < 1e-12:
            return -self.sigma * np.log1p(-q)
        return self.sigma / self.xi * ((1.0 - q) ** -self.xi - 1.0)

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "xi": self.xi, "u": self.u}

    @classmethod
    def from_dict(cls, d: dict) -> "GPDParams":
        return cls(sigma=float(d["sigma"]), xi=float(d["xi"]), u=float(d["u"]))


def fit_gpd(exceedances, u: float = 0.0, n_restarts: int = 5, seed: int = 0) -> GPDParams:
    """Maximum-likelihood GPD fit to positive exceedances y = x - u.

    Box-constrained quasi-Newton on (log sigma, xi) with xi in (-0.5, 1) and a
    few perturbed restarts from the moment estimator.
    """
    y = np.asarray(exceedances, dtype=float)
    if y.ndim != 1 or y.size < 30:
        raise ValueError("need at least 30 exceedances to fit a GPD tail")
    if np.any(y <= 0):
        raise ValueError("exceedances must be positive")

    ymax = y.max()

    def nll(theta):
        log_sigma, xi = theta
        sigma = np.exp(log_sigma)
        if xi < 0 and ymax >= -sigma / xi:
            return 1e10
        if abs(xi) < 1e-10:
            return y.size * log_sigma + np.sum(y) / sigma
        z = np.log1p(xi * y / sigma)
        return y.size * log_sigma + (1.0 + 1.0 / xi) * np.sum(z)

    ybar, s2 = y.mean(), y.var()
    xi0 = 0.5 * (1.0 - ybar * ybar / s2) if s2 > 0 else 0.1
    sigma0 = 0.5 * ybar * (ybar * ybar / s2 + 1.0) if s2 > 0 else ybar
    xi0 = float(np.clip(xi0, -0.45, 0.95))
    rng = np.random.default_rng(seed)

    best = None
    for k in range(n_restarts):
        if k == 0:
            start = (np.log(sigma0), xi0)
        else:
            start = (np.log(sigma0) + rng.normal(0, 0.5), float(np.clip(xi0 + rng.normal(0, 0.25), -0.45, 0.95)))
        res = minimize(nll, start, method="L-BFGS-B",
                       bounds=[(-30.0, 30.0), (-0.499, 0.999)])
        if res.success and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise ConvergenceError(f"GPD fit did not converge after {n_restarts} restarts "
                               f"(n={y.size}, mean={ybar:.4g}, var={s2:.4g})")
    return GPDParams(sigma=float(np.exp(best.x[0])), xi=float(best.x[1]), u=u)


class MarginalTransform:
    """Semiparametric CDF and its map to/from the shifted-Pareto scale.

    The body is the interpolated empirical CDF with i/(n+1) plotting positions;
    above the threshold quantile the fitted GPD takes over (unless disabled).
    """

    def __init__(self, body, u, gpd, delta, threshold_quantile=0.95):
        body = np.sort(np.asarray(body, dtype=float))
        if body.size < 2:
            raise ValueError("need at least 2 body observations")
        self.body = body
        self.u = float(u)
        self.gpd = gpd
        self.delta = float(delta)
        self.threshold_quantile = float(threshold_quantile)
        n = body.size
        pos = np.arange(1, n + 1) / (n + 1.0)
        # Collapse ties to their highest plotting position so the CDF stays a
        # nondecreasing function of the value.
        vals = np.unique(body)
        idx = np.searchsorted(body, vals, side="right") - 1
        self._xs = vals
        self._ps = pos[idx]

    @classmethod
    def fit(cls, data, threshold_quantile: float = 0.95, gpd_tail: bool = True,
            delta: float | None = None) -> "MarginalTransform":
        x = np.asarray(data, dtype=float)
        x = x[np.isfinite(x)]
        if x.size < 50:
            raise ValueError("need at least 50 observations to fit a marginal transform")
        if not 0.0 < threshold_quantile < 1.0:
            raise ValueError("threshold quantile must be in (0, 1)")
        if delta is None:
            delta = solve_delta()
        u = float(np.quantile(x, threshold_quantile, method="weibull"))
        gpd = None
        if gpd_tail:
            exc = x[x > u] - u
            if exc.size < 30:
                raise ValueError(f"only {exc.size} exceedances above the "
                                 f"{threshold_quantile} quantile; need >= 30 for the GPD tail")
            gpd = fit_gpd(exc, u=u)
        return cls(body=x, u=u, gpd=gpd, delta=delta, threshold_quantile=threshold_quantile)

    # -- distribution function ------------------------------------------------

    def cdf(self, x):
        """Semiparametric F(x): empirical body, GPD tail above the threshold."""
        x = np.asarray(x, dtype=float)
        q = self.threshold_quantile
        body = np.interp(x, self._xs, self._ps, left=0.0)
        if self.gpd is None:
            out = body
        else:
            out = np.where(x <= self.u, np.minimum(body, q),
                           q + (1.0 - q) * self.gpd.cdf(x - self.u))
        return float(out) if np.ndim(x) == 0 else out

    def ppf(self, p):
        """Inverse of cdf; linear interpolation between order statistics in the body."""
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise ValueError("probabilities must lie in [0, 1]")
        q = self.threshold_quantile
        body = np.interp(p, self._ps, self._xs)
        if self.gpd is None:
            out = body
        else:
            tail = self.u + self.gpd.ppf(np.clip((p - q) / (1.0 - q), 0.0, 1.0 - 1e-16))
            out = np.where(p <= q, np.minimum(body, self.u), tail)
        return float(out) if np.ndim(p) == 0 else out

    # -- Pareto-scale maps ----------------------------------------------------

    def to_pareto(self, x):
        """Map data to the shifted-Pareto scale: 1/sqrt(1 - F(x)) - delta."""
        f = np.asarray(self.cdf(x), dtype=float)
        if np.any(f >= 1.0):
            raise TailpredictError("F(x) = 1 encountered; transformed value would be infinite")
        out = (1.0 - f) ** -0.5 - self.delta
        return float(out) if np.ndim(x) == 0 else out

    def from_pareto(self, z):
        """Inverse of to_pareto: F^-1(1 - (z + delta)^-2)."""
        z = np.asarray(z, dtype=float)
        if np.any(z < (1.0 - self.delta) - 1e-12):
            raise ValueError("Pareto-scale values must be >= 1 - delta")
        p = 1.0 - (np.maximum(z, 1.0 - self.delta) + self.delta) ** -2
        out = self.ppf(p)
        return float(out) if np.ndim(z) == 0 else out

    # -- persistence ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "body": self.body.tolist(),
            "u": self.u,
            "gpd": None if self.gpd is None else self.gpd.to_dict(),
            "delta": self.delta,
            "threshold_quantile": self.threshold_quantile,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarginalTransform":
        gpd = None if d["gpd"] is None else GPDParams.from_dict(d["gpd"])
        return cls(body=np.array(d["body"]), u=d["u"], gpd=gpd, delta=d["delta"],
                   threshold_quantile=d.get("threshold_quantile", 0.95))


def semiparam_cdf(transform: MarginalTransform, x):
    """Functional alias for MarginalTransform.cdf."""
    return transform.cdf(x)


def to_pareto_scale(transform: MarginalTransform, x):
    """Functional alias for MarginalTransform.to_pareto."""
    return transform.to_pareto(x)


def back_transform(transform: MarginalTransform, z, trend: TrendModel | None = None, t=None):
    """Map a Pareto-scale value back to the original data scale.

    Inverts the marginal transform and, when a trend model is given, rescales
    by the moving sd and re-adds the moving mean at time index t.
    """
    x = transform.from_pareto(z)
    if trend is not None:
        if t is None:
            raise ValueError("time index t is required to invert the trend")
        x = retrend(trend, x, t)
    return x
