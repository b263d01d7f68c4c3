"""Posterior summaries and the classical minimum-distance point estimator."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .distances import DistanceContext, DistanceKind, hellinger_from_densities
from .exceptions import DimensionMismatch, EmptyCloud, OptimizerFailure
from .measures import IntegrationGrid, as_dataset
from .models import MIXTURE_NAMES, ModelSpec, ParameterVector, mixture_canonical, mixture_cdf, mixture_density
from .rng import as_stream


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Per-coordinate weighted moments and 95% equal-tailed credible bounds."""

    mean: ParameterVector
    std: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    @property
    def names(self) -> tuple:
        return self.mean.names

    def as_dict(self) -> dict:
        return {
            "names": list(self.names),
            "mean": self.mean.values.tolist(),
            "std": np.asarray(self.std).tolist(),
            "ci_low": np.asarray(self.ci_low).tolist(),
            "ci_high": np.asarray(self.ci_high).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PosteriorSummary":
        return cls(ParameterVector(d["mean"], d["names"]), np.array(d["std"], dtype=float),
                   np.array(d["ci_low"], dtype=float), np.array(d["ci_high"], dtype=float))


def weighted_quantile(x, w, q):
    """Quantiles of a weighted sample by linear interpolation of its ECDF.

    Each sorted value sits at the midpoint of its weight step, so equal
    weights give symmetric results; ``q`` outside the first or last
    midpoint returns the smallest or largest value.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order] / w.sum()
    pos = np.cumsum(ws) - 0.5 * ws
    return np.interp(q, pos, xs)


def summarize(cloud, alpha: float = 0.05) -> PosteriorSummary:
    """Weighted mean, population standard deviation and equal-tailed interval.

    Raises
    ------
    EmptyCloud
        If the cloud has no particle with positive weight.
    """
    if len(cloud) == 0 or not np.isfinite(np.max(cloud.log_weights)):
        raise EmptyCloud("cloud has no particle with positive weight")
    w = cloud.weights
    keep = w > 0
    th, w = cloud.thetas[keep], w[keep]
    w = w / w.sum()
    mean = w @ th
    var = w @ (th - mean) ** 2
    std = np.sqrt(np.maximum(var, 0.0))
    lo = np.array([weighted_quantile(th[:, j], w, alpha / 2) for j in range(th.shape[1])])
    hi = np.array([weighted_quantile(th[:, j], w, 1 - alpha / 2) for j in range(th.shape[1])])
    return PosteriorSummary(ParameterVector(mean, cloud.names), std, lo, hi)


@dataclass(frozen=True)
class MdOptimizerConfig:
    """Nelder-Mead settings for :func:`md_point_estimate`."""

    restarts: int = 5
    max_iter: int = 500
    tol: float = 1e-6

    def __post_init__(self):
        if self.restarts < 1 or self.max_iter < 1 or not self.tol > 0:
            raise ValueError("need restarts >= 1, max_iter >= 1 and tol > 0")


@dataclass(frozen=True, eq=False)
class MdEstimate:
    theta_hat: ParameterVector
    objective_value: float
    converged: bool
    restarts_used: int


_SIGMA_FLOOR = 1e-6
_SIGMA_CAP = 10.0


def _reflect(x, lo, hi):
    """Fold ``x`` into ``[lo, hi]`` by repeated reflection at the bounds."""
    span = hi - lo
    r = np.mod(x - lo, 2 * span)
    return lo + np.where(r > span, 2 * span - r, r)


def _to_box(x: np.ndarray) -> np.ndarray:
    th = np.array(x, dtype=float)
    th[1] = _reflect(th[1], 0.0, 1.0)
    th[2:] = np.maximum(_reflect(th[2:], 0.0, _SIGMA_CAP), _SIGMA_FLOOR)
    return mixture_canonical(th)


class MdObjective:
    """Distance between the mixture model at ``theta`` and the observed data.

    Hellinger: the model density convolved with the data's Gaussian kernel
    (for a normal mixture this only inflates each component variance by
    ``h**2``) against the observed KDE, on the same grid.  CvM: squared gap
    between model CDF and observed ECDF averaged over the observations.
    """

    def __init__(self, observed, kind, bandwidth: float | None = None, grid: IntegrationGrid | None = None):
        self.kind = DistanceKind(kind) if isinstance(kind, str) else kind
        if self.kind.name not in ("hellinger", "cvm"):
            raise ValueError("the minimum-distance estimator supports hellinger and cvm only")
        self.observed = as_dataset(observed)
        self.ctx = DistanceContext.build(self.kind, self.observed, bandwidth=bandwidth, grid=grid)
        if self.kind.name == "hellinger":
            self._points = self.ctx.grid.points
            self._weights = self.ctx.grid.trapezoid_weights()
        else:
            self._ys = self.ctx.observed_measure.sorted_values
            self._fy = self.ctx.observed_measure.cdf(self._ys)

    def __call__(self, theta) -> float:
        mu, omega, s1, s2 = np.asarray(theta, dtype=float)
        if self.kind.name == "hellinger":
            h2 = self.ctx.bandwidth ** 2
            smoothed = (mu, omega, np.sqrt(s1 * s1 + h2), np.sqrt(s2 * s2 + h2))
            g = mixture_density(smoothed, self._points)
            return float(hellinger_from_densities(self.ctx.observed_density.density_values, g, self._weights))
        gap = self._fy - mixture_cdf((mu, omega, s1, s2), self._ys)
        return float(np.mean(gap * gap))


def md_point_estimate(observed, kind, *, bandwidth: float | None = None, grid: IntegrationGrid | None = None,
                      optimizer_cfg: MdOptimizerConfig = MdOptimizerConfig(), rng=0,
                      density_model: str = "mixture") -> MdEstimate:
    """Minimum-distance estimate of the mixture parameters.

    Nelder-Mead is started from ``optimizer_cfg.restarts`` prior draws.
    Box constraints are enforced by reflecting at the prior bounds and the
    label symmetry by mapping to ``mu <= 0``.  The best restart wins, the
    earliest one on ties.

    Warns ``OptimizerFailure`` and returns ``converged=False`` when no
    restart meets the tolerance within ``max_iter`` iterations.
    """
    if density_model != "mixture":
        raise ValueError("the minimum-distance estimator is only available for the mixture model")
    objective = MdObjective(observed, kind, bandwidth, grid)
    spec = ModelSpec("mixture", len(objective.observed))
    starts = spec.sample_prior(as_stream(rng).generator(), optimizer_cfg.restarts)
    opts = {"maxiter": optimizer_cfg.max_iter, "xatol": optimizer_cfg.tol, "fatol": optimizer_cfg.tol}

    best = None
    any_converged = False
    for x0 in starts:
        res = minimize(lambda x: objective(_to_box(x)), x0, method="Nelder-Mead", options=opts)
        any_converged |= bool(res.success)
        theta = _to_box(res.x)
        value = objective(theta)
        if best is None or value < best[1]:
            best = (theta, value)
    if not any_converged:
        warnings.warn(OptimizerFailure(f"no Nelder-Mead restart converged in {optimizer_cfg.max_iter} iterations"),
                      stacklevel=2)
    return MdEstimate(ParameterVector(best[0], MIXTURE_NAMES), best[1], any_converged, len(starts))


def posterior_mean_vs_md_gap(cloud, md: MdEstimate) -> np.ndarray:
    """Coordinate-wise ``|posterior mean - theta_hat|``."""
    mean = summarize(cloud).mean.values
    theta_hat = md.theta_hat.values
    if mean.size != theta_hat.size:
        raise DimensionMismatch(f"cloud has {mean.size} coordinates, estimate has {theta_hat.size}")
    return np.abs(mean - theta_hat)
