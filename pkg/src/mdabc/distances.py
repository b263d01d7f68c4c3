"""Discrepancies between the observed and a simulated empirical measure.

All three distances take the observed dataset as fixed and are evaluated for
many simulated datasets, so the observed-side work (sorting, ECDF at the
sample points, the smoothed observed density) is done once and cached in a
:class:`DistanceContext`.  ``DistanceContext.batch`` evaluates a stack of
simulated datasets of equal length in one call; that is the path the
samplers use.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import LengthMismatch
from .measures import (
    BinnedKernelSmoother,
    EmpiricalMeasure,
    IntegrationGrid,
    SmoothedDensity,
    as_dataset,
    kde_smooth,
    silverman_bandwidth,
)

HELLINGER_MAX = float(np.sqrt(2.0))


@dataclass(frozen=True)
class DistanceKind:
    """One of ``hellinger``, ``cvm`` or ``wasserstein`` (with order ``p >= 1``)."""

    name: str
    p: float = 1.0

    def __post_init__(self):
        name = self.name.lower()
        aliases = {"h": "hellinger", "hell": "hellinger", "w": "wasserstein", "wabc": "wasserstein"}
        name = aliases.get(name, name)
        if name not in ("hellinger", "cvm", "wasserstein"):
            raise ValueError(f"unknown distance {self.name!r}")
        if name == "wasserstein" and not self.p >= 1:
            raise ValueError(f"Wasserstein order must be >= 1, got {self.p}")
        object.__setattr__(self, "name", name)

    @classmethod
    def hellinger(cls):
        return cls("hellinger")

    @classmethod
    def cvm(cls):
        return cls("cvm")

    @classmethod
    def wasserstein(cls, p: float = 1.0):
        return cls("wasserstein", p)

    def __str__(self):
        return f"wasserstein(p={self.p:g})" if self.name == "wasserstein" else self.name


def wasserstein_1d(y, z, p: float = 1.0, *, quantile_coupling: bool = False) -> float:
    """p-Wasserstein distance between two equally weighted samples.

    For equal sizes the optimal assignment matches order statistics.  With
    ``quantile_coupling`` the i-th of ``n`` observed order statistics is
    matched to the ``ceil(i*m/n)``-th of the ``m`` simulated ones.
    """
    ys = as_dataset(y).sorted_values
    zs = as_dataset(z).sorted_values
    return float(_wasserstein_sorted(ys, zs[None, :], p, quantile_coupling)[0])


def _wasserstein_sorted(ys: np.ndarray, zs: np.ndarray, p: float, quantile_coupling: bool) -> np.ndarray:
    n, m = ys.size, zs.shape[1]
    if m != n:
        if not quantile_coupling:
            raise LengthMismatch(f"Wasserstein needs equal sample sizes, got {n} and {m}")
        idx = -(-np.arange(1, n + 1) * m // n) - 1
        zs = zs[:, idx]
    gap = np.abs(zs - ys[None, :])
    if p == 1:
        return gap.mean(axis=1)
    return np.mean(gap ** p, axis=1) ** (1.0 / p)


def hellinger_from_densities(f: np.ndarray, g: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Hellinger distance between densities tabulated on a common grid.

    ``f`` is the reference density (shape ``(G,)``), ``g`` one or more
    densities (``(G,)`` or ``(B, G)``) and ``weights`` the quadrature
    weights.  Both are scaled by the quadrature mass of ``f`` so that ``f``
    integrates to one exactly; mass that ``g`` is missing on the grid
    counts as non-overlapping.  The result is ``{2 - 2 int sqrt(f g)}^(1/2)``
    whenever ``g`` has at most unit mass, is exactly zero for ``g == f`` and
    never exceeds ``sqrt(2)``.
    """
    f = np.where(f < 1e-300, 0.0, f)
    g = np.where(g < 1e-300, 0.0, g)
    scale = float(weights @ f)
    if scale <= 0.0:
        raise ValueError("reference density has no mass on the grid")
    rf = np.sqrt(f / scale)
    rg = np.sqrt(g / scale)
    sq = (rg - rf) ** 2 @ weights
    missing = np.maximum(0.0, 1.0 - (g / scale) @ weights)
    h2 = np.clip(sq + missing, 0.0, 2.0)
    return np.sqrt(h2)


@dataclass(frozen=True, eq=False)
class DistanceContext:
    """Observed-side state for one distance, shared by every evaluation.

    Build with :meth:`build`; the context is immutable and thread-safe.
    """

    kind: DistanceKind
    observed_measure: EmpiricalMeasure
    bandwidth: Optional[float] = None
    grid: Optional[IntegrationGrid] = None
    observed_density: Optional[SmoothedDensity] = None
    kde_method: str = "direct"
    quantile_coupling: bool = False

    def __post_init__(self):
        if self.kind.name == "hellinger":
            if self.bandwidth is None or self.grid is None or self.observed_density is None:
                raise ValueError("a Hellinger context needs bandwidth, grid and observed_density")
        if self.kde_method not in ("direct", "binned"):
            raise ValueError(f"unknown KDE method {self.kde_method!r}")

    @classmethod
    def build(cls, kind, observed, *, bandwidth: float | None = None, grid: IntegrationGrid | None = None,
              num_points: int = 512, kde_method: str = "direct",
              quantile_coupling: bool = False) -> "DistanceContext":
        """Precompute everything that depends only on the observed data.

        For Hellinger the bandwidth defaults to Silverman's rule on the
        observed data and the grid to ``num_points`` points over
        ``[min - 4h, max + 4h]``.
        """
        if isinstance(kind, str):
            kind = DistanceKind(kind)
        y = as_dataset(observed)
        density = None
        if kind.name == "hellinger":
            if bandwidth is None:
                bandwidth = silverman_bandwidth(y)
            if grid is None:
                grid = IntegrationGrid.covering(y, bandwidth, num_points)
            density = kde_smooth(y, bandwidth, grid, method=kde_method)
        return cls(kind, y.measure(), bandwidth, grid, density, kde_method, quantile_coupling)

    # cached observed-side arrays; built lazily because the dataclass is frozen
    def _cache(self, name, factory):
        cache = self.__dict__.setdefault("_lazy", {})
        if name not in cache:
            cache[name] = factory()
        return cache[name]

    @property
    def _observed_cdf(self) -> np.ndarray:
        m = self.observed_measure
        return self._cache("cdf", lambda: m.cdf(m.sorted_values))

    @property
    def _smoother(self) -> BinnedKernelSmoother:
        return self._cache("smoother", lambda: BinnedKernelSmoother(self.grid, self.bandwidth))

    @property
    def _weights(self) -> np.ndarray:
        return self._cache("weights", self.grid.trapezoid_weights)

    def __call__(self, z) -> float:
        return distance(self, z)

    def batch(self, samples: np.ndarray) -> np.ndarray:
        """Distances for each row of a ``(B, m)`` array of simulated data."""
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        name = self.kind.name
        if name == "wasserstein":
            return _wasserstein_sorted(self.observed_measure.sorted_values, np.sort(samples, axis=1),
                                       self.kind.p, self.quantile_coupling)
        if name == "cvm":
            return self._cvm_rows(np.sort(samples, axis=1))
        return self._hellinger_rows(samples)

    def _cvm_rows(self, zs: np.ndarray) -> np.ndarray:
        ys = self.observed_measure.sorted_values
        fy = self._observed_cdf
        n_rows, m = zs.shape
        n = ys.size
        # stable sort puts simulated values ahead of equal observed ones, so
        # the rank of y_i minus i counts the simulated values <= y_i
        merged = np.concatenate([zs, np.broadcast_to(ys, (n_rows, n))], axis=1)
        order = np.argsort(merged, axis=1, kind="stable")
        rank = np.empty_like(order)
        np.put_along_axis(rank, order, np.broadcast_to(np.arange(m + n), order.shape), axis=1)
        gz = (rank[:, m:] - np.arange(n)) / m
        return np.mean((fy - gz) ** 2, axis=1)

    def _hellinger_rows(self, samples: np.ndarray) -> np.ndarray:
        if self.kde_method == "binned":
            g = self._smoother(samples)
        else:
            g = np.stack([kde_smooth(row, self.bandwidth, self.grid, check_span=False).density_values
                          for row in samples])
        return hellinger_from_densities(self.observed_density.density_values, g, self._weights)


def cvm_distance(ctx: DistanceContext, z) -> float:
    """Cramer-von Mises discrepancy integrated against the observed measure.

    ``(1/n) sum_i (F_y(y_i) - G_z(y_i))**2`` where ``F_y`` and ``G_z`` are the
    right-continuous ECDFs of the observed and simulated data.  The simulated
    sample may have any length.
    """
    zs = as_dataset(z).sorted_values
    return float(ctx._cvm_rows(zs[None, :])[0])


def hellinger_distance(ctx: DistanceContext, z) -> float:
    """Hellinger distance between the smoothed observed and simulated measures.

    The simulated data are smoothed with the context's bandwidth and grid;
    simulated values off the grid only contribute through their kernel
    tails on the grid.
    """
    if ctx.grid is None or ctx.observed_density is None:
        raise ValueError("context carries no smoothing state")
    values = as_dataset(z).values
    if ctx.kde_method == "binned":
        g = ctx._smoother(values[None, :])[0]
    else:
        g = kde_smooth(values, ctx.bandwidth, ctx.grid, check_span=False).density_values
    return float(hellinger_from_densities(ctx.observed_density.density_values, g, ctx._weights))


def distance(ctx: DistanceContext, z) -> float:
    """Dispatch on ``ctx.kind``."""
    name = ctx.kind.name
    if name == "wasserstein":
        ys = ctx.observed_measure.sorted_values
        zs = as_dataset(z).sorted_values
        return float(_wasserstein_sorted(ys, zs[None, :], ctx.kind.p, ctx.quantile_coupling)[0])
    if name == "cvm":
        return cvm_distance(ctx, z)
    return hellinger_distance(ctx, z)
