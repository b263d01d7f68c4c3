"""Priors and forward simulators for the benchmark models.

Four models are available by name:

``mixture``  two-component normal mixture, theta = (mu, omega, sigma1, sigma2)
``gk``       g-and-k quantile distribution, theta = (a, b, g, k)
``mg1``      M/G/1 queue inter-departure times, theta = (theta1, theta2, theta3)
``sv``       log-normal stochastic volatility, theta = (pi, beta, sigma_u)

Each simulator has a batched form that takes one ``numpy.random.Generator``
per parameter row.  A row's draws come only from its own generator, so the
output for a row does not depend on which other rows are in the batch.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import signal, special

from .exceptions import DimensionMismatch, InvalidParameter, QOutOfRange
from .measures import Dataset
from .rng import OBSERVED_ID, as_stream

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"Uniform needs lo < hi, got ({self.lo}, {self.hi})")

    def sample(self, gen, size=None):
        return self.lo + (self.hi - self.lo) * gen.random(size)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, -np.log(self.hi - self.lo), -np.inf)

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def var(self):
        return (self.hi - self.lo) ** 2 / 12.0


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError(f"Normal needs sd > 0, got {self.sd}")

    def sample(self, gen, size=None):
        return self.mean + self.sd * gen.standard_normal(size)

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.sd
        return -0.5 * z * z - _LOG_SQRT_2PI - np.log(self.sd)

    @property
    def var(self):
        return self.sd ** 2


Coordinate = Union[Uniform, Normal]


@dataclass(frozen=True)
class PriorSpec:
    """Independent per-coordinate prior."""

    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def sample(self, gen, size: int | None = None) -> np.ndarray:
        cols = [c.sample(gen, size) for c in self.coords]
        return np.array(cols, dtype=float).T if size is not None else np.array(cols, dtype=float)

    def logdensity(self, thetas) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        if thetas.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} coordinates, got {thetas.shape[-1]}")
        return sum(c.logpdf(thetas[..., j]) for j, c in enumerate(self.coords))


@dataclass(frozen=True, eq=False)
class ParameterVector:
    values: np.ndarray
    names: tuple

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        names = tuple(self.names)
        if len(names) != v.size:
            raise DimensionMismatch(f"{v.size} values but {len(names)} names")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", names)

    def __len__(self):
        return self.values.size

    def __getitem__(self, key):
        if isinstance(key, str):
            return float(self.values[self.names.index(key)])
        return self.values[key]

    def __eq__(self, other):
        if not isinstance(other, ParameterVector):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.values, other.values)

    __hash__ = None

    def as_dict(self):
        return dict(zip(self.names, self.values.tolist()))


def prior_sample(p: PriorSpec, rng, names: Sequence[str] | None = None) -> ParameterVector:
    gen = rng if isinstance(rng, np.random.Generator) else as_stream(rng).generator()
    values = p.sample(gen)
    return ParameterVector(values, names or tuple(f"theta{j + 1}" for j in range(p.dim)))


def prior_logdensity(p: PriorSpec, theta) -> float:
    values = theta.values if isinstance(theta, ParameterVector) else np.asarray(theta, dtype=float)
    if values.shape != (p.dim,):
        raise DimensionMismatch(f"prior has {p.dim} coordinates, got shape {values.shape}")
    return float(p.logdensity(values))


@dataclass(frozen=True)
class ContaminationSpec:
    """Observed-data contamination: each draw is replaced with probability
    ``alpha`` by ``N(zeta, nu)`` (``nu`` is a variance)."""

    alpha: float
    zeta: float
    nu: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")


def _values(theta) -> np.ndarray:
    return theta.values if isinstance(theta, ParameterVector) else np.asarray(theta, dtype=float)


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return as_stream(rng).generator()


# --------------------------------------------------------------------------
# two-component normal mixture
# --------------------------------------------------------------------------

MIXTURE_NAMES = ("mu", "omega", "sigma1", "sigma2")
MIXTURE_PRIOR = PriorSpec((Normal(0.0, 1.0), Uniform(0.0, 1.0), Uniform(0.0, 10.0), Uniform(0.0, 10.0)))


def _check_mixture(th: np.ndarray):
    th = np.atleast_2d(th)
    if th.shape[1] != 4:
        raise DimensionMismatch(f"mixture parameters have 4 coordinates, got {th.shape[1]}")
    bad = (th[:, 1] < 0) | (th[:, 1] > 1) | (th[:, 2] <= 0) | (th[:, 3] <= 0) | ~np.all(np.isfinite(th), axis=1)
    if np.any(bad):
        raise InvalidParameter(f"mixture parameters outside support: {th[bad][0]}")


def mixture_density(theta, x):
    """``(1-omega) N(x; mu, sigma1^2) + omega N(x; -mu, sigma2^2)``."""
    mu, omega, s1, s2 = _values(theta)
    _check_mixture(np.array([mu, omega, s1, s2]))
    x = np.asarray(x, dtype=float)
    z1 = (x - mu) / s1
    z2 = (x + mu) / s2
    return ((1 - omega) * np.exp(-0.5 * z1 * z1) / s1 + omega * np.exp(-0.5 * z2 * z2) / s2) / np.sqrt(2 * np.pi)


def mixture_cdf(theta, x):
    mu, omega, s1, s2 = _values(theta)
    _check_mixture(np.array([mu, omega, s1, s2]))
    x = np.asarray(x, dtype=float)
    return (1 - omega) * special.ndtr((x - mu) / s1) + omega * special.ndtr((x + mu) / s2)


def _contaminate(x: np.ndarray, gens, contamination: ContaminationSpec | None) -> np.ndarray:
    if contamination is None or contamination.alpha == 0.0:
        return x
    n = x.shape[1]
    hit = np.stack([g.random(n) for g in gens]) < contamination.alpha
    jumps = contamination.zeta + np.sqrt(contamination.nu) * np.stack([g.standard_normal(n) for g in gens])
    return np.where(hit, jumps, x)


def simulate_mixture_batch(thetas, n: int, gens, contamination=None) -> np.ndarray:
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    _check_mixture(th)
    u = np.stack([g.random(n) for g in gens])
    e = np.stack([g.standard_normal(n) for g in gens])
    mu, omega, s1, s2 = (th[:, j:j + 1] for j in range(4))
    x = np.where(u < omega, -mu + s2 * e, mu + s1 * e)
    return _contaminate(x, gens, contamination)


def simulate_mixture(theta, n: int, contamination=None, rng=0) -> Dataset:
    return Dataset(simulate_mixture_batch(_values(theta), n, [_gen(rng)], contamination)[0])


def mixture_canonical(thetas: np.ndarray) -> np.ndarray:
    """Map each row to the labelling with ``mu <= 0``.

    ``(mu, omega, s1, s2)`` and ``(-mu, 1-omega, s2, s1)`` define the same
    density and have the same prior density.
    """
    th = np.array(thetas, dtype=float, copy=True)
    flip = th[..., 0] > 0
    swapped = np.stack([-th[..., 0], 1.0 - th[..., 1], th[..., 3], th[..., 2]], axis=-1)
    th[flip] = swapped[flip]
    return th


# --------------------------------------------------------------------------
# g-and-k
# --------------------------------------------------------------------------

GK_NAMES = ("a", "b", "g", "k")
GK_PRIOR = PriorSpec((Uniform(0.0, 10.0),) * 4)


def _check_gk(th: np.ndarray):
    th = np.atleast_2d(th)
    if th.shape[1] != 4:
        raise DimensionMismatch(f"g-and-k parameters have 4 coordinates, got {th.shape[1]}")
    bad = (th[:, 1] <= 0) | (th[:, 3] <= -0.5) | ~np.all(np.isfinite(th), axis=1)
    if np.any(bad):
        raise InvalidParameter(f"g-and-k needs b > 0 and k > -0.5, got {th[bad][0]}")


def _gk_transform(th: np.ndarray, z: np.ndarray) -> np.ndarray:
    a, b, g, k = (th[:, j:j + 1] for j in range(4))
    # (1 - exp(-g z)) / (1 + exp(-g z)) == tanh(g z / 2)
    return a + b * (1.0 + 0.8 * np.tanh(0.5 * g * z)) * (1.0 + z * z) ** k * z


def gk_quantile(theta, q):
    """Quantile function of the g-and-k distribution (constant 0.8)."""
    th = np.atleast_2d(_values(theta))
    _check_gk(th)
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)):
        raise QOutOfRange("q must lie strictly inside (0, 1)")
    z = special.ndtri(q)
    out = _gk_transform(th, np.atleast_1d(z)[None, :])[0]
    return out.reshape(q.shape) if q.ndim else float(out[0])


def simulate_gk_batch(thetas, n: int, gens, contamination=None) -> np.ndarray:
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    _check_gk(th)
    u = np.stack([g.random(n) for g in gens])
    np.maximum(u, 2.0 ** -54, out=u)  # random() can return exactly 0
    x = _gk_transform(th, special.ndtri(u))
    return _contaminate(x, gens, contamination)


def simulate_gk(theta, n: int, rng=0) -> Dataset:
    return Dataset(simulate_gk_batch(_values(theta), n, [_gen(rng)])[0])


# --------------------------------------------------------------------------
# M/G/1 queue
# --------------------------------------------------------------------------

MG1_NAMES = ("theta1", "theta2", "theta3")
# prior on (theta1, theta2 - theta1, theta3)
MG1_PRIOR = PriorSpec((Uniform(0.0, 10.0), Uniform(0.0, 10.0), Uniform(0.0, 1.0 / 3.0)))


def _check_mg1(th: np.ndarray):
    th = np.atleast_2d(th)
    if th.shape[1] != 3:
        raise DimensionMismatch(f"M/G/1 parameters have 3 coordinates, got {th.shape[1]}")
    bad = (th[:, 0] <= 0) | (th[:, 1] <= th[:, 0]) | (th[:, 2] <= 0) | ~np.all(np.isfinite(th), axis=1)
    if np.any(bad):
        raise InvalidParameter(f"M/G/1 needs 0 < theta1 < theta2 and theta3 > 0, got {th[bad][0]}")


def mg1_departures(service: np.ndarray, interarrival: np.ndarray) -> np.ndarray:
    """Inter-departure times from service and inter-arrival times.

    ``y_i = u_i + max(0, sum_{j<=i} w_j - sum_{j<i} y_j)``, vectorized over
    leading rows.
    """
    service = np.asarray(service, dtype=float)
    u = np.atleast_2d(service)
    arrivals = np.cumsum(np.atleast_2d(interarrival), axis=1)
    y = np.empty_like(u)
    departed = np.zeros(u.shape[0])
    for i in range(u.shape[1]):
        y[:, i] = u[:, i] + np.maximum(0.0, arrivals[:, i] - departed)
        departed = departed + y[:, i]
    return y.reshape(service.shape)


def simulate_mg1_batch(thetas, n: int, gens, contamination=None) -> np.ndarray:
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    _check_mg1(th)
    service = th[:, 0:1] + (th[:, 1:2] - th[:, 0:1]) * np.stack([g.random(n) for g in gens])
    interarrival = np.stack([g.standard_exponential(n) for g in gens]) / th[:, 2:3]
    return _contaminate(mg1_departures(service, interarrival), gens, contamination)


def simulate_mg1(theta, n: int, rng=0) -> Dataset:
    return Dataset(simulate_mg1_batch(_values(theta), n, [_gen(rng)])[0], order_preserved=True)


# --------------------------------------------------------------------------
# stochastic volatility
# --------------------------------------------------------------------------

SV_NAMES = ("pi", "beta", "sigma_u")
SV_PRIOR = PriorSpec((Normal(0.0, 1.0), Uniform(0.0, 1.0), Uniform(0.0, 5.0)))
SV_JUMP_VARIANCE = 0.001


def _check_sv(th: np.ndarray):
    th = np.atleast_2d(th)
    if th.shape[1] != 3:
        raise DimensionMismatch(f"SV parameters have 3 coordinates, got {th.shape[1]}")
    bad = (np.abs(th[:, 1]) >= 1) | (th[:, 2] < 0) | ~np.all(np.isfinite(th), axis=1)
    if np.any(bad):
        raise InvalidParameter(f"SV needs |beta| < 1 and sigma_u >= 0, got {th[bad][0]}")


def simulate_sv_batch(thetas, n: int, gens, contamination=None, burn_in: int = 500) -> np.ndarray:
    """Returns ``y_t = exp(h_t / 2) v_t`` for the last ``n`` of ``burn_in + n`` steps.

    ``h_t = pi + beta h_{t-1} + sigma_u u_t`` starts from its stationary mean
    ``pi / (1 - beta)``.  With contamination, ``v_t`` is drawn from
    ``(1-alpha) N(0,1) + alpha N(zeta, nu)``.
    """
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    _check_sv(th)
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    contaminated = contamination is not None and contamination.alpha > 0
    total = burn_in + n
    y = np.empty((th.shape[0], n))
    for row, (g, (pi, beta, sig)) in enumerate(zip(gens, th)):
        u = g.standard_normal(total)
        v = g.standard_normal(n)
        if contaminated:
            hit = g.random(n) < contamination.alpha
            jumps = contamination.zeta + np.sqrt(contamination.nu) * g.standard_normal(n)
            v = np.where(hit, jumps, v)
        h0 = pi / (1.0 - beta)
        h, _ = signal.lfilter([1.0], [1.0, -beta], pi + sig * u, zi=[beta * h0])
        # extreme prior draws overflow to +-inf, which every distance treats as far away
        with np.errstate(over="ignore", invalid="ignore"):
            y[row] = np.exp(0.5 * h[burn_in:]) * v
    return y


def simulate_sv(theta, n: int, burn_in: int = 500, contamination=None, rng=0) -> Dataset:
    return Dataset(simulate_sv_batch(_values(theta), n, [_gen(rng)], contamination, burn_in)[0],
                   order_preserved=True)


# --------------------------------------------------------------------------
# model registry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Model:
    name: str
    names: tuple
    prior: PriorSpec
    simulate_batch: object
    order_preserved: bool = False


_MODELS = {
    "mixture": _Model("mixture", MIXTURE_NAMES, MIXTURE_PRIOR, simulate_mixture_batch),
    "gk": _Model("gk", GK_NAMES, GK_PRIOR, simulate_gk_batch),
    "mg1": _Model("mg1", MG1_NAMES, MG1_PRIOR, simulate_mg1_batch, True),
    "sv": _Model("sv", SV_NAMES, SV_PRIOR, simulate_sv_batch, True),
}

MODEL_NAMES = tuple(_MODELS)


@dataclass(frozen=True)
class ModelSpec:
    """A benchmark model configured for one inference problem.

    Parameters
    ----------
    name : {"mixture", "gk", "mg1", "sv"}
    n_obs : int
        Size of the observed dataset.
    m_sim : int
        Size of each dataset simulated during inference.
    contamination : ContaminationSpec, optional
        Applied only by :func:`generate_observed`.
    burn_in : int
        Discarded leading steps of the SV recursion.
    canonical : bool
        Mixture only: restrict the parameter space to the labelling with
        ``mu <= 0`` (see :func:`mixture_canonical`).
    """

    name: str
    n_obs: int
    m_sim: int | None = None
    contamination: Optional[ContaminationSpec] = None
    burn_in: int = 0
    canonical: bool = True

    def __post_init__(self):
        if self.name not in _MODELS:
            raise ValueError(f"unknown model {self.name!r}; expected one of {MODEL_NAMES}")
        if self.m_sim is None:
            object.__setattr__(self, "m_sim", self.n_obs)
        if self.n_obs < 1 or self.m_sim < 1:
            raise ValueError("n_obs and m_sim must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.burn_in and self.name != "sv":
            raise ValueError("burn_in only applies to the sv model")

    @property
    def prior(self) -> PriorSpec:
        """Prior in the model's prior coordinates (see :meth:`to_internal`)."""
        return _MODELS[self.name].prior

    @property
    def param_names(self) -> tuple:
        return _MODELS[self.name].names

    @property
    def dim(self) -> int:
        return len(self.param_names)

    def with_m_sim(self, m_sim: int) -> "ModelSpec":
        return ModelSpec(self.name, self.n_obs, m_sim, self.contamination, self.burn_in, self.canonical)

    def to_internal(self, prior_coords: np.ndarray) -> np.ndarray:
        th = np.array(prior_coords, dtype=float, copy=True)
        if self.name == "mg1":
            th[..., 1] = th[..., 0] + th[..., 1]
        return th

    def to_prior_coords(self, thetas: np.ndarray) -> np.ndarray:
        th = np.array(thetas, dtype=float, copy=True)
        if self.name == "mg1":
            th[..., 1] = th[..., 1] - th[..., 0]
        return th

    def sample_prior(self, gen: np.random.Generator, size: int | None = None) -> np.ndarray:
        th = self.to_internal(self.prior.sample(gen, size))
        if self.name == "mixture" and self.canonical:
            th = mixture_canonical(th)
        return th

    def log_prior(self, thetas) -> np.ndarray:
        """Prior log density of internal parameters; ``-inf`` off support.

        For the canonical mixture the density is that of the prior folded
        onto ``mu <= 0``.
        """
        th = np.asarray(thetas, dtype=float)
        lp = self.prior.logdensity(self.to_prior_coords(th))
        if self.name == "mixture" and self.canonical:
            lp = np.where(th[..., 0] <= 0, lp + np.log(2.0), -np.inf)
        return lp

    def simulate_batch(self, thetas, n: int, gens, contamination=None) -> np.ndarray:
        fn = _MODELS[self.name].simulate_batch
        if self.name == "sv":
            return fn(thetas, n, gens, contamination, self.burn_in)
        return fn(thetas, n, gens, contamination)

    def support_violation(self, thetas: np.ndarray, observed: Dataset) -> np.ndarray:
        """Rows that cannot have produced ``observed``; their distance is +inf.

        Only the M/G/1 model has such a constraint: ``theta1 <= min(y)``.
        """
        th = np.atleast_2d(thetas)
        if self.name == "mg1":
            return th[:, 0] > observed.values.min()
        return np.zeros(th.shape[0], dtype=bool)

    def parameter_vector(self, values) -> ParameterVector:
        return ParameterVector(values, self.param_names)


def model_simulate(spec: ModelSpec, theta, rng) -> Dataset:
    """Simulate ``spec.m_sim`` points from the uncontaminated model."""
    x = spec.simulate_batch(np.atleast_2d(_values(theta)), spec.m_sim, [_gen(rng)], None)[0]
    return Dataset(x, order_preserved=_MODELS[spec.name].order_preserved)


def generate_observed(spec: ModelSpec, theta, rng) -> Dataset:
    """Simulate ``spec.n_obs`` observed points, contaminated if configured.

    An integer seed or an :class:`RngStream` is mapped to the stream
    reserved for observed data.
    """
    if isinstance(rng, np.random.Generator):
        gen = rng
    else:
        gen = as_stream(rng).at(particle=OBSERVED_ID).generator()
    x = spec.simulate_batch(np.atleast_2d(_values(theta)), spec.n_obs, [gen], spec.contamination)[0]
    return Dataset(x, order_preserved=_MODELS[spec.name].order_preserved)
