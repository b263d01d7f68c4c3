"""Rejection and adaptive sequential Monte Carlo ABC samplers.

Both samplers target the ABC posterior

    pi_eps(theta | y)  propto  prior(theta) * P(D(y, z) <= eps),  z ~ model(theta)

for one of the distances in :mod:`mdabc.distances`.  The SMC sampler
shrinks ``eps`` adaptively: each stage sets the new tolerance to a quantile
of the current distances, drops particles above it, resamples when the
effective sample size falls too low and rejuvenates the cloud with
Metropolis-Hastings random-walk moves that keep ``prior x 1{d <= eps}``
invariant.

Random numbers come from :class:`mdabc.rng.RngStream` addresses: particle
``i`` at stage ``s`` draws from its own stream, so runs are bitwise
reproducible for any ``n_threads``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import numpy as np

from .distances import DistanceContext
from .exceptions import DegenerateCloud, NoAcceptances
from .measures import as_dataset
from .models import ModelSpec, ParameterVector
from .rng import CONTROL_ID, RngStream, as_stream, generators_for, particle_generators

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmcConfig:
    """Knobs of :func:`smc_abc`.

    ``move_steps`` is the number of MH sweeps per stage.  With
    ``adapt_move_steps`` it becomes a lower bound and the sweep count is
    raised so that each particle moves at least once with probability
    ``move_prob_target`` given the previous stage's acceptance rate
    (capped at ``max_move_steps``).
    """

    n_particles: int = 1024
    sim_budget: int = 200_000
    alpha_quantile: float = 0.5
    ess_threshold_fraction: float = 0.5
    move_steps: int = 1
    rw_scale: float = 2.0
    adapt_move_steps: bool = False
    move_prob_target: float = 0.99
    max_move_steps: int = 50
    stagnation_tol: float = 1e-4
    stagnation_stages: int = 3
    n_threads: int = 1

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("n_particles must be at least 2")
        if self.sim_budget < self.n_particles:
            raise ValueError("sim_budget must be at least n_particles")
        if not 0.0 < self.alpha_quantile < 1.0:
            raise ValueError("alpha_quantile must lie in (0, 1)")
        if not 0.0 <= self.ess_threshold_fraction <= 1.0:
            raise ValueError("ess_threshold_fraction must lie in [0, 1]")
        if self.move_steps < 1 or self.max_move_steps < self.move_steps:
            raise ValueError("need 1 <= move_steps <= max_move_steps")
        if not self.rw_scale > 0:
            raise ValueError("rw_scale must be positive")
        if not 0.0 < self.move_prob_target < 1.0:
            raise ValueError("move_prob_target must lie in (0, 1)")
        if self.n_threads < 1:
            raise ValueError("n_threads must be at least 1")

    def replace(self, **changes) -> "SmcConfig":
        return SmcConfig(**{**asdict(self), **changes})


@dataclass(frozen=True)
class Particle:
    theta: ParameterVector
    distance: float
    log_weight: float


@dataclass(frozen=True, eq=False)
class ParticleCloud:
    """Weighted particle approximation of an ABC posterior.

    Arrays are read-only; zero-weight particles may be present and are
    ignored by the summaries.
    """

    thetas: np.ndarray
    distances: np.ndarray
    log_weights: np.ndarray
    names: tuple
    epsilon: float
    total_simulations: int
    epsilon_trace: tuple = ()
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("thetas", "distances", "log_weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.thetas.ndim != 2 or self.thetas.shape[0] != self.distances.size:
            raise ValueError("thetas must be (N, d) with one distance per row")
        if self.log_weights.size != self.distances.size:
            raise ValueError("one log weight per particle is required")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "epsilon_trace", tuple(float(e) for e in self.epsilon_trace))

    def __len__(self):
        return self.distances.size

    @property
    def weights(self) -> np.ndarray:
        return normalize_log_weights(self.log_weights)

    @property
    def ess(self) -> float:
        return effective_sample_size(self)

    @property
    def particles(self) -> list[Particle]:
        return [Particle(ParameterVector(t, self.names), float(d), float(lw))
                for t, d, lw in zip(self.thetas, self.distances, self.log_weights)]

    def alive(self) -> "ParticleCloud":
        """Copy without the zero-weight particles."""
        keep = np.isfinite(self.log_weights)
        return ParticleCloud(self.thetas[keep], self.distances[keep], self.log_weights[keep], self.names,
                             self.epsilon, self.total_simulations, self.epsilon_trace, dict(self.info))


def normalize_log_weights(log_weights) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    top = np.max(lw)
    if not np.isfinite(top):
        raise ValueError("all weights are zero")
    w = np.exp(lw - top)
    return w / w.sum()


def effective_sample_size(cloud) -> float:
    """``1 / sum(w**2)`` of the normalized weights (a cloud or a weight vector)."""
    w = cloud.weights if isinstance(cloud, ParticleCloud) else np.asarray(cloud, dtype=float)
    w = w / w.sum()
    return float(1.0 / np.dot(w, w))


def systematic_indices(weights, n: int, u: float) -> np.ndarray:
    """Ancestor indices of systematic resampling with offset ``u`` in [0, 1)."""
    w = np.asarray(weights, dtype=float)
    cum = np.cumsum(w / w.sum())
    cum[-1] = 1.0
    positions = (u + np.arange(n)) / n
    return np.minimum(np.searchsorted(cum, positions, side="right"), w.size - 1)


def systematic_resample(cloud: ParticleCloud, rng, n: int | None = None) -> ParticleCloud:
    """Resample ``n`` (default ``len(cloud)``) particles; weights reset to equal."""
    gen = rng if isinstance(rng, np.random.Generator) else as_stream(rng).generator()
    n = len(cloud) if n is None else n
    idx = systematic_indices(cloud.weights, n, gen.random())
    return ParticleCloud(cloud.thetas[idx], cloud.distances[idx], np.zeros(n), cloud.names,
                         cloud.epsilon, cloud.total_simulations, cloud.epsilon_trace, dict(cloud.info))


# --------------------------------------------------------------------------
# simulation + distance evaluation
# --------------------------------------------------------------------------

_BLOCK = 256


def _evaluate(spec: ModelSpec, ctx: DistanceContext, thetas: np.ndarray, gens, n_threads: int) -> np.ndarray:
    """Simulate one dataset per row and return its distance to the observed data.

    Rows are processed in fixed blocks whatever ``n_threads`` is, because
    BLAS may round a row differently depending on the shape of the batch
    it sits in.
    """
    n = thetas.shape[0]
    if n == 0:
        return np.empty(0)

    def work(lo):
        hi = min(lo + _BLOCK, n)
        z = spec.simulate_batch(thetas[lo:hi], spec.m_sim, gens[lo:hi], None)
        return ctx.batch(z)

    starts = range(0, n, _BLOCK)
    if n_threads == 1 or len(starts) == 1:
        return np.concatenate([work(lo) for lo in starts])
    with ThreadPoolExecutor(min(n_threads, len(starts))) as pool:
        return np.concatenate(list(pool.map(work, starts)))


def _initial_draws(spec, ctx, observed, base: RngStream, n: int, start: int, n_threads: int):
    gens = particle_generators(base, n, stage=0, start=start)
    thetas = np.array([spec.sample_prior(g) for g in gens])
    dist = np.full(n, np.inf)
    ok = ~spec.support_violation(thetas, observed)
    idx = np.flatnonzero(ok)
    dist[idx] = _evaluate(spec, ctx, thetas[idx], [gens[i] for i in idx], n_threads)
    return thetas, dist, idx.size


def _tolerance_quantile(distances: np.ndarray, q: float) -> float:
    return float(np.quantile(distances, q, method="inverted_cdf"))


def rejection_abc(spec: ModelSpec, ctx: DistanceContext, observed, *, epsilon: float | None = None,
                  accept_fraction: float | None = None, n_draws: int = 10_000, rng=0,
                  n_threads: int = 1, chunk: int = 4096) -> ParticleCloud:
    """Prior-predictive rejection sampler.

    Exactly one of ``epsilon`` (fixed tolerance) or ``accept_fraction``
    (tolerance set to that quantile of the ``n_draws`` distances) must be
    given.  Kept draws get equal weights.

    Raises
    ------
    NoAcceptances
        If a fixed ``epsilon`` keeps nothing.
    """
    if (epsilon is None) == (accept_fraction is None):
        raise ValueError("give exactly one of epsilon or accept_fraction")
    if accept_fraction is not None and not 0.0 < accept_fraction <= 1.0:
        raise ValueError("accept_fraction must lie in (0, 1]")
    observed = as_dataset(observed)
    base = as_stream(rng)
    thetas, dists, sims = [], [], 0
    for start in range(0, n_draws, chunk):
        k = min(chunk, n_draws - start)
        th, d, s = _initial_draws(spec, ctx, observed, base, k, start, n_threads)
        thetas.append(th)
        dists.append(d)
        sims += s
    thetas = np.concatenate(thetas)
    dists = np.concatenate(dists)
    if accept_fraction is not None:
        epsilon = _tolerance_quantile(dists, accept_fraction)
    keep = dists <= epsilon
    if not keep.any():
        raise NoAcceptances(f"no draw out of {n_draws} has distance <= {epsilon:g}")
    return ParticleCloud(thetas[keep], dists[keep], np.zeros(keep.sum()), spec.param_names, epsilon, sims,
                         (epsilon,), {"n_draws": n_draws, "acceptance_rate": keep.mean()})


def _weighted_cov(thetas: np.ndarray, w: np.ndarray) -> np.ndarray:
    mean = w @ thetas
    c = thetas - mean
    return (c * w[:, None]).T @ c


def _proposal_factor(thetas, w, scale) -> np.ndarray:
    cov = scale * _weighted_cov(thetas, w)
    ridge = 1e-12 * max(1.0, float(np.max(np.diag(cov))))
    return np.linalg.cholesky(cov + ridge * np.eye(cov.shape[0]))


def _move_count(acc_rate: float, cfg: SmcConfig) -> int:
    if not cfg.adapt_move_steps:
        return cfg.move_steps
    if acc_rate <= 0.0:
        r = cfg.max_move_steps
    elif acc_rate >= 1.0:
        r = cfg.move_steps
    else:
        r = math.ceil(math.log(1.0 - cfg.move_prob_target) / math.log(1.0 - acc_rate))
    return int(min(max(r, cfg.move_steps), cfg.max_move_steps))


def mh_sweep(spec, ctx, observed, thetas, dists, log_prior, chol, epsilon, base: RngStream, stage: int,
             movers: np.ndarray, n_threads: int = 1):
    """One Metropolis-Hastings random-walk sweep over the particles in ``movers``.

    Targets ``prior x 1{d <= epsilon}``; with ``epsilon = inf`` the target is
    the prior alone.  The prior ratio is tested before simulating, so
    proposals rejected on that ground (including all out-of-support ones)
    cost no simulation.  Arrays are updated in place.

    Returns ``(n_accepted, n_simulated)``.
    """
    d = thetas.shape[1]
    gens = generators_for(base, movers.tolist(), stage)
    steps = np.empty((movers.size, d))
    log_u = np.empty(movers.size)
    for j, g in enumerate(gens):
        steps[j] = g.standard_normal(d)
        log_u[j] = np.log(g.random())
    proposals = thetas[movers] + steps @ chol.T
    lp_new = spec.log_prior(proposals)
    pass_prior = np.isfinite(lp_new) & (log_u < lp_new - log_prior[movers])
    pass_prior &= ~spec.support_violation(proposals, observed)
    sim_idx = np.flatnonzero(pass_prior)
    new_d = np.full(movers.size, np.inf)
    new_d[sim_idx] = _evaluate(spec, ctx, proposals[sim_idx], [gens[j] for j in sim_idx], n_threads)
    accept = pass_prior & (new_d <= epsilon)
    targets = movers[accept]
    thetas[targets] = proposals[accept]
    dists[targets] = new_d[accept]
    log_prior[targets] = lp_new[accept]
    return int(accept.sum()), int(sim_idx.size)


def smc_abc(spec: ModelSpec, ctx: DistanceContext, observed, cfg: SmcConfig = SmcConfig(), rng=0) -> ParticleCloud:
    """Adaptive-tolerance SMC-ABC with a fixed simulation budget.

    Stage loop: pick ``eps`` as the ``alpha_quantile`` of the live
    distances (never increasing), zero the weights above it, resample
    systematically if ``ESS < ess_threshold_fraction * N``, then apply MH
    sweeps with a Gaussian random walk whose covariance is ``rw_scale``
    times the weighted particle covariance.  Stops when the budget cannot
    pay for another sweep or when ``eps`` has stagnated.

    Raises
    ------
    DegenerateCloud
        If every initial particle has infinite distance.
    """
    observed = as_dataset(observed)
    base = as_stream(rng)
    n = cfg.n_particles
    thetas, dists, sims = _initial_draws(spec, ctx, observed, base, n, 0, cfg.n_threads)
    if not np.isfinite(dists).any():
        raise DegenerateCloud("all initial particles have infinite distance")
    log_prior = spec.log_prior(thetas)
    log_w = np.zeros(n)
    eps = np.inf
    trace, acc_trace, steps_trace, resample_stages = [], [], [], []
    stage = 1
    stagnant = 0
    n_moves = cfg.move_steps
    while True:
        live = np.isfinite(log_w) & np.isfinite(dists)
        new_eps = min(eps, _tolerance_quantile(dists[live], cfg.alpha_quantile))
        if np.isfinite(eps) and eps > 0 and (eps - new_eps) / eps < cfg.stagnation_tol:
            stagnant += 1
        else:
            stagnant = 0
        eps = new_eps
        trace.append(eps)
        log_w = np.where(np.isfinite(dists) & (dists <= eps), log_w, -np.inf)
        if stagnant >= cfg.stagnation_stages:
            log.debug("tolerance stagnated at %g", eps)
            break
        w = normalize_log_weights(log_w)
        if 1.0 / np.dot(w, w) < cfg.ess_threshold_fraction * n:
            gen = base.at(particle=CONTROL_ID, stage=stage).generator()
            idx = systematic_indices(w, n, gen.random())
            thetas, dists, log_prior = thetas[idx], dists[idx], log_prior[idx]
            log_w = np.zeros(n)
            w = np.full(n, 1.0 / n)
            resample_stages.append(stage)
        movers = np.flatnonzero(np.isfinite(log_w))
        if sims + movers.size > cfg.sim_budget:
            break
        chol = _proposal_factor(thetas[movers], w[movers], cfg.rw_scale)
        accepted = proposed = 0
        steps_done = 0
        for _ in range(n_moves):
            if sims + movers.size > cfg.sim_budget:
                break
            a, s = mh_sweep(spec, ctx, observed, thetas, dists, log_prior, chol, eps, base, stage,
                            movers, cfg.n_threads)
            accepted += a
            proposed += movers.size
            sims += s
            stage += 1
            steps_done += 1
        rate = accepted / proposed if proposed else 0.0
        acc_trace.append(rate)
        steps_trace.append(steps_done)
        n_moves = _move_count(rate, cfg)
        if steps_done == 0:
            break
    info = {
        "stages": len(trace),
        "acceptance_rates": acc_trace,
        "move_steps": steps_trace,
        "resample_stages": resample_stages,
        "config": asdict(cfg),
        "master_seed": base.master_seed,
        "replication": base.replication,
        "lane": base.lane,
    }
    return ParticleCloud(thetas, dists, log_w, spec.param_names, eps, sims, tuple(trace), info)
