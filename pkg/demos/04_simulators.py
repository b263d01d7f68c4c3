"""The four simulators: mixture, g-and-k, M/G/1 queue, stochastic volatility.

Writes nothing; prints a few properties that follow from each model's definition.
"""
import numpy as np

from mdabc import ModelSpec, RngStream, generate_observed
from mdabc.models import gk_quantile

# %% g-and-k: the median equals the location a
gk = generate_observed(ModelSpec("gk", 20_000), (3.0, 1.0, 2.0, 0.5), RngStream(1))
print(f"g-and-k median {np.median(gk.values):.3f} (a = 3), 90% quantile {np.quantile(gk.values, 0.9):.3f} "
      f"vs exact {gk_quantile((3.0, 1.0, 2.0, 0.5), 0.9):.3f}")

# %% M/G/1: every inter-departure time is at least the minimum service time theta1
q = generate_observed(ModelSpec("mg1", 5000), (4.0, 7.0, 0.15), RngStream(2))
print(f"M/G/1 min inter-departure {q.values.min():.3f} (theta1 = 4), mean {q.values.mean():.3f}")

# %% SV: returns are uncorrelated but their squares are not
sv = generate_observed(ModelSpec("sv", 5000, burn_in=500), (-0.736, 0.9, 0.363), RngStream(3))
r = sv.values
lag1 = lambda x: np.corrcoef(x[:-1], x[1:])[0, 1]  # noqa: E731
print(f"SV lag-1 autocorrelation: returns {lag1(r):.3f}, squared returns {lag1(r * r):.3f}")

# %% The mixture with its label fixed so that mu <= 0
mix = ModelSpec("mixture", 10)
print("canonical prior draws of mu:", np.round(mix.sample_prior(np.random.default_rng(0), 5)[:, 0], 3))
