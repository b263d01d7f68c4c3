import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdabc.distances import (
    HELLINGER_MAX,
    DistanceContext,
    DistanceKind,
    cvm_distance,
    distance,
    hellinger_distance,
    hellinger_from_densities,
    wasserstein_1d,
)
from mdabc.exceptions import LengthMismatch
from mdabc.measures import IntegrationGrid, normal_pdf
from mdabc.models import simulate_mixture

GAUSS_SHIFT_1 = np.sqrt(2 - 2 * np.exp(-1 / 8))


def brute_wasserstein(y, z, p):
    return min(np.mean(np.abs(np.asarray(y) - np.asarray(z)[list(s)]) ** p) for s in
               itertools.permutations(range(len(z)))) ** (1 / p)


def test_distance_kind_parsing():
    assert DistanceKind("WABC") == DistanceKind.wasserstein(1.0)
    assert DistanceKind("h").name == "hellinger"
    with pytest.raises(ValueError):
        DistanceKind("energy")
    with pytest.raises(ValueError):
        DistanceKind.wasserstein(0.5)


def test_wasserstein_examples():
    assert wasserstein_1d([0.0, 1.0], [1.0, 2.0]) == 1.0
    y = [0.3, -1.0, 2.5]
    assert wasserstein_1d(y, y) == 0.0
    with pytest.raises(LengthMismatch):
        wasserstein_1d([0.0, 1.0], [1.0])


def test_wasserstein_quantile_coupling():
    # each observed order statistic takes the ceil(i*m/n)-th simulated one
    y = [0.0, 1.0]
    z = [0.0, 0.5, 1.0, 1.5]
    assert wasserstein_1d(y, z, quantile_coupling=True) == pytest.approx(0.5 * (0.5 + 0.5))


def test_wasserstein_brute_force_exhaustive_small():
    rng = np.random.default_rng(0)
    for n in range(1, 6):
        for _ in range(20):
            y = rng.integers(0, 6, n).astype(float)
            z = rng.integers(0, 6, n).astype(float)
            for p in (1.0, 2.0, 3.0):
                assert wasserstein_1d(y, z, p) == pytest.approx(brute_wasserstein(y, z, p), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 1.5, 2.0]))
def test_wasserstein_symmetric(n, seed, p):
    rng = np.random.default_rng(seed)
    y, z = rng.normal(size=n), rng.normal(size=n)
    assert wasserstein_1d(y, z, p) == wasserstein_1d(z, y, p)


def test_wasserstein_triangle_inequality():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = rng.integers(1, 21)
        a, b, c = (rng.normal(size=n) * rng.uniform(0.1, 3) + rng.normal() for _ in range(3))
        for p in (1.0, 2.0):
            assert wasserstein_1d(a, c, p) <= wasserstein_1d(a, b, p) + wasserstein_1d(b, c, p) + 1e-12


def test_cvm_examples():
    ctx = DistanceContext.build("cvm", [0.0])
    assert cvm_distance(ctx, [1.0]) == 1.0
    y = np.array([0.2, -1.0, 3.0, 0.7])
    assert cvm_distance(DistanceContext.build("cvm", y), y) == 0.0


def test_cvm_matches_loop_definition(rng):
    y = rng.normal(size=40)
    z = np.round(rng.normal(size=70), 1)
    fy = np.array([np.mean(y <= v) for v in y])
    gz = np.array([np.mean(z <= v) for v in y])
    ctx = DistanceContext.build("cvm", y)
    assert cvm_distance(ctx, z) == pytest.approx(np.mean((fy - gz) ** 2), rel=1e-14)


def test_cvm_ties_between_observed_and_simulated():
    ctx = DistanceContext.build("cvm", [0.0, 1.0])
    # right-continuous ECDFs: a simulated value equal to y_i counts at y_i
    assert cvm_distance(ctx, [0.0, 1.0]) == 0.0
    assert cvm_distance(ctx, [1.0, 1.0]) == pytest.approx(0.5 * 0.5 ** 2)


def test_cvm_is_asymmetric():
    y, z = np.array([0.0, 1.0, 2.0]), np.array([0.0, 10.0, 11.0])
    a = cvm_distance(DistanceContext.build("cvm", y), z)
    b = cvm_distance(DistanceContext.build("cvm", z), y)
    assert a != b


def test_cvm_separates_location_shift():
    wins = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        y = rng.normal(size=100)
        ctx = DistanceContext.build("cvm", y)
        wins += cvm_distance(ctx, rng.normal(5, 1, 100)) > cvm_distance(ctx, rng.normal(size=100))
    assert wins >= 95


def test_hellinger_identity_and_bound(rng):
    y = rng.normal(size=300)
    ctx = DistanceContext.build("hellinger", y)
    assert hellinger_distance(ctx, y) <= 1e-12
    far = DistanceContext.build("hellinger", rng.uniform(size=50), bandwidth=0.01)
    d = hellinger_distance(far, 1e6 + rng.uniform(size=50))
    assert abs(d - np.sqrt(2)) < 1e-2
    assert d <= HELLINGER_MAX + 1e-6


def test_hellinger_closed_form_gaussians():
    g = IntegrationGrid(-12.0, 13.0, 2049)
    w = g.trapezoid_weights()
    d = hellinger_from_densities(normal_pdf(g.points), normal_pdf(g.points, 1.0), w)
    assert abs(d - GAUSS_SHIFT_1) < 1e-2


def test_hellinger_through_kde_large_samples():
    rng = np.random.default_rng(7)
    y, z = rng.normal(size=10_000), rng.normal(1.0, 1.0, 10_000)
    for method in ("direct", "binned"):
        ctx = DistanceContext.build("hellinger", y, kde_method=method)
        assert abs(hellinger_distance(ctx, z) - GAUSS_SHIFT_1) < 5e-2


def test_hellinger_binned_close_to_direct(rng):
    y = rng.normal(size=100)
    z = rng.normal(0.3, 1.2, size=200)
    a = hellinger_distance(DistanceContext.build("hellinger", y), z)
    b = hellinger_distance(DistanceContext.build("hellinger", y, kde_method="binned"), z)
    assert abs(a - b) < 1e-3


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-20, 20), st.floats(0.01, 20))
def test_hellinger_always_in_range(seed, shift, scale):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=30)
    ctx = DistanceContext.build("hellinger", y, kde_method="binned")
    d = ctx.batch(shift + scale * rng.standard_normal((3, 40)))
    assert np.all((d >= 0) & (d <= HELLINGER_MAX + 1e-6))


def test_batch_matches_single_calls(rng):
    y = rng.normal(size=50)
    z = rng.normal(size=(4, 50))
    for kind in ("cvm", "wasserstein", "hellinger"):
        ctx = DistanceContext.build(kind, y)
        single = [distance(ctx, row) for row in z]
        assert np.allclose(ctx.batch(z), single, rtol=1e-12, atol=1e-15)


def test_dispatch_identity():
    y = simulate_mixture((-2, 0.5, 1, 1), 100, rng=1)
    z = simulate_mixture((-1.5, 0.5, 1, 1), 100, rng=2)
    assert distance(DistanceContext.build("cvm", y), z) == cvm_distance(DistanceContext.build("cvm", y), z)
    h = DistanceContext.build("hellinger", y)
    assert distance(h, z) == hellinger_distance(h, z)
    assert distance(DistanceContext.build("wasserstein", y), y) == 0.0


def test_mean_distance_grows_with_offset():
    for kind in ("cvm", "wasserstein", "hellinger"):
        means = []
        for offset in (0.0, 1.0, 2.0, 5.0):
            vals = []
            for seed in range(100):
                rng = np.random.default_rng(seed)
                y = rng.normal(size=50)
                ctx = DistanceContext.build(kind, y, kde_method="binned")
                vals.append(distance(ctx, offset + rng.normal(size=50)))
            means.append(np.mean(vals))
        assert np.all(np.diff(means) >= 0), (kind, means)


def test_hellinger_context_requires_smoothing_state():
    y = DistanceContext.build("cvm", [0.0, 1.0])
    with pytest.raises(ValueError):
        DistanceContext(DistanceKind.hellinger(), y.observed_measure)
