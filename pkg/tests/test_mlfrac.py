"""Unit tests for the inverse-subordinator (Mittag-Leffler) machinery."""

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma as gamma_fn

from heavytail.errors import ParameterError
from heavytail.mlfrac import (
    invert_subordinator_path,
    ml_ensemble,
    ml_marginal_sample,
    ml_moment,
    ml_values,
    overshoot_density,
    sample_overshoot,
    sample_positive_stable,
    sample_stable_subordinator,
)
from heavytail.stats import ks_statistic, ks_two_sample


def test_positive_stable_laplace_transform():
    # E exp(-theta * S) = exp(-theta**beta) pins the Kanter sampler exactly
    rng = np.random.default_rng(7)
    beta = 0.6
    s = sample_positive_stable(beta, rng, size=200_000)
    for theta in (0.5, 1.0, 2.0):
        est = np.exp(-theta * s).mean()
        assert abs(est - np.exp(-(theta**beta))) < 3e-3


def test_positive_stable_rejects_boundary_indices():
    rng = np.random.default_rng(0)
    for beta in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ParameterError):
            sample_positive_stable(beta, rng)


def test_ml_moment_closed_form():
    # q = 1 at t = 1 is the classic 1 / Gamma(1 + beta)
    assert np.isclose(ml_moment(0.5, 1.0, 1.0), 1.0 / gamma_fn(1.5))
    # scaling in t follows t**(q*beta)
    assert np.isclose(ml_moment(0.4, 2.0, 3.0), 3.0**0.8 * ml_moment(0.4, 2.0, 1.0))


def test_marginal_sampler_matches_moments():
    rng = np.random.default_rng(11)
    beta, t = 0.5, 2.0
    m = ml_marginal_sample(beta, t, rng, size=200_000)
    for q in (1.0, 2.0):
        est = (m**q).mean()
        target = ml_moment(beta, q, t)
        assert abs(est / target - 1.0) < 0.01


def test_ml_values_joint_consistency():
    # joint rows are nondecreasing and every column matches the marginal mean
    rng = np.random.default_rng(3)
    times = np.array([0.5, 1.0, 2.0])
    m = ml_values(0.5, np.tile(times, (20_000, 1)), rng)
    assert np.all(np.diff(m, axis=1) >= 0)
    for j, t in enumerate(times):
        assert abs(m[:, j].mean() / ml_moment(0.5, 1.0, t) - 1.0) < 0.03


def test_boundary_betas():
    rng = np.random.default_rng(5)
    t = np.array([0.0, 1.0, 2.0])
    m1 = ml_ensemble(1.0, t, 100, rng)
    assert np.allclose(m1, np.broadcast_to(t, (100, 3)))
    m0 = ml_ensemble(0.0, t, 50_000, rng)
    assert np.all(m0[:, 0] == 0.0)
    # for t > 0 the level is a single exponential, constant across times
    assert np.allclose(m0[:, 1], m0[:, 2])
    assert abs(m0[:, 1].mean() - 1.0) < 0.02


def test_subordinator_inversion_roundtrip():
    rng = np.random.default_rng(13)
    path = sample_stable_subordinator(0.5, np.linspace(0, 5, 2001), rng)
    ts = np.array([0.1, 0.5, path.values[-1] * 0.9])
    u = invert_subordinator_path(path, ts)
    # by definition S(u) >= t at the returned grid point
    idx = np.searchsorted(path.grid, u)
    assert np.all(path.values[idx] >= ts - 1e-12)
    with pytest.raises(ParameterError):
        invert_subordinator_path(path, [path.values[-1] * 10])


def test_overshoot_density_normalizes():
    for beta in (0.3, 0.5, 0.8):
        total, _ = integrate.quad(
            lambda x: overshoot_density(beta, x), 0, np.inf, limit=400
        )
        assert abs(total - 1.0) < 1e-6


def test_overshoot_sampler_matches_density():
    # delta_r / r follows the generalized arcsine law, whose CDF is a
    # regularized incomplete beta after the substitution u = x / (1 + x)
    from scipy.special import betainc

    rng = np.random.default_rng(17)
    beta, r = 0.5, 2.0
    d = sample_overshoot(beta, r, rng, size=50_000)
    u = d / r / (1.0 + d / r)
    stat = ks_statistic(u, lambda x: betainc(1.0 - beta, beta, x))
    assert stat < 0.01


def test_restart_identity_marginal():
    # M(t + r) - M(r) has the law of M((t - delta_r)_+) for the overshoot delta_r
    rng = np.random.default_rng(23)
    beta, r, t = 0.5, 1.0, 1.0
    n = 20_000
    joint = ml_values(beta, np.tile([r, r + t], (n, 1)), rng)
    lhs = joint[:, 1] - joint[:, 0]
    delta = sample_overshoot(beta, r, rng, size=n)
    shifted = np.clip(t - delta, 0.0, None)
    rhs = np.zeros(n)
    pos = shifted > 0
    rhs[pos] = ml_marginal_sample(beta, 1.0, rng, size=int(pos.sum())) * shifted[
        pos
    ] ** beta
    stat, _ = ks_two_sample(lhs, rhs)
    assert stat < 0.03
