"""Unit tests for stable sampling, tail constants and the LePage series."""

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from heavytail.errors import ParameterError
from heavytail.stable import (
    LevyTailSpec,
    SeriesBudget,
    lepage_sas_integral,
    levy_tail_inverse,
    pareto_cutoff_spec,
    pure_stable_spec,
    sample_sas,
    sas_abs_moment,
    tail_constant,
)


def _empirical_cos_cf(x, thetas):
    return np.cos(np.outer(np.asarray(thetas), x)).mean(axis=1)


def test_sas_characteristic_function():
    rng = np.random.default_rng(2)
    thetas = np.array([0.5, 1.0, 2.0])
    for alpha in (0.8, 1.5):
        x = sample_sas(alpha, 1.0, rng, size=200_000)
        cf = _empirical_cos_cf(x, thetas)
        assert np.max(np.abs(cf - np.exp(-np.abs(thetas) ** alpha))) < 5e-3
    # scale enters as scale**alpha in the exponent
    x = sample_sas(1.5, 2.0, rng, size=200_000)
    cf = _empirical_cos_cf(x, thetas)
    assert np.max(np.abs(cf - np.exp(-(2.0 ** 1.5) * np.abs(thetas) ** 1.5))) < 5e-3


def test_sas_gaussian_endpoint():
    rng = np.random.default_rng(4)
    x = sample_sas(2.0, 1.5, rng, size=200_000)
    # alpha = 2 has CF exp(-scale**2 theta**2), i.e. variance 2 * scale**2
    assert abs(x.var() / (2.0 * 1.5**2) - 1.0) < 0.02
    assert abs(x.mean()) < 0.02


def test_sas_abs_moment_against_mc():
    rng = np.random.default_rng(6)
    gam, p = 1.3, 0.7
    x = sample_sas(gam, 1.0, rng, size=400_000)
    est = (np.abs(x) ** p).mean()
    assert abs(est / sas_abs_moment(gam, p) - 1.0) < 0.01
    # Gaussian endpoint is the folded-normal moment of a standard normal
    assert np.isclose(
        sas_abs_moment(2.0, 1.0), np.sqrt(2.0 / np.pi), rtol=1e-12
    )
    with pytest.raises(ParameterError):
        sas_abs_moment(1.3, 1.5)


def test_tail_constant_continuity_at_one():
    c1 = tail_constant(1.0)
    assert np.isclose(c1, 2.0 / np.pi)
    assert abs(tail_constant(1.0 + 1e-4) - c1) < 1e-3
    assert abs(tail_constant(1.0 - 1e-4) - c1) < 1e-3
    # closed form away from 1
    a = 1.5
    assert np.isclose(
        tail_constant(a), (1 - a) / (gamma_fn(2 - a) * np.cos(np.pi * a / 2))
    )


def test_levy_tail_inverse_roundtrip():
    for spec in (pure_stable_spec(1.2), pareto_cutoff_spec(0.7)):
        y = np.array([0.01, 0.5, 3.0])
        x = levy_tail_inverse(spec, y)
        # generalized inverse: tail(x) <= y, with equality off the cutoff
        assert np.all(spec.tail(np.maximum(x, 1e-300)) <= y + 1e-9)
    # the cutoff spec maps levels above the total mass to zero
    assert levy_tail_inverse(pareto_cutoff_spec(0.7), 2.0) == 0.0


def test_levy_tail_inverse_bisection_path():
    base = pure_stable_spec(1.2)
    spec = LevyTailSpec(
        alpha=1.2, tail=base.tail, inverse=None, p0=1.2, kind="pure_stable"
    )
    y = np.array([0.3, 1.7])
    assert np.allclose(levy_tail_inverse(spec, y), y ** (-1.0 / 1.2), rtol=1e-8)


def test_user_defined_spec_spot_checks():
    with pytest.raises(ParameterError):
        LevyTailSpec(alpha=1.0, tail=lambda x: np.asarray(x), inverse=None, p0=1.0)
    # a valid user tail passes and round-trips through the generic inverse
    spec = LevyTailSpec(
        alpha=1.0,
        tail=lambda x: np.minimum(1.0, 1.0 / np.asarray(x, dtype=float)),
        inverse=None,
        p0=0.5,
    )
    assert np.isclose(levy_tail_inverse(spec, 0.25), 4.0, rtol=1e-8)


def test_spec_serialization():
    spec = pure_stable_spec(1.4)
    again = LevyTailSpec.from_config(spec.to_config())
    assert again.kind == "pure_stable" and again.alpha == 1.4
    user = LevyTailSpec(
        alpha=1.0,
        tail=lambda x: np.minimum(1.0, 1.0 / np.asarray(x, dtype=float)),
        inverse=None,
        p0=0.5,
    )
    with pytest.raises(ParameterError):
        user.to_config()


def test_series_budget_validation():
    rng = np.random.default_rng(8)
    b = SeriesBudget.sample(16, rng)
    assert b.arrivals.shape == (16,) and np.all(np.diff(b.arrivals) > 0)
    with pytest.raises(ParameterError):
        SeriesBudget(J=3, arrivals=[1.0, 0.5, 2.0], signs=[1, 1, 1])
    with pytest.raises(ParameterError):
        SeriesBudget(J=0, arrivals=[], signs=[])


def test_lepage_integral_characteristic_function():
    # with integrand 1 and unit mass the series converges to a standard SaS law
    rng = np.random.default_rng(9)
    alpha = 0.8  # the series tail decays like J**(1 - 2/alpha), fast here
    vals = np.array(
        [
            lepage_sas_integral(
                lambda m: np.ones_like(m),
                lambda j: np.zeros(j),
                1.0,
                alpha,
                SeriesBudget.sample(400, rng),
            )
            for _ in range(4000)
        ]
    )
    thetas = np.array([0.5, 1.0, 2.0])
    cf = _empirical_cos_cf(vals, thetas)
    assert np.max(np.abs(cf - np.exp(-np.abs(thetas) ** alpha))) < 0.03
