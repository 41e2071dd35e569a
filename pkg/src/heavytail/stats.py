"""Statistical helpers shared by the experiment runners and tests."""

from __future__ import annotations

import numpy as np
from scipy import stats

from .errors import ParameterError


def ks_statistic(sample, cdf) -> float:
    """One-sample KS distance against a callable CDF."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ParameterError("empty sample")
    c = np.asarray(cdf(x), dtype=float)
    upper = np.max(np.arange(1, n + 1) / n - c)
    lower = np.max(c - np.arange(0, n) / n)
    return float(max(upper, lower))


def ks_two_sample(a, b):
    """Two-sample KS statistic and p-value."""
    res = stats.ks_2samp(a, b)
    return float(res.statistic), float(res.pvalue)


def empirical_cf(sample, thetas):
    """Real part of the empirical CF with per-theta standard errors.

    For symmetric laws the imaginary part carries no signal, so only
    cos(theta * X) is averaged.
    """
    x = np.asarray(sample, dtype=float)
    t = np.asarray(thetas, dtype=float)
    vals = np.cos(np.outer(t, x))
    cf = vals.mean(axis=1)
    stderr = vals.std(axis=1, ddof=1) / np.sqrt(x.size)
    return cf, stderr


def cf_distance(sample_a, sample_b, thetas) -> float:
    """max_theta |cf_a - cf_b| over the grid."""
    cf_a, _ = empirical_cf(sample_a, thetas)
    cf_b, _ = empirical_cf(sample_b, thetas)
    return float(np.max(np.abs(cf_a - cf_b)))


def loglog_slope(x, y):
    """Least-squares slope of log y against log x; returns (slope, intercept)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ParameterError("need at least two points for a slope")
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def permutation_iid_test(increments, n_perm: int, rng) -> float:
    """Permutation p-value for exchangeability of a sequence of increments.

    The statistic is the lag-1 autocovariance; under i.i.d. increments its
    law is invariant to permutations.
    """
    z = np.asarray(increments, dtype=float)
    z = z - z.mean()
    if z.size < 3:
        raise ParameterError("need at least three increments")

    def lag1(v):
        return float(np.dot(v[:-1], v[1:]) / (v.size - 1))

    observed = abs(lag1(z))
    hits = 0
    for _ in range(n_perm):
        if abs(lag1(rng.permutation(z))) >= observed:
            hits += 1
    return (hits + 1.0) / (n_perm + 1.0)
