"""Samplers and characteristic functions for the limit processes.

Covers the time-changed Brownian motion sqrt(Gamma(beta+1)) * sigma_f *
B(M_beta(t)), its delayed entrance-law variant, and the three-parameter
self-similar family Y_{alpha,beta,gamma} realized as a LePage series with
independent (stable path, Mittag-Leffler time change) marks per term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import gamma as gamma_fn, gammaln

from .errors import ParameterError, PrecisionError
from .mlfrac import DEFAULT_INVERSION_RTOL, ml_values, sample_positive_stable
from .paths import SamplePath, validate_grid
from .stable import SeriesBudget, sample_sas, sas_abs_moment, tail_constant


@dataclass(frozen=True)
class YParams:
    """Parameters of Y_{alpha,beta,gamma}; hurst is always recomputed."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ParameterError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ParameterError(f"beta must lie in [0, 1], got {self.beta}")
        if not self.alpha < self.gamma <= 2.0:
            raise ParameterError(
                f"gamma must lie in (alpha, 2], got gamma={self.gamma}, alpha={self.alpha}"
            )

    @property
    def hurst(self) -> float:
        return self.beta / self.gamma + (1.0 - self.beta) / self.alpha


def sample_subgaussian_w(params: YParams, rng, size=None):
    """The positive strictly (alpha/gamma)-stable factor W of the beta = 1 case."""
    return sample_positive_stable(params.alpha / params.gamma, rng, size=size)


def _stable_path_increments(gam, dm, rng):
    """Increment a gamma-stable path over nonnegative time increments dm.

    gamma = 2 uses the STANDARD Brownian convention (variance dm, not 2*dm),
    matching the limit displays this family appears in.
    """
    if gam == 2.0:
        return np.sqrt(dm) * rng.standard_normal(dm.shape)
    return dm ** (1.0 / gam) * sample_sas(gam, 1.0, rng, size=dm.shape)


def sample_bm_ml(beta, sigma_f, grid, rng, rtol=DEFAULT_INVERSION_RTOL) -> SamplePath:
    """sqrt(Gamma(beta+1)) * sigma_f * B(M_beta(t)) with B independent of M."""
    if sigma_f < 0:
        raise ParameterError(f"sigma_f must be nonnegative, got {sigma_f}")
    g = validate_grid(grid)
    m = ml_values(beta, g[None, 1:], rng, rtol=rtol)[0]
    dm = np.diff(np.concatenate([[0.0], m]))
    b = np.concatenate([[0.0], np.cumsum(np.sqrt(dm) * rng.standard_normal(dm.size))])
    values = np.sqrt(gamma_fn(beta + 1.0)) * sigma_f * b
    return SamplePath(g, values, meta={"label": f"bm_ml(beta={beta})"})


def sample_entrance_limit(beta, sigma_f, L, grid, rng, rtol=DEFAULT_INVERSION_RTOL):
    """The entrance-law limit sqrt(Gamma(beta+1)) sigma_f B(M_beta((t - T)_+)).

    T = L * U**(1/(1-beta)) for uniform U when beta < 1 (so P(T <= x) =
    (x/L)**(1-beta)), and T = 0 when beta = 1.  Returns (path, T).
    """
    if L <= 0:
        raise ParameterError(f"L must be positive, got {L}")
    g = validate_grid(grid)
    if beta == 1.0:
        t_entry = 0.0
    else:
        t_entry = L * rng.random() ** (1.0 / (1.0 - beta))
    shifted = np.clip(g - t_entry, 0.0, None)
    m = ml_values(beta, shifted[None, :], rng, rtol=rtol)[0]
    dm = np.diff(np.concatenate([[0.0], m]))
    b = np.cumsum(np.sqrt(dm) * rng.standard_normal(dm.size))
    values = np.sqrt(gamma_fn(beta + 1.0)) * sigma_f * b
    return SamplePath(g, values, meta={"label": f"entrance_limit(beta={beta})"}), t_entry


def _gamma_arrival_tail(q, J, extra_terms=4000):
    """sum_{j > J} E Gamma_j**(-q) for q > 1 (E Gamma_j^-q = Gamma(j-q)/Gamma(j))."""
    j0 = max(J + 1, int(np.ceil(q)) + 1)
    j = np.arange(j0, j0 + extra_terms)
    head = np.exp(gammaln(j - q) - gammaln(j)).sum()
    jm = j0 + extra_terms
    # integral tail of j^-q plus half the first omitted term
    return head + jm ** (1.0 - q) / (q - 1.0) + 0.5 * jm ** (-q)


def sample_y(
    params: YParams,
    grid,
    budget: SeriesBudget,
    rng,
    rtol=DEFAULT_INVERSION_RTOL,
    compensate_tail=True,
) -> SamplePath:
    """One path of Y_{alpha,beta,gamma} on [0, T] by a truncated LePage series.

    Y(t) = (C_alpha m_T)^{1/alpha} sum_j eps_j Gamma_j^{-1/alpha}
    S_gamma^(j)(M_beta^(j)((t - x_j)_+)), with m_T = T^{1-beta} and marks
    x_j = T U^{1/(1-beta)} drawn from the normalized ancestral measure;
    beta = 0 uses uniform marks and a single exponential time argument per
    term; beta = 1 collapses to W^{1/gamma} S_gamma(t).

    For gamma = 2 the truncated tail (terms beyond budget.J) is compensated
    by an independent Gaussian: the tail's conditional covariance at grid
    times is proportional to min(t, s), i.e. a Brownian motion, with an
    explicitly computable scale.  For gamma < 2 the tail has infinite
    variance and no compensator is added; use a generous J instead.
    """
    al, be, gam = params.alpha, params.beta, params.gamma
    g = validate_grid(grid)
    horizon = g[-1]
    if horizon <= 0:
        raise ParameterError("grid must extend past 0")

    if be == 1.0:
        w = sample_subgaussian_w(params, rng)
        ds = _stable_path_increments(gam, np.diff(g), rng)
        values = w ** (1.0 / gam) * np.concatenate([[0.0], np.cumsum(ds)])
        return SamplePath(g, values, meta={"label": "Y(beta=1)"})

    c_alpha = tail_constant(al)
    m_mass = horizon ** (1.0 - be)
    arr = budget.arrivals
    signs = budget.signs
    J = budget.J

    if be == 0.0:
        x = horizon * rng.random(J)
        e_levels = rng.standard_exponential(J)
        term_vals = _stable_path_increments(gam, e_levels, rng)  # S_gamma(E_j)
        terms = term_vals[:, None] * (x[:, None] < g[None, :])
    else:
        x = horizon * rng.random(J) ** (1.0 / (1.0 - be))
        tm = np.clip(g[None, :] - x[:, None], 0.0, None)
        m = ml_values(be, tm, rng, rtol=rtol)
        dm = np.diff(m, axis=1, prepend=0.0)
        terms = np.cumsum(_stable_path_increments(gam, dm, rng), axis=1)

    scale = (c_alpha * m_mass) ** (1.0 / al)
    values = scale * np.einsum("j,j,jk->k", signs, arr ** (-1.0 / al), terms)

    if gam == 2.0 and compensate_tail:
        # tail covariance: C^{2/a} m^{2/a} sum_{j>J} E G_j^{-2/a} * h(min(t,s))
        # with h(t) = E_x[(t-x)_+^beta] / Gamma(1+beta) = const * t, a BM law
        tail_sum = _gamma_arrival_tail(2.0 / al, J)
        slope = (
            (1.0 - be)
            * beta_fn(1.0 - be, 1.0 + be)
            / (m_mass * gamma_fn(1.0 + be))
        )
        var_rate = (c_alpha * m_mass) ** (2.0 / al) * tail_sum * slope
        binc = np.sqrt(var_rate * np.diff(g)) * rng.standard_normal(g.size - 1)
        values = values + np.concatenate([[0.0], np.cumsum(binc)])

    values[0] = 0.0 if g[0] == 0.0 else values[0]
    return SamplePath(g, values, meta={"label": f"Y(a={al},b={be},g={gam})"})


def y_ensemble(
    params,
    times,
    n_paths,
    rng,
    budget_j=400,
    rtol=DEFAULT_INVERSION_RTOL,
    compensate_tail=True,
    chunk_rows=2_000_000,
):
    """Independent joint Y values at the given times, one replicate per row.

    Flattens (replicate, series-term) pairs into single vectorized mark
    draws; a single requested time goes through the exact Mittag-Leffler
    marginal, several times use the path inversion.
    """
    al, be, gam = params.alpha, params.beta, params.gamma
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0):
        raise ParameterError("times must be nonnegative")
    k = t.size
    J = budget_j

    if be == 1.0:
        w = sample_subgaussian_w(params, rng, size=n_paths)
        order = np.argsort(t)
        dt = np.diff(np.concatenate([[0.0], t[order]]))
        ds = _stable_path_increments(gam, np.broadcast_to(dt, (n_paths, k)).copy(), rng)
        s = np.cumsum(ds, axis=1)
        out = np.empty((n_paths, k))
        out[:, order] = s
        return w[:, None] ** (1.0 / gam) * out

    horizon = float(t.max())
    if horizon <= 0:
        return np.zeros((n_paths, k))
    order = np.argsort(t)
    ts = t[order]  # work on sorted times; unsort at the end
    c_alpha = tail_constant(al)
    m_mass = horizon ** (1.0 - be)
    scale = (c_alpha * m_mass) ** (1.0 / al)

    out = np.empty((n_paths, k))
    batch = max(1, chunk_rows // max(1, J * k))
    done = 0
    while done < n_paths:
        rows = min(batch, n_paths - done)
        arr = np.cumsum(rng.standard_exponential((rows, J)), axis=1)
        signs = rng.choice([-1.0, 1.0], size=(rows, J))
        if be == 0.0:
            x = horizon * rng.random((rows, J))
            sv = _stable_path_increments(gam, rng.standard_exponential((rows, J)), rng)
            terms = sv[:, :, None] * (x[:, :, None] < ts[None, None, :])
        else:
            x = horizon * rng.random((rows, J)) ** (1.0 / (1.0 - be))
            tm = np.clip(ts[None, None, :] - x[:, :, None], 0.0, None)
            m = ml_values(be, tm.reshape(rows * J, k), rng, rtol=rtol)
            dm = np.diff(m, axis=1, prepend=0.0)
            terms = np.cumsum(_stable_path_increments(gam, dm, rng), axis=1)
            terms = terms.reshape(rows, J, k)
        vals = scale * np.einsum("rj,rj,rjk->rk", signs, arr ** (-1.0 / al), terms)
        if gam == 2.0 and compensate_tail:
            tail_sum = _gamma_arrival_tail(2.0 / al, J)
            slope = (
                (1.0 - be)
                * beta_fn(1.0 - be, 1.0 + be)
                / (m_mass * gamma_fn(1.0 + be))
            )
            var_rate = (c_alpha * m_mass) ** (2.0 / al) * tail_sum * slope
            dt = np.diff(np.concatenate([[0.0], ts]))
            binc = np.sqrt(var_rate * dt) * rng.standard_normal((rows, k))
            vals = vals + np.cumsum(binc, axis=1)
        out[done : done + rows, order] = vals
        done += rows
    return out


def analytic_cf_y(
    params: YParams,
    times,
    thetas,
    quad_nodes=48,
    inner_mc=4000,
    rng=None,
    rtol=0.02,
):
    """Characteristic function oracle for (Y(t_1), ..., Y(t_k)).

    The CF exponent integral over the ancestral coordinate x is computed by
    Gauss-Legendre quadrature after substituting x = w^{1/(1-beta)}, which
    absorbs the x^{-beta} singularity exactly.  The inner expectation over
    the (stable, Mittag-Leffler) mark is Monte Carlo over M only: given the
    time change, sum_j theta_j S_gamma(M_j) is exactly gamma-stable with
    scale (sum_i |c_i|^gamma dM_i)^{1/gamma} for the suffix sums c_i of
    theta, so the stable factor reduces to a closed-form absolute moment.
    Returns (cf_value, stderr_of_exponent); raises a precision error if the
    estimated relative error of the exponent exceeds rtol.
    """
    al, be, gam = params.alpha, params.beta, params.gamma
    if not 0.0 < be < 1.0:
        raise ParameterError("the CF oracle requires 0 < beta < 1")
    t = np.atleast_1d(np.asarray(times, dtype=float))
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    if t.shape != th.shape:
        raise ParameterError("times and thetas must have matching shapes")
    if np.all(th == 0.0):
        return 1.0, 0.0
    rng = np.random.default_rng() if rng is None else rng
    order = np.argsort(t)
    t, th = t[order], th[order]
    c_suffix = np.cumsum(th[::-1])[::-1]  # theta_i + ... + theta_k

    w_max = t.max() ** (1.0 - be)
    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    w = 0.5 * w_max * (nodes + 1.0)
    weights = 0.5 * w_max * weights
    x = w ** (1.0 / (1.0 - be))

    # inner MC over the Mittag-Leffler mark at each quadrature node
    tm = np.clip(t[None, :] - x[:, None], 0.0, None)  # (Q, k)
    tm_rep = np.repeat(tm, inner_mc, axis=0)
    m = ml_values(be, tm_rep, rng, rtol=DEFAULT_INVERSION_RTOL)
    dm = np.diff(m, axis=1, prepend=0.0)
    mom = sas_abs_moment(gam, al)
    vals = mom * (dm @ np.abs(c_suffix) ** gam) ** (al / gam)
    vals = vals.reshape(quad_nodes, inner_mc)
    node_mean = vals.mean(axis=1)
    node_err = vals.std(axis=1, ddof=1) / np.sqrt(inner_mc)
    exponent = float(weights @ node_mean)
    err = float(np.sqrt(np.sum((weights * node_err) ** 2)))
    if exponent > 0 and err / exponent > rtol:
        raise PrecisionError(
            f"CF exponent relative error {err / exponent:.3g} exceeds {rtol}",
            achieved=err / exponent,
        )
    return float(np.exp(-exponent)), err


def closed_form_exponent_gamma2(params: YParams, theta):
    """-log CF of Y(1) for gamma = 2 in closed form (single-time check).

    E|B(1)|^alpha * Gamma(1+alpha/2)/Gamma(1+alpha*beta/2) * (1-beta) *
    B(1-beta, 1+alpha*beta/2) * |theta|^alpha, with B standard Brownian.
    """
    al, be = params.alpha, params.beta
    if params.gamma != 2.0:
        raise ParameterError("closed form requires gamma = 2")
    eb1a = 2.0 ** (al / 2.0) * gamma_fn((al + 1.0) / 2.0) / np.sqrt(np.pi)
    return (
        np.abs(theta) ** al
        * eb1a
        * gamma_fn(1.0 + al / 2.0)
        / gamma_fn(1.0 + al * be / 2.0)
        * (1.0 - be)
        * beta_fn(1.0 - be, 1.0 + al * be / 2.0)
    )
