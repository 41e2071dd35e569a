"""Symmetric alpha-stable sampling, tail constants, Levy-tail specs, LePage series."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import ParameterError

_ALPHA_ONE_WINDOW = 1e-6


def sample_sas(alpha, scale, rng, size=None):
    """Symmetric alpha-stable variates with CF exp(-scale**alpha * |theta|**alpha).

    Chambers-Mallows-Stuck transformation; alpha = 2 is the Gaussian endpoint
    (variance 2 * scale**2), alpha = 1 the Cauchy case.
    """
    if not 0.0 < alpha <= 2.0:
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha}")
    if scale < 0:
        raise ParameterError(f"scale must be nonnegative, got {scale}")
    if scale == 0.0:
        return 0.0 if size is None else np.zeros(size)
    v = rng.uniform(-np.pi / 2, np.pi / 2, size=size)
    w = rng.standard_exponential(size=size)
    x = (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
    )
    return scale * x


def sas_abs_moment(gam, p):
    """E|S(1)|^p for the symmetric gamma-stable convention used here.

    gamma < 2 means CF exp(-|theta|^gamma); gamma = 2 means a standard
    normal.  Requires p < gamma.
    """
    if not 0.0 < p < gam:
        raise ParameterError(f"moment order must lie in (0, gamma), got {p}")
    if gam == 2.0:
        return 2.0 ** (p / 2.0) * gamma_fn((p + 1.0) / 2.0) / np.sqrt(np.pi)
    return (
        2.0**p
        * gamma_fn((1.0 + p) / 2.0)
        * gamma_fn(1.0 - p / gam)
        / (np.sqrt(np.pi) * gamma_fn(1.0 - p / 2.0))
    )


def tail_constant(alpha):
    """The alpha-stable tail constant C_alpha.

    C_alpha = (1-alpha) / (Gamma(2-alpha) * cos(pi*alpha/2)) away from 1 and
    2/pi at alpha = 1 (continuity limit used inside |alpha-1| < 1e-6).
    """
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"tail constant defined for alpha in (0, 2), got {alpha}")
    if abs(alpha - 1.0) < _ALPHA_ONE_WINDOW:
        return 2.0 / np.pi
    return (1.0 - alpha) / (gamma_fn(2.0 - alpha) * np.cos(np.pi * alpha / 2.0))


@dataclass
class LevyTailSpec:
    """A symmetric local Levy measure described by its tail rho(x, inf).

    ``tail`` must be nonincreasing, right-continuous and finite for x > 0 with
    regular-variation index -alpha at infinity; ``p0`` is a small-x exponent
    with x**p0 * tail(x) -> 0 as x -> 0.
    """

    alpha: float
    tail: Callable[[np.ndarray], np.ndarray]
    inverse: Optional[Callable[[np.ndarray], np.ndarray]]
    p0: float
    kind: str = "user_defined"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ParameterError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not 0.0 < self.p0 < 2.0:
            raise ParameterError(f"p0 must lie in (0, 2), got {self.p0}")
        if self.kind == "user_defined":
            self._spot_check()

    def _spot_check(self):
        xs = np.logspace(-2, 3, 41)
        vals = self.tail(xs)
        if np.any(np.diff(vals) > 1e-12 * np.maximum(1.0, vals[:-1])):
            raise ParameterError("tail function must be nonincreasing")
        small = np.logspace(-8, -2, 13)
        lim = small**self.p0 * self.tail(small)
        if not (lim[0] < 0.5 * max(lim[-1], 1e-300) or lim[0] < 1e-6):
            raise ParameterError(
                "x**p0 * tail(x) does not appear to vanish as x -> 0"
            )

    def to_config(self) -> dict:
        if self.kind == "user_defined":
            raise ParameterError("user_defined Levy specs are not serializable")
        return {"kind": self.kind, "alpha": self.alpha, **self.params}

    @classmethod
    def from_config(cls, cfg: dict) -> "LevyTailSpec":
        kind = cfg["kind"]
        alpha = float(cfg["alpha"])
        if kind == "pure_stable":
            return pure_stable_spec(alpha)
        if kind == "pareto_cutoff":
            return pareto_cutoff_spec(alpha)
        raise ParameterError(f"unknown Levy spec kind {kind!r}")


def pure_stable_spec(alpha) -> LevyTailSpec:
    """rho(x, inf) = x**-alpha: the exactly tractable SaS local Levy measure."""
    return LevyTailSpec(
        alpha=alpha,
        tail=lambda x: np.asarray(x, dtype=float) ** (-alpha),
        inverse=lambda y: np.asarray(y, dtype=float) ** (-1.0 / alpha),
        p0=min(alpha, 1.999),
        kind="pure_stable",
    )


def pareto_cutoff_spec(alpha) -> LevyTailSpec:
    """rho(x, inf) = min(1, x**-alpha): finite total mass, no jumps below 1."""
    return LevyTailSpec(
        alpha=alpha,
        tail=lambda x: np.minimum(1.0, np.asarray(x, dtype=float) ** (-alpha)),
        inverse=lambda y: np.where(
            np.asarray(y, dtype=float) >= 1.0,
            0.0,
            np.asarray(y, dtype=float) ** (-1.0 / alpha),
        ),
        p0=1.0,
        kind="pareto_cutoff",
    )


def levy_tail_inverse(spec: LevyTailSpec, y):
    """Generalized inverse rho^{<-}(y) = inf{x >= 0 : tail(x) <= y}."""
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y_arr <= 0):
        raise ParameterError("inverse argument must be positive")
    if spec.inverse is not None:
        out = np.asarray(spec.inverse(y_arr), dtype=float)
    else:
        out = np.array([_bisect_inverse(spec.tail, float(v)) for v in y_arr])
    if np.isscalar(y):
        return float(out.reshape(-1)[0])
    return out.reshape(np.shape(y))


def _bisect_inverse(tail, y, x_seed=1.0, iters=200):
    if tail(np.asarray(1e-12)) <= y:
        return 0.0
    lo, hi = 0.0, x_seed
    while tail(np.asarray(hi)) > y:
        hi *= 2.0
        if hi > 1e300:
            raise ParameterError("tail never drops below the requested level")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if tail(np.asarray(mid)) <= y:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class SeriesBudget:
    """Poisson arrivals, Rademacher signs, and optional marks for a LePage series."""

    J: int
    arrivals: np.ndarray
    signs: np.ndarray
    marks: Optional[np.ndarray] = None

    def __post_init__(self):
        self.arrivals = np.asarray(self.arrivals, dtype=float)
        self.signs = np.asarray(self.signs)
        if self.J < 1:
            raise ParameterError("J must be at least 1")
        if self.arrivals.shape != (self.J,) or self.signs.shape != (self.J,):
            raise ParameterError("arrivals and signs must have length J")
        if self.arrivals[0] <= 0 or np.any(np.diff(self.arrivals) <= 0):
            raise ParameterError("arrivals must be strictly increasing and positive")

    @classmethod
    def sample(cls, J, rng, mark_sampler=None) -> "SeriesBudget":
        arrivals = np.cumsum(rng.standard_exponential(J))
        signs = rng.choice([-1.0, 1.0], size=J)
        marks = None if mark_sampler is None else mark_sampler(J)
        return cls(J=J, arrivals=arrivals, signs=signs, marks=marks)


def lepage_sas_integral(integrand, mark_sampler, total_mass, alpha, budget: SeriesBudget):
    """LePage series value for an SaS integral of ``integrand``.

    Returns C_alpha**(1/alpha) * sum_j eps_j (Gamma_j / total_mass)**(-1/alpha)
    * integrand(mark_j); the marks are drawn from the normalized control
    measure.  Distributionally, the CF of the result approaches
    exp(-total_mass * E|integrand|**alpha * |theta|**alpha) as J grows.
    """
    if total_mass <= 0:
        raise ParameterError(f"total_mass must be positive, got {total_mass}")
    marks = budget.marks if budget.marks is not None else mark_sampler(budget.J)
    vals = np.asarray(integrand(marks), dtype=float)
    coef = tail_constant(alpha) ** (1.0 / alpha)
    weights = (budget.arrivals / total_mass) ** (-1.0 / alpha)
    return coef * float(np.sum(budget.signs * weights * vals))
