"""Harris chains with atoms: return times, occupation sums, wandering rates.

The built-in test family is a countdown renewal chain on the nonnegative
integers: from 0 jump to J-1 with a regularly varying jump law, otherwise
decrement.  Every occupation quantity of interest (a_n, the invariant weights,
the wandering rate, the conditional entrance law mu_n) is exactly computable
for it, which is what makes it the reference test bed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.signal import fftconvolve

from .errors import ParameterError, SeriesConvergenceError, UnsupportedModelError
from .paths import SamplePath


@dataclass
class ChainModel:
    """A Harris chain with designated atoms.

    ``step`` samples one kernel transition.  ``atoms`` lists the atom states
    making up the reference set D; ``pi_weight`` evaluates the invariant
    measure on atom states.  ``exact_an`` / ``exact_wandering`` are closed
    forms when the family admits them.  ``hooks`` carries optional vectorized
    fast paths (see the renewal builders).
    """

    name: str
    beta: float
    step: Callable
    atoms: list
    pi_weight: Callable[[object], float]
    exact_an: Optional[Callable[[int], float]] = None
    exact_wandering: Optional[Callable[[int], float]] = None
    hooks: dict = field(default_factory=dict)

    def in_D(self, state) -> bool:
        return state in self.atoms

    def pi_D(self) -> float:
        return sum(self.pi_weight(a) for a in self.atoms)

    def start_pi_D(self, rng):
        """Draw a start state from the normalized invariant restriction to D."""
        w = np.array([self.pi_weight(a) for a in self.atoms])
        return self.atoms[rng.choice(len(self.atoms), p=w / w.sum())]


@dataclass
class FSpec:
    """A function supported on the atoms of a chain, mean zero under pi."""

    values: dict

    @classmethod
    def for_model(cls, model: ChainModel, values: dict) -> "FSpec":
        mean = sum(model.pi_weight(a) * v for a, v in values.items())
        scale = sum(model.pi_weight(a) * abs(v) for a, v in values.items())
        if scale > 0 and abs(mean) > 1e-9 * scale:
            raise ParameterError(f"f is not mean zero under pi (sum = {mean})")
        is_atom = model.hooks.get("is_atom", lambda s: s in model.atoms)
        unknown = [a for a in values if not is_atom(a)]
        if unknown:
            raise ParameterError(f"f assigns mass outside the atom set: {unknown}")
        return cls(values=dict(values))

    def __call__(self, state) -> float:
        return self.values.get(state, 0.0)


@dataclass
class ReturnRecord:
    """Return times to D, the local time, and per-excursion sums of f."""

    tau: np.ndarray
    excursions: np.ndarray

    def local_time(self, n: int) -> int:
        return int(np.searchsorted(self.tau, n, side="right"))


# --- renewal-sequence arithmetic -------------------------------------------


def _series_reciprocal(a: np.ndarray, n: int) -> np.ndarray:
    """Coefficients of 1/a(z) mod z**(n+1) by Newton iteration (a[0] = 1)."""
    g = np.array([1.0])
    m = 1
    while m < n + 1:
        m2 = min(2 * m, n + 1)
        ag = fftconvolve(a[:m2], g)[:m2]
        t = -ag
        t[0] += 2.0
        g = fftconvolve(g, t)[:m2]
        m = m2
    return g[: n + 1]


class _RenewalTables:
    """Lazily grown tables of u_k = P^k(0,0) and their partial sums."""

    def __init__(self, jump_tail: Callable[[np.ndarray], np.ndarray]):
        self.jump_tail = jump_tail
        self._u = None

    def u(self, n: int) -> np.ndarray:
        if self._u is None or self._u.size < n + 1:
            size = max(n + 1, 1024)
            k = np.arange(size)
            q = self.jump_tail(k)
            f = np.empty(size)
            f[0] = 0.0
            f[1:] = q[:-1] - q[1:]
            a = -f
            a[0] = 1.0
            u = _series_reciprocal(a, size - 1)
            np.maximum(u, 0.0, out=u)
            self._u = u
        return self._u[: n + 1]

    def a_n(self, n: int) -> float:
        return float(self.u(n)[1:].sum())

    def a_cumulative(self, n: int) -> np.ndarray:
        out = np.cumsum(self.u(n))
        out -= 1.0  # drop the k = 0 term
        return out


def _renewal_jump_sampler(beta, tail_scale):
    def sample(size, rng):
        u = rng.random(size)
        t = tail_scale * (u ** (-1.0 / beta) - 1.0)
        return np.floor(t) + 1.0

    return sample


def builtin_renewal_chain(beta, tail_scale=1.0) -> ChainModel:
    """Countdown renewal chain with P(J > n) = (1 + n/tail_scale)**(-beta).

    Atoms {0} and {1}; invariant weights pi(m) = P(J > m); a_n and the
    wandering rate are exact (renewal recursion / direct summation).
    """
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"renewal chain requires beta in (0, 1), got {beta}")
    jump_tail = lambda n: (1.0 + np.asarray(n, dtype=float) / tail_scale) ** (-beta)
    return _make_countdown_chain(
        f"renewal(beta={beta})", beta, jump_tail, _renewal_jump_sampler(beta, tail_scale)
    )


def builtin_beta1_renewal_chain() -> ChainModel:
    """beta = 1 countdown family with a slowly varying wandering rate.

    P(J > n) = log(2)**2 / ((1+n) * log(2+n)**2): the tail is regularly
    varying of index -1 and its sum converges, so the wandering rate is
    slowly varying (log-log slope -> 0) while a_n stays regularly varying
    of exponent 1.
    """
    c = np.log(2.0) ** 2

    def jump_tail(n):
        n = np.asarray(n, dtype=float)
        return c / ((1.0 + n) * np.log(2.0 + n) ** 2)

    def sampler(size, rng):
        # inverse CDF by bisection on the continuous envelope
        u = rng.random(size)
        lo = np.zeros(size)
        hi = np.ones(size)
        while True:
            mask = jump_tail(hi) > u
            if not mask.any():
                break
            hi[mask] *= 2.0
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            high = jump_tail(mid) > u
            lo[high] = mid[high]
            hi[~high] = mid[~high]
        return np.floor(hi) + 1.0

    return _make_countdown_chain("renewal(beta=1)", 1.0, jump_tail, sampler)


def _make_countdown_chain(name, beta, jump_tail, jump_sampler) -> ChainModel:
    tables = _RenewalTables(jump_tail)

    def step(state, rng):
        if state > 0:
            return state - 1
        return int(jump_sampler(1, rng)[0]) - 1

    def pi_weight(state):
        return float(jump_tail(state))

    def exact_wandering(n):
        return float(jump_tail(np.arange(n + 1)).sum())

    model = ChainModel(
        name=name,
        beta=beta,
        step=step,
        atoms=[0, 1],
        pi_weight=pi_weight,
        exact_an=tables.a_n,
        exact_wandering=exact_wandering,
        hooks={
            "jump_sampler": jump_sampler,
            "jump_tail": jump_tail,
            "renewal_tables": tables,
            "kind": "countdown",
            # every singleton is an atom of the countdown kernel
            "is_atom": lambda s: isinstance(s, (int, np.integer)) and s >= 0,
        },
    )
    return model


def short_excursion_fspec(model: ChainModel) -> FSpec:
    """An atom-supported f whose sum over any excursion of length >= 3 is zero.

    Supported on {0, 1, 2} with f(0)+f(1)+f(2) = 0 on top of mean zero under
    pi, so only short excursions contribute to partial sums.  This decouples
    the excursion sums from the excursion lengths, which sharpens the normal
    approximation of S_n(f) at accessible n considerably.
    """
    if model.hooks.get("kind") != "countdown":
        raise UnsupportedModelError("short_excursion_fspec requires a countdown chain")
    q = model.hooks["jump_tail"](np.arange(3)).astype(float)
    f1 = -(1.0 - q[2]) / (q[1] - q[2])
    return FSpec.for_model(model, {0: 1.0, 1: f1, 2: -(1.0 + f1)})


def builtin_ssrw_chain() -> ChainModel:
    """Simple symmetric random walk on Z; counting invariant measure, beta = 1/2."""

    def step(state, rng):
        return state + (1 if rng.random() < 0.5 else -1)

    def exact_an(n):
        # sum_{k<=n} P^k(0,0); only even k contribute
        m = np.arange(1, n // 2 + 1)
        from scipy.special import gammaln

        logp = gammaln(2 * m + 1) - 2 * gammaln(m + 1) - 2 * m * np.log(2.0)
        return float(np.exp(logp).sum())

    return ChainModel(
        name="ssrw",
        beta=0.5,
        step=step,
        atoms=[0, 1],
        pi_weight=lambda s: 1.0,
        exact_an=exact_an,
        exact_wandering=None,
        hooks={"kind": "ssrw"},
    )


def builtin_gaussian_walk(n_cells: int = 1) -> ChainModel:
    """Random walk on R with standard Gaussian steps; D = [0, 1].

    D is a special set but not a union of atoms; for f-support purposes it is
    discretized into ``n_cells`` equal cells treated as pseudo-atoms with
    Lebesgue weights.
    """

    def step(state, rng):
        return state + rng.standard_normal()

    cells = [(i + 0.5) / n_cells for i in range(n_cells)]
    model = ChainModel(
        name="gaussian_walk",
        beta=0.5,
        step=step,
        atoms=cells,
        pi_weight=lambda s: 1.0 / n_cells,
        exact_an=None,
        exact_wandering=None,
        hooks={"kind": "gaussian_walk", "n_cells": n_cells},
    )
    return model


def builtin_two_state_iid_chain(p0=0.5) -> ChainModel:
    """Positive-recurrent two-state chain whose kernel ignores the current state."""

    def step(state, rng):
        return 0 if rng.random() < p0 else 1

    return ChainModel(
        name="two_state_iid",
        beta=1.0,
        step=step,
        atoms=[0, 1],
        pi_weight=lambda s: p0 if s == 0 else 1.0 - p0,
        exact_an=lambda n: float(n),
        exact_wandering=None,
        hooks={"kind": "iid", "p0": p0},
    )


# --- generic path machinery -------------------------------------------------


def run_chain(model: ChainModel, start, n: int, f: FSpec, rng):
    """Run one chain path of n steps, recording partial sums and excursions.

    ``start`` is a state, or one of the tags "atom" (first atom) and "pi_D"
    (normalized invariant restriction to D).  The start state is Z_1 and the
    partial sums are S_m = sum_{k<=m} f(Z_k).
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    if start == "atom":
        state = model.atoms[0]
    elif start == "pi_D":
        state = model.start_pi_D(rng)
    elif isinstance(start, str):
        raise ParameterError(f"unsupported start tag {start!r} for {model.name}")
    else:
        state = start

    sums = np.empty(n + 1)
    sums[0] = 0.0
    tau = []
    excursions = []
    last_tau_sum = 0.0
    total = 0.0
    for k in range(1, n + 1):
        total += f(state)
        sums[k] = total
        if model.in_D(state):
            tau.append(k)
            excursions.append(total - last_tau_sum)
            last_tau_sum = total
        state = model.step(state, rng)
    path = SamplePath(
        np.arange(n + 1, dtype=float),
        sums,
        meta={"label": f"partial_sums({model.name})"},
    )
    record = ReturnRecord(tau=np.asarray(tau, dtype=float), excursions=np.asarray(excursions))
    return path, record


@dataclass
class AnEstimate:
    mc: float
    stderr: float
    exact: Optional[float]


def estimate_an(model: ChainModel, n: int, replicates: int, rng) -> AnEstimate:
    """Monte Carlo estimate of a_n = E_nu[visits to D by n] / pi(D), nu = pi|_D."""
    if replicates < 1:
        raise ParameterError("replicates must be at least 1")
    counts = _count_visits(model, n, replicates, rng)
    pi_d = model.pi_D()
    est = counts.mean() / pi_d
    err = counts.std(ddof=1) / np.sqrt(replicates) / pi_d if replicates > 1 else np.inf
    exact = model.exact_an(n) if model.exact_an is not None else None
    return AnEstimate(mc=float(est), stderr=float(err), exact=exact)


def _count_visits(model: ChainModel, n: int, replicates: int, rng) -> np.ndarray:
    kind = model.hooks.get("kind")
    if kind == "countdown":
        # ensemble indexing treats the start state as step 1; shift the window
        # by one and drop that visit so only steps after the start are counted
        ens = countdown_ensemble(model, n + 1, [1.0], replicates, rng, start="pi_D")
        return (ens["counts"][:, 0, :].sum(axis=1) - 1).astype(float)
    if kind == "ssrw":
        steps = rng.choice([-1, 1], size=(replicates, n)).cumsum(axis=1)
        start = rng.choice([0, 1], size=(replicates, 1))
        pos = start + steps
        return ((pos == 0) | (pos == 1)).sum(axis=1).astype(float)
    if kind == "gaussian_walk":
        counts = np.zeros(replicates)
        chunk = max(1, int(2e7) // n)
        done = 0
        while done < replicates:
            m = min(chunk, replicates - done)
            pos = rng.random((m, 1)) + rng.standard_normal((m, n)).cumsum(axis=1)
            counts[done : done + m] = ((pos >= 0.0) & (pos <= 1.0)).sum(axis=1)
            done += m
        return counts
    counts = np.empty(replicates)
    for r in range(replicates):
        state = model.start_pi_D(rng)
        c = 0
        for _ in range(n):
            state = model.step(state, rng)
            if model.in_D(state):
                c += 1
        counts[r] = c
    return counts


def wandering_rate(model: ChainModel, n: int) -> float:
    """mu(tau_D <= n), exactly when the model provides it."""
    if model.exact_wandering is None:
        raise UnsupportedModelError(
            f"{model.name} has no wandering-rate evaluator; supply a proposal"
        )
    return model.exact_wandering(n)


def sigma_f(model: ChainModel, f: FSpec, k_max: int = 20000, rtol: float = 1e-3) -> float:
    """The variance constant sigma_f^2 = int f^2 dpi + 2 sum_k int f P^k f dpi.

    Lag terms reduce to finite sums over the support atoms of f weighted by
    k-step transition probabilities.  Partial sums are monitored; if the last
    three do not agree to ``rtol`` the lag series is declared nonconvergent.
    """
    atoms = sorted(f.values)
    fv = np.array([f.values[a] for a in atoms])
    pw = np.array([model.pi_weight(a) for a in atoms])
    base = float(np.sum(pw * fv**2))
    pk = _atom_transitions(model, k_max, atoms)  # shape (k_max, q, q)
    lag_terms = np.einsum("i,i,kij,j->k", pw, fv, pk, fv)
    partial = base + 2.0 * np.cumsum(lag_terms)
    tail = np.abs(np.diff(partial[-3:]))
    denom = max(abs(partial[-1]), 1e-12)
    if np.any(tail > rtol * denom):
        raise SeriesConvergenceError(
            f"lag-covariance series for {model.name} did not stabilize by k_max={k_max}"
        )
    return float(partial[-1])


def _atom_transitions(model: ChainModel, k_max: int, atoms) -> np.ndarray:
    """P^k(a_i, a_j) for k = 1..k_max over the given atom states."""
    kind = model.hooks.get("kind")
    if kind == "countdown":
        tables: _RenewalTables = model.hooks["renewal_tables"]
        amax = max(atoms)
        K = k_max + amax
        u = tables.u(K)
        q = model.hooks["jump_tail"](np.arange(K + amax + 2))
        fj = np.empty(K + amax + 2)
        fj[0] = 0.0
        fj[1:] = q[:-1] - q[1:]
        # from a renewal at time i the excursion sits at state mp at time k
        # iff the jump equals k - i + mp, so P^k(0, mp) = sum_i u_i f_{k-i+mp}
        p0 = {}
        for mp in atoms:
            fs = np.zeros(K + 1)
            fs[1:] = fj[1 + mp : K + 1 + mp]
            p0[mp] = fftconvolve(u[: K + 1], fs)[: K + 1]
        ks = np.arange(1, k_max + 1)
        out = np.empty((k_max, len(atoms), len(atoms)))
        for i, m in enumerate(atoms):
            for jdx, mp in enumerate(atoms):
                # deterministic countdown for k <= m, renewal dynamics after
                vals = np.where(ks <= m, (m - ks == mp).astype(float), 0.0)
                sel = ks > m
                vals[sel] = p0[mp][ks[sel] - m]
                out[:, i, jdx] = vals
        return out
    if kind == "iid":
        p0 = model.hooks["p0"]
        out = np.empty((k_max, len(atoms), len(atoms)))
        for jdx, a in enumerate(atoms):
            out[:, :, jdx] = p0 if a == 0 else 1.0 - p0
        return out
    raise UnsupportedModelError(
        f"{model.name} provides no atom-transition evaluator for sigma_f"
    )


def resolvent_chain(model: ChainModel, p: float, rng) -> ChainModel:
    """The chain observed at geometric renewal times (mean interval 1/(1-p))."""
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0, 1), got {p}")

    def step(state, base_rng):
        k = base_rng.geometric(1.0 - p)
        for _ in range(k):
            state = model.step(state, base_rng)
        return state

    return ChainModel(
        name=f"resolvent({model.name}, p={p})",
        beta=model.beta,
        step=step,
        atoms=model.atoms,
        pi_weight=model.pi_weight,
        exact_an=None,
        exact_wandering=None,
        hooks={"kind": "resolvent", "base": model, "p": p},
    )


# --- entrance-law sampling and vectorized occupation ensembles ---------------


def sample_mu_n_start(model: ChainModel, n: int, size, rng):
    """Start states under mu_n = mu(. | tau_D <= n), exact for countdown chains."""
    if model.hooks.get("kind") != "countdown":
        raise UnsupportedModelError(
            f"{model.name} supports no exact mu_n sampler and no proposal was given"
        )
    jump_tail = model.hooks["jump_tail"]
    w = jump_tail(np.arange(n + 1))
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random(size), side="right")


def sample_mu_n_path(model: ChainModel, n: int, rng, f: Optional[FSpec] = None):
    """One path of length n started from mu_n; returns (states, ReturnRecord)."""
    start = int(sample_mu_n_start(model, n, None, rng))
    fspec = f if f is not None else FSpec(values={})
    path, record = run_chain(model, start, n, fspec, rng)
    return start, path, record


def countdown_ensemble(
    model: ChainModel,
    n: int,
    t_grid,
    n_paths: int,
    rng,
    start="mu_n",
    track=(0, 1),
    chunk_rows: int = 200_000,
    exc_block: int = 256,
):
    """Vectorized occupation counts for countdown chains.

    For each path, counts visits to each atom in ``track`` up to each
    threshold floor(n * t) for t in ``t_grid``, along with the entrance time
    tau_D.  Start options: "mu_n" (exact entrance law for window n), "pi_D",
    "atom", or an integer state.  On the countdown kernel the excursion from
    0 of length J passes through state m exactly once iff J >= m + 1, which
    makes the counting a pure array reduction over excursion blocks.
    """
    if model.hooks.get("kind") != "countdown":
        raise UnsupportedModelError("countdown_ensemble requires a countdown chain")
    t = np.asarray(t_grid, dtype=float)
    thresholds = np.floor(n * t).astype(np.int64)
    s_max = int(thresholds.max())
    jump = model.hooks["jump_sampler"]
    jump_tail = model.hooks["jump_tail"]
    track = list(track)

    counts = np.zeros((n_paths, t.size, len(track)), dtype=np.int64)
    tau_d = np.zeros(n_paths, dtype=np.int64)

    done = 0
    while done < n_paths:
        rows = min(chunk_rows, n_paths - done)
        if start == "mu_n":
            m = sample_mu_n_start(model, n, rows, rng).astype(np.int64)
        elif start == "pi_D":
            q1 = float(jump_tail(1))
            m = (rng.random(rows) < q1 / (1.0 + q1)).astype(np.int64)
        elif start == "atom":
            m = np.zeros(rows, dtype=np.int64)
        else:
            m = np.full(rows, int(start), dtype=np.int64)

        c = counts[done : done + rows]
        # initial countdown: x_1 = m, x_2 = m-1, ..., x_{m+1} = 0
        for a, atom in enumerate(track):
            if atom >= 1:
                c[:, :, a] += ((m >= atom)[:, None]) & (
                    (m - atom + 1)[:, None] <= thresholds
                )
        tau_d[done : done + rows] = np.where(m >= 1, m, 1)

        # renewal visits to 0 at indices r_i = (m + 1) + sum_{l<=i} J_l;
        # within the following excursion, atom a > 0 is hit at r_i + J - a
        pos = (m + 1).astype(float)
        active = np.arange(rows)
        first = True
        while active.size:
            j = jump(size=(active.size, exc_block), rng=rng)
            if first and 0 in track:
                a0 = track.index(0)
                c[active, :, a0] += pos[active][:, None] <= thresholds
            first = False
            r = pos[active][:, None] + np.cumsum(j, axis=1)
            for a, atom in enumerate(track):
                if atom == 0:
                    c[active, :, a] += (r[:, :, None] <= thresholds).sum(axis=1)
                else:
                    hit = ((r - atom)[:, :, None] <= thresholds) & (
                        j[:, :, None] >= atom + 1
                    )
                    c[active, :, a] += hit.sum(axis=1)
            pos[active] = r[:, -1]
            active = active[pos[active] <= s_max]
        done += rows

    return {"counts": counts, "track": track, "tau_d": tau_d, "thresholds": thresholds}


def partial_sum_ensemble(
    model: ChainModel, f: FSpec, n: int, t_grid, n_paths: int, rng, start="pi_D"
):
    """S_{floor(nt)}(f) for many independent paths, vectorized where possible."""
    if model.hooks.get("kind") == "countdown":
        track = sorted(f.values)
        ens = countdown_ensemble(
            model, n, t_grid, n_paths, rng, start=start, track=track
        )
        fv = np.array([f.values[a] for a in ens["track"]])
        return ens["counts"] @ fv
    t = np.asarray(t_grid, dtype=float)
    thresholds = np.floor(n * t).astype(int)
    out = np.empty((n_paths, t.size))
    for r in range(n_paths):
        path, _ = run_chain(model, start, n, f, rng)
        out[r] = path.values[thresholds]
    return out
