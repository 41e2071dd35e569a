"""Acceptance suite: one check per stated criterion, each printing a
single PASS/FAIL line with the measured value and its tolerance.

Two checks are intentionally left failing, with companion checks that
pass under the corrected constant; docs/ledger notes explain the
discrepancies (criterion 3: Gaussian-walk occupation constant; criterion
6: limit-scale constant of the main functional CLT).
"""

import os
import time

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from heavytail.chains import (
    builtin_gaussian_walk,
    builtin_renewal_chain,
    countdown_ensemble,
    estimate_an,
    partial_sum_ensemble,
    short_excursion_fspec,
    sigma_f,
    wandering_rate,
)
from heavytail.config import validate
from heavytail.cli import EXIT_OK, main as cli_main
from heavytail.experiments import _pos_family, _sym_family, run_sssi
from heavytail.idproc import IdProcessSpec, compute_cn, fclt_experiment, partial_sum_paths
from heavytail.limits import YParams, sample_subgaussian_w, y_ensemble
from heavytail.mlfrac import ml_marginal_sample, ml_values, sample_overshoot
from heavytail.momentbounds import (
    PosLevySpec,
    calibrate_cp,
    check_pos_bound,
    poisson_p_moment,
)
from heavytail.stable import pure_stable_spec, sample_sas
from heavytail.stats import ks_statistic, ks_two_sample

BETA = 0.5


def _line(name, value, bound, elapsed=None, note=""):
    ok = value < bound
    extra = f", {elapsed:.0f}s" if elapsed is not None else ""
    tag = f" ({note})" if note else ""
    print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.4g} < {bound:g}{extra}{tag}")
    return ok


# --- criterion 1: inverse-subordinator first moment -------------------------


def test_criterion_01_ml_first_moments():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for beta in (0.3, 0.5, 0.8):
        m = ml_marginal_sample(beta, 1.0, rng, size=100_000)
        rel = abs(m.mean() * gamma_fn(1.0 + beta) - 1.0)
        worst = max(worst, rel)
    el = time.perf_counter() - t0
    assert _line("criterion 1 ml first moments (rel err vs 1/Gamma(1+b))",
                 worst, 0.02, el)
    assert el < 60.0


# --- criterion 2: wandering-rate constant ------------------------------------


def test_criterion_02_wandering_constant():
    chain = builtin_renewal_chain(BETA)
    n = 10**6
    t0 = time.perf_counter()
    const = n / (chain.exact_an(n) * wandering_rate(chain, n))
    el = time.perf_counter() - t0
    rel = abs(const / (np.pi / 4.0) - 1.0)
    assert _line("criterion 2 wandering constant (rel err vs pi/4)", rel, 0.10, el)
    assert el < 60.0


# --- criterion 3: Gaussian-walk occupation constant --------------------------


@pytest.fixture(scope="module")
def gaussian_walk_constant():
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    est = estimate_an(builtin_gaussian_walk(), 100_000, 1000, rng)
    return est.mc / np.sqrt(100_000), time.perf_counter() - t0


def test_criterion_03_gaussian_walk_constant_as_stated(gaussian_walk_constant):
    # the stated constant 1/sqrt(2*pi) is off by exactly 2: left failing,
    # see the companion check below
    value, el = gaussian_walk_constant
    rel = abs(value / (1.0 / np.sqrt(2.0 * np.pi)) - 1.0)
    assert _line("criterion 3 gaussian-walk a_n/sqrt(n) (rel err vs 0.3989)",
                 rel, 0.10, el, note="known constant discrepancy")


def test_criterion_03_gaussian_walk_constant_corrected(gaussian_walk_constant):
    # E |N(0,1)|-local occupation of [0,1] gives sqrt(2/pi), twice the
    # stated value; the simulation matches this constant
    value, el = gaussian_walk_constant
    rel = abs(value / np.sqrt(2.0 / np.pi) - 1.0)
    assert _line("criterion 3c gaussian-walk a_n/sqrt(n) (rel err vs sqrt(2/pi))",
                 rel, 0.10, el)
    assert el < 300.0


# --- criterion 4: chain-CLT marginal ------------------------------------------


def test_criterion_04_marginal_fclt():
    rng = np.random.default_rng(104)
    chain = builtin_renewal_chain(BETA)
    f = short_excursion_fspec(chain)
    n, reps = 100_000, 10_000
    t0 = time.perf_counter()
    sums = partial_sum_ensemble(chain, f, n, [1.0], reps, rng, start="pi_D")[:, 0]
    lhs = sums / np.sqrt(chain.exact_an(n))
    m = ml_marginal_sample(BETA, 1.0, rng, size=reps)
    limit = (np.sqrt(gamma_fn(1.0 + BETA) * m) * sigma_f(chain, f)
             * rng.standard_normal(reps))
    stat, _ = ks_two_sample(lhs, limit)
    el = time.perf_counter() - t0
    assert _line("criterion 4 partial-sum marginal KS", stat, 0.03, el)
    assert el < 600.0


# --- criterion 5: entrance law -------------------------------------------------


def test_criterion_05_entrance_law():
    rng = np.random.default_rng(105)
    chain = builtin_renewal_chain(BETA)
    f = short_excursion_fspec(chain)
    n, reps = 100_000, 10_000
    track = sorted(f.values)
    ens = countdown_ensemble(chain, n, [1.0], reps, rng, start="mu_n", track=track)
    frac = ens["tau_d"] / n
    stat_cdf = ks_statistic(frac, lambda x: np.clip(x, 0, 1) ** (1.0 - BETA))
    assert _line("criterion 5 entrance fraction KS vs x**(1-beta)", stat_cdf, 0.02)

    fv = np.array([f.values[a] for a in ens["track"]])
    lhs = (ens["counts"][:, 0, :] @ fv) / np.sqrt(chain.exact_an(n))
    t_entry = rng.random(reps) ** (1.0 / (1.0 - BETA))
    m = ml_values(BETA, (1.0 - t_entry)[:, None], rng)[:, 0]
    limit = (np.sqrt(gamma_fn(1.0 + BETA) * m) * sigma_f(chain, f)
             * rng.standard_normal(reps))
    stat_m, _ = ks_two_sample(lhs, limit)
    assert _line("criterion 5 shifted entrance marginal KS", stat_m, 0.03)


# --- criterion 6: main functional CLT ------------------------------------------


@pytest.fixture(scope="module")
def main_fclt_reports():
    out = {}
    t_start = time.perf_counter()
    for alpha in (0.8, 1.5):
        chain = builtin_renewal_chain(BETA)
        spec = IdProcessSpec(
            chain=chain,
            f=short_excursion_fspec(chain),
            levy=pure_stable_spec(alpha),
            n=100_000,
            t_grid=[0.0, 1.0],
        )
        rng = np.random.default_rng(106)
        lhs, _ = partial_sum_paths(spec, 10_000, rng, budget_j=150)
        reports = {}
        for corrected in (True, False):
            reports[corrected] = fclt_experiment(
                spec, 10_000, np.random.default_rng(107),
                corrected_scale=corrected, lhs_values=lhs,
            )
        out[alpha] = reports
    out["elapsed"] = time.perf_counter() - t_start
    return out


def test_criterion_06_main_fclt_scale_as_stated(main_fclt_reports):
    # with the limit scale exactly as displayed, the CF discrepancy
    # plateaus near 1 - 2**(-1/alpha): left failing, see the companion
    worst = max(
        main_fclt_reports[a][False].max_cf_discrepancy for a in (0.8, 1.5)
    )
    assert _line("criterion 6 main FCLT CF discrepancy (stated scale)",
                 worst, 0.05, main_fclt_reports["elapsed"],
                 note="known limit-scale discrepancy")


def test_criterion_06_main_fclt_tail_matched_scale(main_fclt_reports):
    # matching one-sided Levy tails forces an extra 2**(1/alpha) on the
    # limit scale; with it the pre-limit and limit CFs agree
    worst = max(
        main_fclt_reports[a][True].max_cf_discrepancy for a in (0.8, 1.5)
    )
    el = main_fclt_reports["elapsed"]
    assert _line("criterion 6c main FCLT CF discrepancy (tail-matched scale)",
                 worst, 0.05, el)
    assert el < 1800.0


# --- criterion 7: c_n regular variation ----------------------------------------


def test_criterion_07_cn_regular_variation():
    worst = 0.0
    for alpha in (0.8, 1.5):
        chain = builtin_renewal_chain(BETA)
        spec = IdProcessSpec(
            chain=chain, f=short_excursion_fspec(chain),
            levy=pure_stable_spec(alpha), n=1000, t_grid=[0.0, 1.0],
        )
        ns = np.unique(np.geomspace(1e3, 1e6, 10).astype(int))
        cs = [compute_cn(spec, n=int(k)).c_n for k in ns]
        slope = np.polyfit(np.log(ns), np.log(cs), 1)[0]
        target = BETA / 2.0 + (1.0 - BETA) / alpha
        worst = max(worst, abs(slope - target))
    assert _line("criterion 7 c_n log-log slope error", worst, 0.05)


# --- criterion 8: self-similarity / stationary increments ----------------------


def test_criterion_08_sssi_properties(tmp_path):
    t0 = time.perf_counter()
    failures = []
    for alpha, beta, gam in ((0.8, 0.5, 2.0), (1.2, 0.5, 1.6)):
        cfg = validate({
            "kind": "sssi", "seed": "108", "alpha": str(alpha),
            "beta": str(beta), "gamma": str(gam),
            "shifts": "0.0, 0.5, 1.0",
        })
        rows = run_sssi(cfg, str(tmp_path), plots=False)
        failures += [r for r in rows if r["status"] == "FAIL"]
        for r in rows:
            _line(f"criterion 8 {r['check']} [{r['params']}]",
                  abs(r["value"] - r["target"]), r["tolerance"] + 1e-12)
    el = time.perf_counter() - t0
    print(f"criterion 8 total time: {el:.0f}s")
    assert not failures


# --- criterion 9: boundary memory indices ---------------------------------------


def test_criterion_09_boundary_cases():
    rng = np.random.default_rng(109)
    # beta = 1: sub-stable law W**(1/gamma) * S_gamma(1)
    params = YParams(alpha=1.2, beta=1.0, gamma=1.6)
    series = y_ensemble(params, [1.0], 20_000, rng)[:, 0]
    w = sample_subgaussian_w(params, rng, size=20_000)
    direct = w ** (1.0 / 1.6) * sample_sas(1.6, 1.0, rng, size=20_000)
    stat1, _ = ks_two_sample(series, direct)
    assert _line("criterion 9 beta=1 sub-stable marginal KS", stat1, 0.02)

    # beta = 0: SaS Levy-motion marginal; the series marks are exponential
    # holding times, so the scale constant is E|sqrt(E) N|**alpha, which we
    # estimate by an independent MC oracle
    params0 = YParams(alpha=1.2, beta=0.0, gamma=2.0)
    vals = y_ensemble(params0, [1.0], 20_000, rng)[:, 0]
    e = rng.standard_exponential(1_000_000)
    z = rng.standard_normal(1_000_000)
    scale = np.mean(np.abs(np.sqrt(e) * z) ** 1.2) ** (1.0 / 1.2)
    ref = sample_sas(1.2, scale, rng, size=20_000)
    stat0, _ = ks_two_sample(vals, ref)
    assert _line("criterion 9 beta=0 stable-motion marginal KS", stat0, 0.02)


# --- criterion 10: fractional moment bounds --------------------------------------


def test_criterion_10_moment_bounds():
    rng = np.random.default_rng(110)
    chk = check_pos_bound(
        PosLevySpec(atom_values=[1.0], atom_masses=[1.0]), 1.5, 400_000, rng
    )
    rel = abs(chk.lhs / poisson_p_moment(1.0, 1.5) - 1.0)
    assert _line("criterion 10 Poisson(1) p=1.5 moment (rel err)", rel, 0.02)

    fam, hold = _pos_family()
    cal = calibrate_cp(fam, 1.5, 200_000, rng, holdout=hold)
    assert _line("criterion 10 positive-case holdout violations",
                 float(len(cal.violations)), 0.5)

    sfam, shold = _sym_family()
    scal = calibrate_cp(sfam, 2.5, 200_000, rng, holdout=shold)
    assert _line("criterion 10 symmetric-case holdout violations",
                 float(len(scal.violations)), 0.5)


# --- criterion 11: restart/overshoot identity -------------------------------------


def test_criterion_11_overshoot_restart_identity():
    rng = np.random.default_rng(111)
    beta, r, t = 0.5, 1.0, 1.0
    reps = 50_000
    joint = ml_values(beta, np.tile([r, r + t], (reps, 1)), rng)
    lhs = joint[:, 1] - joint[:, 0]
    delta = sample_overshoot(beta, r, rng, size=reps)
    shifted = np.clip(t - delta, 0.0, None)
    rhs = np.zeros(reps)
    pos = shifted > 0
    rhs[pos] = (
        ml_marginal_sample(beta, 1.0, rng, size=int(pos.sum()))
        * shifted[pos] ** beta
    )
    stat, _ = ks_two_sample(lhs, rhs)
    assert _line("criterion 11 restart identity marginal KS", stat, 0.02)


# --- criterion 12: determinism ------------------------------------------------------


def test_criterion_12_deterministic_rerun(tmp_path):
    cfg_path = tmp_path / "subordinator.ini"
    cfg_path.write_text(
        "[experiment]\nkind = subordinator\nseed = 112\n"
    )
    outs = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert cli_main(["run", str(cfg_path), "--out", out, "--no-plots"]) == EXIT_OK
        outs.append(open(os.path.join(out, "results.csv"), "rb").read())
    identical = outs[0] == outs[1]
    print(f"{'PASS' if identical else 'FAIL'} criterion 12 byte-identical rerun")
    assert identical
