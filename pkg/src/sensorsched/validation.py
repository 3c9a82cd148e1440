"""Numerical oracle suite behind ``sensorsched validate``.

Every check compares a closed form or the solver against something computed a
different way: adaptive quadrature, dense grid search, a brute-force
recursion built from numerically integrated moments, or Monte Carlo.
``stage_cost`` and ``threshold_formula`` can be swapped out to confirm that
the suite catches a wrong coefficient or a wrong plateau formula.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate, stats

from . import analysis
from .coding import ModelParams, decode, encode, optimal_stage_cost, stage_total_cost
from .distributions import (
    GammaParams,
    LaplaceParams,
    RngStream,
    laplace_pdf,
    laplace_truncated_second_moment,
    sample_gamma,
    sample_laplace,
)
from .dp import HorizonSpec, solve

SNR_GRID = (0.1, 1.0, 10.0)


def stage_cost_doubled_coefficient(beta, params: ModelParams):
    """Stage cost with ``(2 rate beta + 1)`` in place of ``(rate beta + 1)``."""
    lam = params.rate
    return 2.0 / lam**2 * (1.0 - (2.0 * lam * beta + 1.0) * math.exp(-lam * beta))


def _check(name, fn, *args, **kwargs):
    try:
        passed, details = fn(*args, **kwargs)
    except Exception as exc:  # a crashing check is a failing check
        passed, details = False, {"error": f"{type(exc).__name__}: {exc}"}
    return {"name": name, "passed": bool(passed), "details": details}


def check_truncated_moment_quadrature():
    worst_inner = worst_total = 0.0
    for lam in (0.5, 1.0, 3.0):
        p = LaplaceParams(lam)
        full = 2.0 / lam**2
        for beta in (1e-3, 0.1, 0.5, 1.0, 2.0, 5.0):
            inner, _ = integrate.quad(lambda x: x * x * laplace_pdf(x, p), -beta, beta,
                                      epsabs=0.0, epsrel=1e-12)
            outer, _ = integrate.quad(lambda x: 2.0 * x * x * laplace_pdf(x, p), beta, np.inf,
                                      epsabs=0.0, epsrel=1e-12)
            closed = laplace_truncated_second_moment(beta, p)
            worst_inner = max(worst_inner, abs(closed - inner) / inner)
            worst_total = max(worst_total, abs(closed + outer - full) / full)
    return worst_inner <= 1e-10 and worst_total <= 1e-8, {
        "max_rel_err_vs_quadrature": worst_inner,
        "max_rel_err_complement": worst_total,
    }


def check_threshold_grid_search(step=1e-5):
    grid = np.arange(0.0, 10.0 + step / 2, step)[1:]
    worst = 0.0
    cases = []
    for gamma in (0.5, 1.0, 2.0):
        params = ModelParams.from_snr(gamma)
        for c in (0.0, 0.5, 2.0):
            costs = stage_total_cost(grid, c, params)
            found = float(grid[np.argmin(costs)])
            exact = math.sqrt(c + params.m)
            worst = max(worst, abs(found - exact))
            cases.append({"gamma": gamma, "c": c, "grid_argmin": found, "sqrt_c_plus_m": exact})
    return worst <= step, {"max_abs_err": worst, "cases": cases}


class _NumericStage:
    """Stage cost from trapezoid-integrated moments on a fine threshold grid."""

    def __init__(self, params: ModelParams, step=1e-4, span=10.0):
        lam = params.rate
        self.m = params.m
        self.beta = np.arange(0.0, span / lam + step / 2, step / lam)
        pdf = 0.5 * lam * np.exp(-lam * self.beta)
        self.inner = 2.0 * integrate.cumulative_trapezoid(self.beta**2 * pdf, self.beta, initial=0.0)
        self.tail = 1.0 - 2.0 * integrate.cumulative_trapezoid(pdf, self.beta, initial=0.0)

    def minimum(self, c):
        costs = self.inner + (self.m + c) * self.tail
        return float(costs.min())


def brute_force_values(T: int, N: int, params: ModelParams) -> dict:
    """J(t, e) for t = 1..T+1, e = 0..N by grid minimisation at every node."""
    stage = _NumericStage(params)
    idle = params.source.variance
    J = {(T + 1, e): 0.0 for e in range(N + 1)}
    for t in range(T, 0, -1):
        J[t, 0] = J[t + 1, 0] + idle
        for e in range(1, N + 1):
            c = J[t + 1, e - 1] - J[t + 1, e]
            J[t, e] = J[t + 1, e] + stage.minimum(c)
    return J


def check_brute_force_dp(stage_cost=optimal_stage_cost, gammas=(0.5, 2.0), tol=1e-6):
    worst = 0.0
    for gamma in gammas:
        params = ModelParams.from_snr(gamma)
        for T in (1, 2, 3):
            for N in (0, 1, 2, 3):
                table = solve(HorizonSpec(T, N), params, stage_cost=stage_cost)
                ref = brute_force_values(T, N, params)
                for (t, e), v in ref.items():
                    worst = max(worst, abs(table.value(t, e) - v))
    return worst <= tol, {"max_abs_err": worst, "tol": tol}


def check_closed_form_vs_table(stage_cost=optimal_stage_cost, T=100, tol=1e-9):
    rows = []
    for gamma in SNR_GRID:
        params = ModelParams.from_snr(gamma)
        table = solve(HorizonSpec(T, T), params, stage_cost=stage_cost)
        closed = analysis.minimal_error_closed_form(T, params)
        dp = table.value(1, T)
        rows.append({"gamma": gamma, "dp": dp, "closed_form": closed,
                     "rel_err": abs(dp - closed) / closed})
    return all(r["rel_err"] <= tol for r in rows), {"rows": rows, "tol": tol}


def one_stage_monte_carlo(n_transmit: int, seed: int, gamma=1.0, rate=1.0, chunk=10**6):
    """Moments of the one-stage pipeline over ``n_transmit`` transmitted samples.

    Source draws below the floor threshold ``sqrt(m)`` are discarded. Returns
    ``{"power" | "mse" | "bias": (mean, standard error, target)}``.
    """
    params = ModelParams.from_snr(gamma, rate=rate)
    beta = math.sqrt(params.m)
    src, noise = RngStream(seed, 0), RngStream(seed, 1)
    tail = math.exp(-rate * beta)
    sums = {k: [[], []] for k in ("power", "mse", "bias")}
    done = 0
    while done < n_transmit:
        want = min(chunk, n_transmit - done)
        parts, have = [], 0
        while have < want:
            x = sample_laplace(src, params.source, int((want - have) / tail * 1.02) + 1000)
            x = x[np.abs(x) > beta]
            parts.append(x)
            have += x.size
        x = np.concatenate(parts)[:want]
        y = encode(x, beta, params)
        v = sample_gamma(noise, params.noise, want)
        err = x - decode(y + v, np.where(x < 0, -1, 1), beta, params)
        for key, a in (("power", y * y), ("mse", err * err), ("bias", err)):
            sums[key][0].append(float(a.sum()))
            sums[key][1].append(float((a * a).sum()))
        done += want

    targets = {"power": params.power, "mse": params.m, "bias": 0.0}
    out = {}
    n = n_transmit
    for key, (s1, s2) in sums.items():
        mean = math.fsum(s1) / n
        var = (math.fsum(s2) - n * mean * mean) / (n - 1)
        out[key] = (mean, math.sqrt(var / n), targets[key])
    return out


def check_power_mmse(n_transmit=10**6, seed=20240601, sigmas=4.0):
    res = one_stage_monte_carlo(n_transmit, seed)
    details = {k: {"mean": m, "std_err": se, "target": tgt, "z": (m - tgt) / se}
               for k, (m, se, tgt) in res.items()}
    return all(abs(d["z"]) <= sigmas for d in details.values()), details


def check_sampler_ks(n=10**5, seed=7, alpha=1e-3):
    rows = []
    for k in (0.1, 1.0, 10.0):
        x = sample_gamma(RngStream(seed, int(k * 10)), GammaParams(k, 1.0), n)
        res = stats.kstest(x, stats.gamma(k).cdf)
        rows.append({"dist": f"gamma(k={k})", "statistic": float(res.statistic), "pvalue": float(res.pvalue)})
    x = sample_laplace(RngStream(seed, 999), LaplaceParams(1.0), n)
    res = stats.kstest(x, stats.laplace().cdf)
    rows.append({"dist": "laplace(rate=1)", "statistic": float(res.statistic), "pvalue": float(res.pvalue)})
    return all(r["pvalue"] > alpha for r in rows), {"rows": rows, "alpha": alpha}


def plateau_report(threshold_formula: Callable = analysis.opportunity_threshold_estimate,
                   T=100, rel_tol=1e-3, band=0.10):
    sweep = analysis.sweep_error_vs_budget(T, SNR_GRID)
    rows = []
    for gamma in SNR_GRID:
        params = ModelParams.from_snr(gamma)
        plateau = analysis.detect_plateau(sweep, gamma, rel_tol)
        est = threshold_formula(T, params)
        sqrt_m = analysis.opportunity_threshold_estimate(T, params)
        exp_m = analysis.opportunity_threshold_exp_m(T, params)
        rows.append({
            "gamma": gamma,
            "plateau": plateau,
            "estimate": est,
            "rel_dev": (plateau - est) / est,
            "matches": abs(plateau - est) <= band * est,
            "exp_sqrt_m_candidate": sqrt_m,
            "exp_sqrt_m_matches": abs(plateau - sqrt_m) <= band * sqrt_m,
            "exp_m_candidate": exp_m,
            "exp_m_matches": abs(plateau - exp_m) <= band * exp_m,
        })
    return rows


def check_plateau(threshold_formula=analysis.opportunity_threshold_estimate, rel_tol=1e-3, band=0.10):
    rows = plateau_report(threshold_formula, rel_tol=rel_tol, band=band)
    return all(r["matches"] for r in rows), {"rel_tol": rel_tol, "band": band, "rows": rows}


def update_rule_finding(T=100):
    """Which stage-cost coefficient reproduces the N >= T closed form."""
    rows = []
    for gamma in SNR_GRID:
        params = ModelParams.from_snr(gamma)
        closed = analysis.minimal_error_closed_form(T, params)
        row = {"gamma": gamma, "closed_form": closed}
        for label, fn in (("rate_beta_plus_1", optimal_stage_cost),
                          ("two_rate_beta_plus_1", stage_cost_doubled_coefficient)):
            try:
                v = solve(HorizonSpec(T, T), params, stage_cost=fn).value(1, T)
                row[label] = {"J_1_T": v, "rel_err": abs(v - closed) / closed}
            except Exception as exc:
                row[label] = {"error": f"{type(exc).__name__}: {exc}"}
        rows.append(row)
    return rows


def run_validation(*, stage_cost=optimal_stage_cost,
                   threshold_formula=analysis.opportunity_threshold_estimate,
                   plateau_rel_tol=1e-3, mc_samples=10**6, seed=20240601) -> dict:
    checks = [
        _check("truncated_moment_vs_quadrature", check_truncated_moment_quadrature),
        _check("threshold_vs_grid_search", check_threshold_grid_search),
        _check("dp_vs_brute_force", check_brute_force_dp, stage_cost),
        _check("closed_form_vs_table", check_closed_form_vs_table, stage_cost),
        _check("one_stage_power_mmse_bias", check_power_mmse, mc_samples, seed),
        _check("sampler_goodness_of_fit", check_sampler_ks),
        _check("plateau_vs_opportunity_threshold", check_plateau, threshold_formula, plateau_rel_tol),
    ]
    findings = {
        "update_rule_coefficient": update_rule_finding(),
        "opportunity_threshold_candidates": plateau_report(rel_tol=plateau_rel_tol),
    }
    return {
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
        "findings": findings,
    }
