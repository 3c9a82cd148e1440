"""Error-vs-budget sweeps, opportunity threshold and minimal error."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coding import ModelParams
from .dp import HorizonSpec, solve


def minimal_error_closed_form(T: int, params: ModelParams) -> float:
    """Optimal T-stage error once the budget no longer binds (N >= T)."""
    r = 1.0 / math.sqrt(1.0 + params.gamma)
    return T * 2.0 / params.rate**2 * (1.0 - (r + 1.0) * math.exp(-r))


def opportunity_threshold_estimate(T: int, params: ModelParams) -> float:
    """Expected transmissions with every threshold at its floor: ``T exp(-rate sqrt(m))``."""
    return T * math.exp(-params.rate * math.sqrt(params.m))


def opportunity_threshold_exp_m(T: int, params: ModelParams) -> float:
    """The alternative candidate ``T exp(-rate m)``; kept for comparison only."""
    return T * math.exp(-params.rate * params.m)


@dataclass
class SweepResult:
    """J*(1, N) for N = 0..T at several SNRs, with analytic overlay points.

    ``curves[gamma][N]`` holds J*(1, N); ``overlay`` holds
    ``(gamma, opportunity_threshold_estimate, minimal_error)`` triples.
    """

    T: int
    rate: float
    curves: dict = field(default_factory=dict)
    overlay: list = field(default_factory=list)

    @property
    def gammas(self) -> list:
        return list(self.curves)

    def rows(self):
        for g, curve in self.curves.items():
            for n, j in enumerate(curve):
                yield g, n, float(j)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("gamma", "N", "J_star"))
        for g, n, j in self.rows():
            w.writerow((repr(float(g)), n, repr(j)))
        return buf.getvalue()

    def overlay_json(self) -> str:
        pts = [
            {"gamma": g, "opportunity_threshold": thr, "minimal_error": err}
            for g, thr, err in self.overlay
        ]
        return json.dumps({"T": self.T, "rate": self.rate, "overlay": pts}, indent=1)


def sweep_error_vs_budget(T: int, gammas, rate: float = 1.0, power: float = 1.0) -> SweepResult:
    """One solve per SNR at N = T; J*(1, N) for smaller N is read off the same table."""
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ValueError("need at least one SNR value")
    out = SweepResult(T=T, rate=rate)
    for g in gammas:
        params = ModelParams.from_snr(g, rate=rate, power=power)
        table = solve(HorizonSpec(T, T), params)
        out.curves[g] = np.array(table.J[0], copy=True)
        out.overlay.append(
            (g, opportunity_threshold_estimate(T, params), minimal_error_closed_form(T, params))
        )
    return out


def detect_plateau(sweep: SweepResult, gamma: float, rel_tol: float) -> int:
    """Smallest N with ``J*(1,N) - J*(1,T) <= rel_tol * J*(1,T)``."""
    try:
        curve = sweep.curves[float(gamma)]
    except KeyError:
        raise KeyError(f"SNR {gamma!r} not in sweep (have {sweep.gammas})") from None
    floor = curve[-1]
    hits = np.flatnonzero(curve - floor <= rel_tol * floor)
    return int(hits[0])


def threshold_vs_minimal_error_curve(gamma_grid, T: int, rate: float = 1.0) -> list:
    """``(opportunity_threshold_estimate, minimal_error)`` pairs along the SNR grid."""
    gamma_grid = [float(g) for g in gamma_grid]
    if not gamma_grid or any(not g > 0 for g in gamma_grid):
        raise ValueError("SNR grid must be nonempty and positive")
    pairs = []
    for g in gamma_grid:
        p = ModelParams.from_snr(g, rate=rate)
        pairs.append((opportunity_threshold_estimate(T, p), minimal_error_closed_form(T, p)))
    return pairs
