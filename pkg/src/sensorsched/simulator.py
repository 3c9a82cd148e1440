"""Closed-loop Monte Carlo rollouts of sensor -> encoder -> channel -> decoder.

Episode ``i`` of a batch draws everything from ``RngStream(seed, i)``: first
the ``T`` source samples, then a block of ``T`` channel-noise samples of which
the ``j``-th transmission consumes entry ``j``. The source path therefore does
not depend on the budget, and a batch is independent of how episodes are
grouped or distributed over workers.

Episodes of a block advance in lockstep over time; sensor and decoder each
keep their own count of remaining transmissions, the decoder inferring it
only from whether a channel symbol arrived.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .coding import EPSILON, ChannelSymbol, CodingError, SideSymbol, decode, encode, sign
from .distributions import RngStream, sample_gamma, sample_laplace
from .dp import ValueTable

BLOCK = 2048

TRACE_HEADER = ("t", "x", "e_before", "u", "y", "v", "ytilde", "s", "xhat", "sq_err")


@dataclass(frozen=True)
class StepRecord:
    t: int
    x: float
    e_before: int
    u: int
    y: ChannelSymbol
    v: Optional[float]
    ytilde: ChannelSymbol
    s: SideSymbol
    xhat: float
    sq_err: float


@dataclass(frozen=True)
class EpisodeTrace:
    records: tuple
    total_cost: float
    transmissions_used: int

    def to_csv(self) -> str:
        def cell(v):
            if v is EPSILON or v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in self.records:
            w.writerow([cell(getattr(r, k)) for k in TRACE_HEADER])
        return buf.getvalue()


@dataclass(frozen=True)
class BatchStats:
    """Aggregates over a batch of independent episodes.

    Besides the per-episode totals it keeps the squared error split by
    transmitting and idle steps, pooled over all steps of the batch.
    """

    episodes: int
    mean_total_cost: float
    std_err_total_cost: float
    mean_transmissions: float
    std_err_transmissions: float
    leftover_budget_histogram: tuple
    transmit_steps: int
    mean_sq_err_transmit: float
    idle_steps: int
    mean_sq_err_idle: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["leftover_budget_histogram"] = list(self.leftover_budget_histogram)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


class _Decoder:
    """Receiver side of a block: sees channel symbols only."""

    def __init__(self, table: ValueTable, n: int):
        self.params = table.params
        self.cap = table.cap
        self.thresholds = table.threshold_matrix()
        self.budget = np.full(n, table.N, dtype=np.int64)

    def step(self, t: int, ytilde: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Estimate from one time slot; absent symbols are NaN (channel) and 0 (sign)."""
        present = ~np.isnan(ytilde)
        if np.any(present != (s != 0)):
            raise CodingError("channel and side symbols must be both present or both absent")
        xhat = np.zeros(ytilde.shape[0])
        if present.any():
            beta = self.thresholds[t, np.minimum(self.budget[present], self.cap)]
            xhat[present] = decode(ytilde[present], s[present], beta, self.params)
            self.budget[present] -= 1
        return xhat


def _draw_block(table: ValueTable, seed: int, start: int, stop: int):
    T = table.T
    source, noise = table.params.source, table.params.noise
    n = stop - start
    X = np.empty((n, T))
    V = np.empty((n, T))
    for row, i in enumerate(range(start, stop)):
        rng = RngStream(seed, i)
        X[row] = sample_laplace(rng, source, T)
        V[row] = sample_gamma(rng, noise, T)
    return X, V


def _rollout(table: ValueTable, X: np.ndarray, V: np.ndarray) -> dict:
    """Run the optimal policy on pre-drawn source and noise paths."""
    n, T = X.shape
    params, cap = table.params, table.cap
    thresholds = table.threshold_matrix()

    budget = np.full(n, table.N, dtype=np.int64)
    used = np.zeros(n, dtype=np.int64)
    decoder = _Decoder(table, n)

    E = np.empty((n, T), dtype=np.int64)
    U = np.zeros((n, T), dtype=bool)
    Y = np.full((n, T), np.nan)
    Vused = np.full((n, T), np.nan)
    Yt = np.full((n, T), np.nan)
    S = np.zeros((n, T), dtype=np.int64)
    Xhat = np.empty((n, T))
    Ed = np.empty((n, T), dtype=np.int64)

    for t in range(T):
        x = X[:, t]
        E[:, t] = budget
        beta = thresholds[t, np.minimum(budget, cap)]
        u = (budget > 0) & (np.abs(x) > beta)
        idx = np.flatnonzero(u)

        y = encode(x[idx], beta[idx], params)
        v = V[idx, used[idx]]
        ytilde = y + v
        s = sign(x[idx])

        U[:, t] = u
        Y[idx, t] = y
        Vused[idx, t] = v
        Yt[idx, t] = ytilde
        S[idx, t] = s

        Ed[:, t] = decoder.budget
        Xhat[:, t] = decoder.step(t, Yt[:, t], S[:, t])
        budget -= u
        used += u

    return {
        "x": X, "e_before": E, "u": U, "y": Y, "v": Vused, "ytilde": Yt,
        "s": S, "xhat": Xhat, "sq_err": (X - Xhat) ** 2, "decoder_budget": Ed,
    }


def _row_fsum(a: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in a.tolist()])


def _block_summary(table: ValueTable, seed: int, start: int, stop: int) -> dict:
    X, V = _draw_block(table, seed, start, stop)
    r = _rollout(table, X, V)
    sq, u = r["sq_err"], r["u"]
    tx = u.sum(axis=1)
    return {
        "total": _row_fsum(sq),
        "tx": tx,
        "sq_tx": _row_fsum(np.where(u, sq, 0.0)),
        "sq_idle": _row_fsum(np.where(u, 0.0, sq)),
    }


def run_episode(table: ValueTable, rng: RngStream) -> EpisodeTrace:
    T = table.T
    X = sample_laplace(rng, table.params.source, T)[None, :]
    V = sample_gamma(rng, table.params.noise, T)[None, :]
    r = {k: v[0] for k, v in _rollout(table, X, V).items()}

    records = []
    for t in range(T):
        sent = bool(r["u"][t])
        records.append(StepRecord(
            t=t + 1,
            x=float(r["x"][t]),
            e_before=int(r["e_before"][t]),
            u=int(sent),
            y=float(r["y"][t]) if sent else EPSILON,
            v=float(r["v"][t]) if sent else None,
            ytilde=float(r["ytilde"][t]) if sent else EPSILON,
            s=int(r["s"][t]) if sent else EPSILON,
            xhat=float(r["xhat"][t]),
            sq_err=float(r["sq_err"][t]),
        ))
    return EpisodeTrace(
        records=tuple(records),
        total_cost=math.fsum(r["sq_err"].tolist()),
        transmissions_used=int(r["u"].sum()),
    )


def _summary_job(args):
    return _block_summary(*args)


def run_batch(table: ValueTable, episodes: int, seed: int, workers: int = 1) -> BatchStats:
    """Simulate ``episodes`` independent episodes; episode ``i`` uses stream ``i``.

    Results are merged in episode order with exactly rounded sums, so they do
    not depend on ``workers``.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    jobs = [(table, seed, a, min(a + BLOCK, episodes)) for a in range(0, episodes, BLOCK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_summary_job, jobs))
    else:
        parts = [_summary_job(j) for j in jobs]

    total = np.concatenate([p["total"] for p in parts])
    tx = np.concatenate([p["tx"] for p in parts])
    sq_tx = np.concatenate([p["sq_tx"] for p in parts])
    sq_idle = np.concatenate([p["sq_idle"] for p in parts])

    def mean_se(a):
        a = a.astype(float).tolist()
        mean = math.fsum(a) / len(a)
        if len(a) < 2:
            return mean, math.nan
        var = math.fsum((v - mean) ** 2 for v in a) / (len(a) - 1)
        return mean, math.sqrt(var / len(a))

    mean_cost, se_cost = mean_se(total)
    mean_tx, se_tx = mean_se(tx)
    n_tx = int(tx.sum())
    n_idle = episodes * table.T - n_tx
    hist = np.bincount(table.N - tx, minlength=table.N + 1)
    return BatchStats(
        episodes=episodes,
        mean_total_cost=mean_cost,
        std_err_total_cost=se_cost,
        mean_transmissions=mean_tx,
        std_err_transmissions=se_tx,
        leftover_budget_histogram=tuple(int(h) for h in hist),
        transmit_steps=n_tx,
        mean_sq_err_transmit=math.fsum(sq_tx.tolist()) / n_tx if n_tx else math.nan,
        idle_steps=n_idle,
        mean_sq_err_idle=math.fsum(sq_idle.tolist()) / n_idle if n_idle else math.nan,
    )
