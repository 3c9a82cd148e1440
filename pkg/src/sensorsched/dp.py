"""Backward induction over (time, remaining budget).

With ``J[t, e]`` the optimal expected cost-to-go at stage ``t`` holding ``e``
transmissions, each stage is a one-stage problem whose communication price is
the opportunity cost ``c = J[t+1, e-1] - J[t+1, e]``:

    J[t, 0] = J[t+1, 0] + 2/rate^2
    J[t, e] = J[t+1, e] + stage(sqrt(c + m))

Budgets above ``T - t + 1`` are worth exactly as much as ``T - t + 1``, so the
budget axis is stored only up to ``min(N, T)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .coding import ModelParams, optimal_stage_cost


class SolverError(ArithmeticError):
    pass


@dataclass(frozen=True)
class HorizonSpec:
    T: int
    N: int

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"horizon T must be an integer >= 1, got {self.T!r}")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"budget N must be an integer >= 0, got {self.N!r}")

    @property
    def budget_cap(self) -> int:
        return min(self.N, self.T)


@dataclass(frozen=True, eq=False)
class ValueTable:
    """Solved value function, opportunity costs and thresholds.

    Arrays are zero-based: ``J[t-1, e]`` for ``t = 1..T+1`` and ``e = 0..cap``;
    ``beta[t-1, e-1]`` and ``c[t-1, e-1]`` for ``t = 1..T`` and ``e = 1..cap``.
    Use :meth:`value`, :meth:`threshold` and :meth:`opportunity_cost` for
    one-based lookups with budgets beyond the cap folded in.
    """

    params: ModelParams
    horizon: HorizonSpec
    J: np.ndarray
    beta: np.ndarray
    c: np.ndarray

    @property
    def T(self) -> int:
        return self.horizon.T

    @property
    def N(self) -> int:
        return self.horizon.N

    @property
    def cap(self) -> int:
        return self.J.shape[1] - 1

    def _check_t(self, t, last):
        if not 1 <= t <= last:
            raise IndexError(f"time index {t} outside 1..{last}")

    def _check_e(self, e, lowest):
        if not lowest <= e <= self.N:
            raise IndexError(f"budget index {e} outside {lowest}..{self.N}")
        return min(e, self.cap)

    def value(self, t: int, e: int) -> float:
        self._check_t(t, self.T + 1)
        return float(self.J[t - 1, self._check_e(e, 0)])

    def opportunity_cost(self, t: int, e: int) -> float:
        self._check_t(t, self.T)
        return float(self.c[t - 1, self._check_e(e, 1) - 1])

    def threshold(self, t: int, e: int) -> float:
        self._check_t(t, self.T)
        e = self._check_e(e, 0)
        if e == 0:
            return math.inf
        return float(self.beta[t - 1, e - 1])

    def threshold_matrix(self) -> np.ndarray:
        """Thresholds with an infinite column for an empty budget, shape ``(T, cap+1)``."""
        out = np.full((self.T, self.cap + 1), np.inf)
        out[:, 1:] = self.beta
        return out

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "horizon": {"T": self.T, "N": self.N},
            "J": self.J.tolist(),
            "beta": self.beta.tolist(),
            "c": self.c.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValueTable":
        horizon = HorizonSpec(**d["horizon"])
        cap = horizon.budget_cap

        def mat(key, rows, cols):
            a = np.array(d[key], dtype=float).reshape(rows, cols)
            a.flags.writeable = False
            return a

        return cls(
            params=ModelParams.from_dict(d["params"]),
            horizon=horizon,
            J=mat("J", horizon.T + 1, cap + 1),
            beta=mat("beta", horizon.T, cap),
            c=mat("c", horizon.T, cap),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ValueTable":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "ValueTable":
        return cls.from_json(Path(path).read_text())


def solve(
    horizon: HorizonSpec,
    params: ModelParams,
    *,
    stage_cost: Callable[[float, ModelParams], float] = optimal_stage_cost,
) -> ValueTable:
    """Fill the value table by backward induction in O(T * min(N, T)).

    ``stage_cost(beta, params)`` is the minimised one-stage cost at threshold
    ``beta``; it is a parameter only so validation can inject broken variants.
    """
    T, cap = horizon.T, horizon.budget_cap
    lam2 = params.rate**2
    m = params.m
    idle = 2.0 / lam2

    J = np.zeros((T + 1, cap + 1))
    beta = np.zeros((T, cap))
    c = np.zeros((T, cap))
    for t in range(T - 1, -1, -1):
        nxt = J[t + 1]
        J[t, 0] = nxt[0] + idle
        for e in range(1, cap + 1):
            cost = nxt[e - 1] - nxt[e]
            if not math.isfinite(cost):
                raise SolverError(f"non-finite opportunity cost at t={t + 1}, e={e}")
            if cost < 0:
                raise SolverError(
                    f"negative opportunity cost {float(cost)!r} at t={t + 1}, e={e}; "
                    "value function is not monotone in the budget"
                )
            b = math.sqrt(cost + m)
            c[t, e - 1] = cost
            beta[t, e - 1] = b
            J[t, e] = nxt[e] + stage_cost(b, params)
        if not np.all(np.isfinite(J[t])):
            raise SolverError(f"non-finite value at t={t + 1}")

    for a in (J, beta, c):
        a.flags.writeable = False
    return ValueTable(params=params, horizon=horizon, J=J, beta=beta, c=c)


def opportunity_cost(table: ValueTable, t: int, e: int) -> float:
    return table.opportunity_cost(t, e)


def policy_threshold(table: ValueTable, t: int, e: int) -> float:
    """Threshold used at stage ``t`` with ``e`` transmissions left; ``inf`` when ``e == 0``."""
    return table.threshold(t, e)
