"""Sweep reports and the normalized-slack verdict rule."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .power_levels import PowerScale

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"
EXIT_CODES = {PASS: 0, FAIL: 1, INCONCLUSIVE: 3}
DEFAULT_TAU = 0.15
DEFAULT_SWEEP = (16, 64, 256, 1024)
TREND_TOL = 1e-9


def _r(x: float) -> float:
    return float(round(x, 10)) + 0.0  # normalise -0.0


@dataclass
class SweepReport:
    instance: str
    P_sweep: list[int]
    lhs: list[float]
    rhs: list[float]
    gap: list[float]
    stderr: list[float]
    seed: int
    draws: int
    tau: float = DEFAULT_TAU
    sense: str = "le"
    extra: dict = field(default_factory=dict)

    @property
    def log_pbar(self) -> list[float]:
        return [math.log2(PowerScale(P).pbar(1)) for P in self.P_sweep]

    @property
    def normalized_slack(self) -> list[float]:
        return [g / lp for g, lp in zip(self.gap, self.log_pbar)]

    @property
    def decision_slack(self) -> list[float]:
        """Normalized slack after subtracting two standard errors."""
        return [(g - 2 * s) / lp for g, s, lp in zip(self.gap, self.stderr, self.log_pbar)]

    @property
    def verdict(self) -> str:
        return slack_verdict(self.decision_slack, self.tau)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        d = {
            "instance": self.instance,
            "P_sweep": list(self.P_sweep),
            "lhs": [_r(v) for v in self.lhs],
            "rhs": [_r(v) for v in self.rhs],
            "gap": [_r(v) for v in self.gap],
            "normalized_slack": [_r(v) for v in self.normalized_slack],
            "decision_slack": [_r(v) for v in self.decision_slack],
            "pass": self.passed,
            "verdict": self.verdict,
            "seed": self.seed,
            "draws": self.draws,
            "stderr": [_r(v) for v in self.stderr],
            "tau": self.tau,
            "sense": self.sense,
        }
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["P", "log2_Pbar", "lhs", "rhs", "gap", "stderr", "normalized_slack"])
        for row in zip(self.P_sweep, self.log_pbar, self.lhs, self.rhs, self.gap,
                       self.stderr, self.normalized_slack):
            w.writerow([row[0]] + [repr(_r(v)) for v in row[1:]])
        return buf.getvalue()


def slack_verdict(slack: Sequence[float], tau: float = DEFAULT_TAU) -> str:
    """PASS iff slack is nonincreasing over the top half of the sweep and ends <= tau.

    Slack values at or below zero mean the inequality already holds at that P
    without any o(log P̄) allowance; they count as zero in the trend test.
    """
    if len(slack) < 2:
        return INCONCLUSIVE
    tail = [max(s, 0.0) for s in slack[-max(2, math.ceil(len(slack) / 2)):]]
    trend = all(b <= a + TREND_TOL for a, b in zip(tail, tail[1:]))
    return PASS if trend and slack[-1] <= tau else FAIL


def env_threads(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("DOFLAB_THREADS", default)))
    except ValueError:
        return default


def run_sweep(instance: str, P_sweep: Sequence[int], draws: int, seed: int,
              per_draw: Callable[[PowerScale, int], tuple[float, float]],
              sense: str = "le", tau: float = DEFAULT_TAU, threads: int = 1,
              extra: dict | None = None) -> SweepReport:
    """Average per-draw (lhs, rhs) pairs at every P.

    ``sense`` is "le" for claims lhs <= rhs + o(log P̄) and "ge" for
    lhs >= rhs + o(log P̄); gap is the violation in both cases.
    """
    if draws < 1:
        raise ValueError("need at least one draw")
    L, R, G, S = [], [], [], []
    for P in P_sweep:
        scale = PowerScale(P)
        work = lambda i: per_draw(scale, i)  # noqa: E731
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                res = list(ex.map(work, range(draws)))
        else:
            res = [work(i) for i in range(draws)]
        lhs = np.array([r[0] for r in res], dtype=np.float64)
        rhs = np.array([r[1] for r in res], dtype=np.float64)
        gap = lhs - rhs if sense == "le" else rhs - lhs
        L.append(float(lhs.mean()))
        R.append(float(rhs.mean()))
        G.append(float(gap.mean()))
        S.append(float(gap.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0)
    return SweepReport(instance, list(P_sweep), L, R, G, S, seed, draws, tau,
                       sense, dict(extra or {}))
