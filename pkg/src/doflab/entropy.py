"""Finite laws, exact entropies and the sliding-window sub-modularity check."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import BudgetExceeded, DomainError

ENUM_BUDGET = 2 ** 22


@dataclass(frozen=True)
class FinitePmf:
    support: tuple[tuple, ...]
    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(tuple(s) for s in self.support))
        object.__setattr__(self, "probs", tuple(self.probs))
        if len(self.support) != len(self.probs):
            raise DomainError("support and probabilities differ in length")
        if any(p < 0 for p in self.probs):
            raise DomainError("negative probability")
        total = sum(self.probs)
        exact = all(isinstance(p, (int, Fraction)) for p in self.probs)
        if (exact and total != 1) or (not exact and abs(float(total) - 1) > 1e-12):
            raise DomainError(f"probabilities sum to {total}")

    @classmethod
    def uniform(cls, alphabets: Sequence[int]) -> "FinitePmf":
        size = math.prod(alphabets)
        if size > ENUM_BUDGET:
            raise BudgetExceeded(f"{size} outcomes exceed the enumeration budget")
        sup = tuple(product(*(range(a) for a in alphabets)))
        return cls(sup, (Fraction(1, size),) * size)

    @classmethod
    def from_array(cls, table: np.ndarray) -> "FinitePmf":
        """Joint pmf from an n-dimensional probability table."""
        table = np.asarray(table, dtype=np.float64)
        idx = np.argwhere(table > 0)
        probs = table[tuple(idx.T)]
        return cls(tuple(map(tuple, idx.tolist())), tuple((probs / probs.sum()).tolist()))


@dataclass(frozen=True)
class EntropyEstimate:
    bits: float
    method: str = "exact-given-draw"
    draws: int = 1
    seed: int | None = None
    stderr: float = 0.0


def _entropy_from_masses(masses) -> float:
    h = 0.0
    for p in masses:
        p = float(p)
        if p > 0:
            h -= p * math.log2(p)
    return h


def induced(evaluator: Callable[[tuple], Hashable], pmf: FinitePmf) -> dict:
    if len(pmf.support) > ENUM_BUDGET:
        raise BudgetExceeded(f"{len(pmf.support)} outcomes exceed the enumeration budget")
    out: dict = defaultdict(lambda: 0)
    for x, p in zip(pmf.support, pmf.probs):
        out[evaluator(x)] += p
    return dict(out)


def exact_entropy(evaluator: Callable[[tuple], Hashable], pmf: FinitePmf) -> EntropyEstimate:
    """Entropy of evaluator(X) for X ~ pmf, by enumeration of the support."""
    return EntropyEstimate(_entropy_from_masses(induced(evaluator, pmf).values()))


def conditional_exact_entropy(evaluator, label: Callable[[tuple], Hashable],
                              pmf: FinitePmf) -> float:
    """H(evaluator(X) | label(X)) = H(f, w) − H(w)."""
    joint = exact_entropy(lambda x: (evaluator(x), label(x)), pmf).bits
    return joint - exact_entropy(label, pmf).bits


def project(indices: Sequence[int]) -> Callable[[tuple], tuple]:
    idx = tuple(indices)
    return lambda x: tuple(x[i] for i in idx)


def check_submodularity(variables: Sequence[Callable[[tuple], Hashable]], n: int,
                        pmf: FinitePmf, label: Callable[[tuple], Hashable] | None = None,
                        tol: float = 1e-9) -> bool:
    """n·H(X_1..X_m|W) <= Σ_i H(X_i..X_{i+n-1}|W), indices taken cyclically."""
    m = len(variables)
    if not 1 <= n <= m:
        raise DomainError(f"window {n} must lie in 1..{m}")
    lab = label or (lambda x: 0)

    def joint(idx):
        fs = [variables[i % m] for i in idx]
        return conditional_exact_entropy(lambda x: tuple(f(x) for f in fs), lab, pmf)

    lhs = n * joint(range(m))
    rhs = sum(joint(range(i, i + n)) for i in range(m))
    return lhs <= rhs + tol


def submodularity_sides(table: np.ndarray, n: int) -> tuple[float, float]:
    """(LHS, RHS) of the window inequality for the coordinates of a pmf table."""
    table = np.asarray(table, dtype=np.float64)
    m = table.ndim

    def H(axes):
        keep = sorted({a % m for a in axes})
        drop = tuple(a for a in range(m) if a not in keep)
        marg = table.sum(axis=drop) if drop else table
        p = marg[marg > 0]
        return float(-(p * np.log2(p)).sum())

    return n * H(range(m)), sum(H(range(i, i + n)) for i in range(m))
