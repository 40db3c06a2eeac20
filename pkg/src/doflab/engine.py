"""Exact entropy of floor-sum observables of independent inputs.

An observable is a tuple of integer components, each a sum over inputs of
⌊g · (x_j)^γ_δ⌋, optionally followed by power-level windows applied to the
summed components.  Because every component is a sum of per-input
contributions, the joint law is a convolution over inputs; no enumeration of
the full input space is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded
from .linear_forms import LinearFormSpec
from .power_levels import PowerScale, as_fraction

DEFAULT_BUDGET = 8_000_000


@dataclass(frozen=True)
class Term:
    index: int
    low: Fraction
    high: Fraction
    coef: float = 1.0


@dataclass(frozen=True)
class Component:
    terms: tuple[Term, ...]

    @classmethod
    def from_form(cls, spec: LinearFormSpec, coefs: Sequence[float]) -> "Component":
        return cls(tuple(Term(t.index, t.delta, t.gamma, float(g))
                         for t, g in zip(spec.terms, coefs)))

    @classmethod
    def slice(cls, index: int, low, high) -> "Component":
        """A bare input window (X_index)^high_low, no coefficient."""
        return cls((Term(index, as_fraction(low), as_fraction(high)),))

    @classmethod
    def linear(cls, windows: Iterable[tuple[int, object, object]],
               coefs: Sequence[float]) -> "Component":
        return cls(tuple(Term(j, as_fraction(lo), as_fraction(hi), float(g))
                         for (j, lo, hi), g in zip(windows, coefs)))

    @property
    def inputs(self) -> set[int]:
        return {t.index for t in self.terms}


Window = tuple[int, Fraction | None, Fraction | None]


@dataclass(frozen=True)
class Observable:
    components: tuple[Component, ...]
    post: tuple[Window, ...] | None = None

    @classmethod
    def of(cls, *components: Component) -> "Observable":
        return cls(tuple(components))

    @property
    def outputs(self) -> tuple[Window, ...]:
        if self.post is not None:
            return self.post
        return tuple((i, None, None) for i in range(len(self.components)))

    def windowed(self, low, high) -> "Observable":
        """Apply the window (·)^high_low to every output coordinate."""
        low, high = as_fraction(low), as_fraction(high)
        out = []
        for i, lo, hi in self.outputs:
            if lo is not None:
                raise ValueError("nested output windows are not supported")
            out.append((i, low, high))
        return Observable(self.components, tuple(out))

    def top(self, lam) -> "Observable":
        return self.windowed(1 - as_fraction(lam), 1)

    def __add__(self, other: "Observable") -> "Observable":
        """Joint observable (concatenation of outputs)."""
        shift = len(self.components)
        post = self.outputs + tuple((i + shift, lo, hi) for i, lo, hi in other.outputs)
        return Observable(self.components + other.components, post)

    @property
    def inputs(self) -> set[int]:
        return set().union(*(c.inputs for c in self.components)) if self.components else set()


def _aggregate(rows: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate rows, summing their probabilities (rows come back sorted)."""
    n, d = rows.shape
    if n == 0 or d == 0:
        return np.zeros((1 if n else 0, d), dtype=np.int64), np.array([probs.sum()] if n else [])
    lo = rows.min(axis=0)
    width = rows.max(axis=0) - lo + 1
    if float(np.prod(width.astype(np.float64))) < 2.0 ** 62:
        strides = np.ones(d, dtype=np.int64)
        for k in range(d - 2, -1, -1):
            strides[k] = strides[k + 1] * width[k + 1]
        keys = (rows - lo) @ strides
        uniq, inv = np.unique(keys, return_inverse=True)
        out = np.empty((len(uniq), d), dtype=np.int64)
        rem = uniq.copy()
        for k in range(d):
            out[:, k], rem = np.divmod(rem, strides[k])
        out += lo
    else:
        out, inv = np.unique(rows, axis=0, return_inverse=True)
    return out, np.bincount(inv.ravel(), weights=probs, minlength=len(out))


def contributions(components: Sequence[Component], j: int, values: np.ndarray,
                  scale: PowerScale) -> np.ndarray:
    out = np.zeros((len(values), len(components)), dtype=np.int64)
    for c, comp in enumerate(components):
        for t in comp.terms:
            if t.index == j:
                v = scale.mid(values, t.low, t.high)
                if t.coef == 1.0:
                    out[:, c] += v
                else:
                    out[:, c] += np.trunc(t.coef * v).astype(np.int64)
    return out


def joint_pmf(components: Sequence[Component], laws: Sequence[np.ndarray],
              scale: PowerScale, budget: int = DEFAULT_BUDGET):
    """Support rows and probabilities of the component vector."""
    d = len(components)
    rows = np.zeros((1, d), dtype=np.int64)
    probs = np.ones(1)
    used = sorted(set().union(*(c.inputs for c in components))) if components else []
    for j in used:
        law = np.asarray(laws[j], dtype=np.float64)
        vals = np.nonzero(law)[0]
        contrib, p = _aggregate(contributions(components, j, vals, scale), law[vals])
        if len(rows) * len(contrib) > budget:
            raise BudgetExceeded(
                f"convolution would reach {len(rows) * len(contrib)} rows (budget {budget})")
        new = (rows[:, None, :] + contrib[None, :, :]).reshape(-1, d)
        rows, probs = _aggregate(new, (probs[:, None] * p[None, :]).ravel())
    return rows, probs


def entropy_bits(probs: np.ndarray) -> float:
    p = probs[probs > 0]
    p = p / p.sum()
    return float(-(p * np.log2(p)).sum())


def apply_outputs(rows: np.ndarray, outputs: Sequence[Window], scale: PowerScale) -> np.ndarray:
    cols = []
    for i, lo, hi in outputs:
        v = rows[:, i]
        cols.append(v if lo is None else scale.mid(v, lo, hi))
    if not cols:
        return np.zeros((len(rows), 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def entropies(observables: Sequence[Observable], laws: Sequence[np.ndarray],
              scale: PowerScale, budget: int = DEFAULT_BUDGET) -> list[float]:
    """Exact entropies (bits); observables sharing components share one convolution."""
    cache: dict[tuple[Component, ...], tuple[np.ndarray, np.ndarray]] = {}
    out = []
    for obs in observables:
        if obs.components not in cache:
            cache[obs.components] = joint_pmf(obs.components, laws, scale, budget)
        rows, probs = cache[obs.components]
        if obs.post is None:
            out.append(entropy_bits(probs))
        else:
            _, q = _aggregate(apply_outputs(rows, obs.post, scale), probs)
            out.append(entropy_bits(q))
    return out


def uniform_laws(n_inputs: int, scale: PowerScale, level=1) -> list[np.ndarray]:
    size = scale.pbar(level)
    return [np.full(size, 1.0 / size) for _ in range(n_inputs)]


@dataclass(frozen=True)
class Label:
    """Message label as a function of one input coordinate.

    kind: "none" (single message), "msb" (x >= ⌈size/2⌉) or "parity".
    """
    kind: str = "msb"
    coord: int = 0

    def split(self, laws: Sequence[np.ndarray]) -> list[tuple[float, list[np.ndarray]]]:
        """[(P(W=w), conditional input laws)] over labels with positive mass."""
        if self.kind == "none":
            return [(1.0, list(laws))]
        law = np.asarray(laws[self.coord], dtype=np.float64)
        x = np.arange(len(law))
        if self.kind == "msb":
            lab = (x >= (len(law) + 1) // 2).astype(int)
        elif self.kind == "parity":
            lab = x % 2
        else:
            raise ValueError(f"unknown label kind {self.kind!r}")
        parts = []
        for w in (0, 1):
            mass = float(law[lab == w].sum())
            if mass <= 0:
                continue
            cond = list(laws)
            cond[self.coord] = np.where(lab == w, law, 0.0) / mass
            parts.append((mass, cond))
        return parts

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coord": self.coord}


def conditional_entropies(observables: Sequence[Observable], laws, label: Label,
                          scale: PowerScale, budget: int = DEFAULT_BUDGET) -> list[float]:
    """H(obs | W) for every observable, W given by ``label``."""
    total = np.zeros(len(observables))
    for mass, cond in label.split(laws):
        total += mass * np.array(entropies(observables, cond, scale, budget))
    return [float(v) for v in total]
