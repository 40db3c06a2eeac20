"""Floor-sum linear combinations L^g / L^h of trimmed symbols."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .power_levels import PowerScale, SymbolVector, as_fraction

RANDOM = "bounded-density-random"
ARBITRARY = "arbitrary-constant"

FLOOR_GUARD = 2.0 ** -40


@dataclass(frozen=True)
class FormTerm:
    """One summand: coefficient slot times (x_index)^gamma_delta."""
    index: int
    gamma: Fraction = Fraction(1)
    delta: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_fraction(self.gamma))
        object.__setattr__(self, "delta", as_fraction(self.delta))
        if self.index < 0:
            raise DomainError("negative input index")


@dataclass(frozen=True)
class LinearFormSpec:
    terms: tuple[FormTerm, ...]
    levels: tuple[Fraction, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        levels = tuple(as_fraction(v) for v in self.levels)
        if not levels:
            n = max((t.index for t in self.terms), default=-1) + 1
            levels = (Fraction(1),) * n
        object.__setattr__(self, "levels", levels)
        for t in self.terms:
            if t.index >= len(levels):
                raise DomainError(f"term index {t.index} has no native level")
            if not 0 <= t.delta <= t.gamma <= levels[t.index]:
                raise DomainError(
                    f"trim (gamma={t.gamma}, delta={t.delta}) violates "
                    f"0 <= delta <= gamma <= {levels[t.index]}"
                )

    @classmethod
    def over(cls, windows: Sequence[tuple[int, object, object]], n_inputs=None,
             level=1):
        """Build from (index, delta, gamma) triples over inputs of one level."""
        terms = tuple(FormTerm(j, g, d) for j, d, g in windows)
        if n_inputs is None:
            n_inputs = max((t.index for t in terms), default=-1) + 1
        return cls(terms, (as_fraction(level),) * n_inputs)

    @property
    def arity(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class CoefficientDraw:
    values: tuple[float, ...]
    delta: float = 1.0
    f_max: float = 1.0
    kind: str = RANDOM

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if any(abs(v) > self.delta for v in vals):
            raise DomainError(f"coefficient magnitude exceeds delta={self.delta}")

    @classmethod
    def constants(cls, values, delta=1.0):
        return cls(tuple(values), delta=delta, kind=ARBITRARY)


def window_max(scale: PowerScale, term: FormTerm, level=1) -> int:
    """Largest value of (x)^gamma_delta over x in X_level."""
    if term.gamma == term.delta:
        return 0
    top = min(scale.pbar(term.gamma), scale.pbar(level)) - 1
    return top // scale.pbar(term.delta)


def _values(x, scale):
    if isinstance(x, SymbolVector):
        return x.values, x.scale or scale
    return [int(v) for v in x], scale


def eval_form(spec: LinearFormSpec, draw: CoefficientDraw, x,
              scale: PowerScale | None = None) -> int:
    """Σ ⌊g_i (x_i)^{γ_i}_{δ_i}⌋ with truncation toward zero."""
    if len(draw.values) != spec.arity:
        raise DomainError(
            f"arity mismatch: {spec.arity} terms, {len(draw.values)} coefficients")
    vals, scale = _values(x, scale)
    if scale is None and spec.terms:
        raise DomainError("a PowerScale is needed to evaluate trims")
    if isinstance(x, SymbolVector):
        for t in spec.terms:
            if x[t.index].level > spec.levels[t.index]:
                raise DomainError("input symbol above its native level")
    total = 0
    for g, t in zip(draw.values, spec.terms):
        v = scale.mid(vals[t.index], t.delta, t.gamma)
        total += int(g * v)  # int() truncates toward zero
    return total


def eval_form_array(spec: LinearFormSpec, coefs: Sequence[float],
                    X: np.ndarray, scale: PowerScale) -> np.ndarray:
    """Vectorised eval_form over the rows of an integer array X."""
    X = np.asarray(X, dtype=np.int64)
    out = np.zeros(X.shape[0], dtype=np.int64)
    for g, t in zip(coefs, spec.terms):
        v = scale.mid(X[:, t.index], t.delta, t.gamma)
        out += np.trunc(g * v).astype(np.int64)
    return out


def form_length(spec: LinearFormSpec) -> Fraction:
    """𝒯 = max_j (γ_j − δ_j)^+."""
    return max((max(t.gamma - t.delta, Fraction(0)) for t in spec.terms),
               default=Fraction(0))


def form_length_window(spec, mu, lam) -> Fraction:
    """𝒯((A)^λ_μ) = (min(λ, 𝒯(A)) − μ)^+ ; spec may be a form or its 𝒯."""
    mu, lam = as_fraction(mu), as_fraction(lam)
    if mu > lam or mu < 0:
        raise DomainError(f"window ({mu}, {lam}) needs 0 <= mu <= lambda")
    T = form_length(spec) if isinstance(spec, LinearFormSpec) else as_fraction(spec)
    return max(min(lam, T) - mu, Fraction(0))


def range_bound(spec: LinearFormSpec, draw: CoefficientDraw,
                scale: PowerScale) -> int:
    """Ceiling of k·Δ·P̄^𝒯, widened when floor roots let a window exceed P̄^𝒯."""
    k = spec.arity
    if k == 0:
        return 0
    width = scale.pbar(form_length(spec))
    width = max([width] + [window_max(scale, t, spec.levels[t.index])
                           for t in spec.terms])
    return math.ceil(k * draw.delta * width)


def _near_integer(g: float, guard_max: int) -> bool:
    if guard_max <= 0:
        return False
    prod = g * np.arange(1, guard_max + 1, dtype=np.float64)
    return bool(np.any(np.abs(prod - np.round(prod)) < FLOOR_GUARD))


def sample_coefficients(count: int, delta: float = 1.0, f_max: float = 1.0,
                        seed=0, mu: float | None = None,
                        guard_max: int = 0) -> CoefficientDraw:
    """I.i.d. uniform draws on [−Δ,−μ] ∪ [μ,Δ].

    ``seed`` may be an int, a sequence of ints, or a numpy Generator.
    Coefficients g with g·x within 2^-40 of an integer for some
    1 <= x <= guard_max are redrawn.
    """
    if delta < 1 or f_max < 1:
        raise ConfigError(f"need delta >= 1 and f_max >= 1 (got {delta}, {f_max})")
    if 2 * delta < 1 / f_max:
        raise ConfigError("density bound infeasible for this support")
    if mu is None:
        mu = delta / 20
    if not 0 <= mu < delta or 1 / (2 * (delta - mu)) > f_max:
        raise ConfigError(f"gap mu={mu} incompatible with f_max={f_max}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = []
    while len(out) < count:
        mag = rng.uniform(mu, delta)
        g = mag if rng.random() < 0.5 else -mag
        if _near_integer(g, guard_max):
            continue
        out.append(g)
    return CoefficientDraw(tuple(out), delta=delta, f_max=f_max)
