"""Numerical checks of the sum-set inequality and the converse lemmas."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .channel import BcConfig, ChannelDraw, common_denominator, draw_channel, normalize_config
from .engine import (Component, Label, Observable, conditional_entropies,
                     uniform_laws)
from .entropy import EntropyEstimate
from .errors import ConfigError, DomainError
from .linear_forms import sample_coefficients
from .power_levels import PowerScale, as_fraction
from .report import DEFAULT_SWEEP, DEFAULT_TAU, SweepReport, run_sweep

ONE, ZERO = Fraction(1), Fraction(0)
EXAMPLE1 = (5, 2, 3, Fraction(1, 2), Fraction(2, 3))
EXAMPLE2 = (4, 1, 3, Fraction(1, 4), Fraction(1, 2))


# --- channel-driven observables -------------------------------------------

def family_obs(draw: ChannelDraw, family: str, rows: slice | None = None) -> Observable:
    pairs = draw.rows(family)
    if rows is not None:
        pairs = pairs[rows]
    return Observable(tuple(Component.from_form(s, c.values) for s, c in pairs))


def _bc_draw(cfg: BcConfig, scale: PowerScale, seed: int, i: int) -> ChannelDraw:
    return draw_channel(replace(cfg, P=scale.P), seed=(seed, i))


def input_laws(cfg: BcConfig, scale: PowerScale, zero_inputs: Sequence[int] = ()):
    laws = uniform_laws(cfg.M, scale)
    for j in zero_inputs:
        point = np.zeros_like(laws[j])
        point[0] = 1.0
        laws[j] = point
    return laws


def conditional_entropy(variable, label: Label, cfg: BcConfig, draws: int = 200,
                        seed: int = 0, zero_inputs: Sequence[int] = ()) -> EntropyEstimate:
    """Average over channel draws of H(variable(draw) | W) at cfg.P.

    ``variable`` maps a ChannelDraw to an Observable.
    """
    if cfg.P is None:
        raise ConfigError("configuration has no power P")
    scale = cfg.scale
    laws = input_laws(cfg, scale, zero_inputs)
    vals = np.array([conditional_entropies([variable(_bc_draw(cfg, scale, seed, i))],
                                           laws, label, scale)[0]
                     for i in range(draws)])
    se = float(vals.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return EntropyEstimate(float(vals.mean()), "averaged-over-draws", draws, seed, se)


# --- lemma constants -------------------------------------------------------

def lemma_constants(cfg: BcConfig, branch: str) -> tuple[Fraction, Fraction, Fraction]:
    """(N0, N1, N2) of the beta1+beta2 >= 1 (hat) or < 1 (breve) lemma."""
    M, N1, N2, b1, b2 = cfg.M, cfg.N1, cfg.N2, cfg.beta1, cfg.beta2
    if branch == "ge1":
        n1, n2 = Fraction(M - N2), Fraction(N2 - N1)
        return n1 * (n2 + n1) * b1, n1, n2
    if branch == "lt1":
        n1, n2 = (M - N2) * b2, (N2 - N1) * (1 - b1)
        return n1 * (M - N1) * b1, n1, n2
    raise ConfigError(f"unknown branch {branch!r}")


def _check_branch(cfg: BcConfig, branch: str):
    s = cfg.beta1 + cfg.beta2
    if branch == "ge1" and s < 1 or branch == "lt1" and s > 1:
        raise ConfigError(f"branch {branch} does not match beta1+beta2 = {s}")
    if branch == "lt1":
        common_denominator(cfg)


def _cfg(cfg) -> BcConfig:
    return cfg if isinstance(cfg, BcConfig) else normalize_config(*cfg)


@dataclass
class LemmaOptions:
    P_sweep: Sequence[int] = DEFAULT_SWEEP
    draws: int = 200
    seed: int = 0
    tau: float = DEFAULT_TAU
    label: Label = field(default_factory=Label)
    zero_inputs: Sequence[int] = ()
    threads: int = 1


def _lemma_sweep(name, cfg, opts: LemmaOptions, coefs, extra):
    """lhs = c1 H(Y2|W); rhs = (c1+c2) H(Y1|W) − c2 H(Y1ã, (Y1a)^{1−β2}|W) + c0 log P̄."""
    c0, c1, c2 = (float(c) for c in coefs)
    top = 1 - cfg.beta2

    def per_draw(scale, i):
        d = _bc_draw(cfg, scale, opts.seed, i)
        y1, y2 = family_obs(d, "y1"), family_obs(d, "y2")
        parts = family_obs(d, "y1t") + family_obs(d, "y1", slice(0, cfg.na)).top(top)
        laws = input_laws(cfg, scale, opts.zero_inputs)
        h2, h1, hp = conditional_entropies([y2, y1, parts], laws, opts.label, scale)
        return c1 * h2, (c1 + c2) * h1 - c2 * hp + c0 * math.log2(scale.pbar(1))

    info = {"config": cfg.to_dict() | {"P": None}, "label": opts.label.to_dict(),
            "zero_inputs": list(opts.zero_inputs)}
    info.update(extra)
    return run_sweep(name, opts.P_sweep, opts.draws, opts.seed, per_draw, "le",
                     opts.tau, opts.threads, info)


def verify_lemma_example1(cfg=EXAMPLE1, opts: LemmaOptions | None = None) -> SweepReport:
    """2H(Y2|W1) <= 3H(Y1|W1) − H((Y1)^{1/3}|W1) + 3 log P̄."""
    cfg = _cfg(cfg)
    if (cfg.M, cfg.N1, cfg.N2, cfg.beta1, cfg.beta2) != EXAMPLE1:
        raise ConfigError("lemma1 is stated for (5,2,3,1/2,2/3)")
    return _lemma_sweep("lemma1", cfg, opts or LemmaOptions(), (3, 2, 1),
                        {"coefficients": {"c0": "3", "c1": "2", "c2": "1"}})


def verify_lemma_example2(cfg=EXAMPLE2, opts: LemmaOptions | None = None) -> SweepReport:
    """H(Y2|W1) <= 4H(Y1|W1) − 3H((Y1)^{1/2}|W1) + (3/4) log P̄."""
    cfg = _cfg(cfg)
    if (cfg.M, cfg.N1, cfg.N2, cfg.beta1, cfg.beta2) != EXAMPLE2:
        raise ConfigError("lemma2 is stated for (4,1,3,1/4,1/2)")
    return _lemma_sweep("lemma2", cfg, opts or LemmaOptions(),
                        (Fraction(3, 4), 1, 3),
                        {"coefficients": {"c0": "3/4", "c1": "1", "c2": "3"}})


def verify_lemma_general(cfg, branch: str, opts: LemmaOptions | None = None) -> SweepReport:
    cfg = _cfg(cfg).lab_ready()
    _check_branch(cfg, branch)
    n0, n1, n2 = lemma_constants(cfg, branch)
    name = "lemma4" if branch == "ge1" else "lemma5"
    return _lemma_sweep(name, cfg, opts or LemmaOptions(), (n0, n1, n2),
                        {"branch": branch,
                         "constants": {"N0": str(n0), "N1": str(n1), "N2": str(n2)}})


# --- lemma on windowed blocks ---------------------------------------------

@dataclass(frozen=True)
class Block:
    size: int
    lam1: Fraction
    lam2: Fraction


def lemma3_bound(blocks: Sequence[Block], N1: int) -> Fraction:
    """(N1 − Σ_{i<=s} M_i)(λ1,s+1 − λ2,s+1)^+ + Σ_{i<=s} M_i (λ1i − λ2i)^+."""
    order = sorted(blocks, key=lambda b: -max(b.lam1 - b.lam2, ZERO))
    bound, used = ZERO, 0
    for b in order:
        diff = max(b.lam1 - b.lam2, ZERO)
        if used + b.size <= N1:
            bound += b.size * diff
            used += b.size
        else:
            bound += (N1 - used) * diff
            break
    return bound


def ffgt_blocks(cfg: BcConfig) -> list[Block]:
    """Blocks for U1 = (Y1ã, (Y1a)^{1−β2}) against U2 = Y2; every λ1 − λ2 <= 0."""
    return [Block(cfg.na, 1 - cfg.beta2, 1 - cfg.beta2),
            Block(cfg.nb, ONE, ONE),
            Block(cfg.nc, 1 - cfg.beta1, ONE)]


def verify_lemma3(blocks: Sequence[Block], N1: int, N2: int,
                  opts: LemmaOptions | None = None, delta: float = 1.0,
                  f_max: float = 1.0, shared: bool = False,
                  name: str = "lemma3") -> SweepReport:
    """H(U1|W) − H(U2|W) against the windowed-block bound.

    U1 has N1 random forms over the windows (V_i)^1_{1−λ1i}, U2 has N2 over
    (V_i)^1_{1−λ2i}.  With ``shared`` the first N1 rows of U2 reuse U1's
    coefficients.
    """
    opts = opts or LemmaOptions()
    blocks = [b for b in blocks if b.size > 0]
    total = sum(b.size for b in blocks)
    if not (1 <= N1 <= min(N2, total)):
        raise ConfigError(f"need 1 <= N1 <= min(N2, ΣM_i) = {min(N2, total)}")
    for b in blocks:
        if not (0 <= b.lam1 <= 1 and 0 <= b.lam2 <= 1):
            raise ConfigError("block levels must lie in [0,1]")
    bound = lemma3_bound(blocks, N1)
    idx = []
    for b in blocks:
        start = len(idx)
        idx += [(start + k, b) for k in range(b.size)]

    def windows(which):
        return [(j, 1 - (b.lam1 if which == 1 else b.lam2), ONE) for j, b in idx]

    w1, w2 = windows(1), windows(2)

    def per_draw(scale, i):
        rng = np.random.default_rng([opts.seed, i])
        g = sample_coefficients((N1 + N2) * total, delta, f_max, rng,
                                guard_max=scale.pbar(1)).values
        g = np.array(g).reshape(N1 + N2, total)
        if shared:
            g[N1:2 * N1] = g[:N1]
        u1 = Observable(tuple(Component.linear(w1, g[r]) for r in range(N1)))
        u2 = Observable(tuple(Component.linear(w2, g[N1 + r]) for r in range(N2)))
        laws = uniform_laws(total, scale)
        h1, h2 = conditional_entropies([u1, u2], laws, opts.label, scale)
        return h1 - h2, float(bound) * math.log2(scale.pbar(1))

    extra = {"blocks": [[b.size, str(b.lam1), str(b.lam2)] for b in blocks],
             "N1": N1, "N2": N2, "bound": str(bound), "label": opts.label.to_dict()}
    return run_sweep(name, opts.P_sweep, opts.draws, opts.seed, per_draw, "le",
                     opts.tau, opts.threads, extra)


# --- sum-set instances ----------------------------------------------------

Window = tuple[int, Fraction, Fraction]


@dataclass(frozen=True)
class PartSpec:
    """A part Z_{k,k'}: a bare input slice ("x"), an arbitrary-constant
    combination ("form"), or a copy of a whole output Z_k ("output")."""
    kind: str
    windows: tuple[Window, ...] = ()
    output: int = 0

    def length(self, outputs) -> Fraction:
        wins = outputs[self.output] if self.kind == "output" else self.windows
        return max((max(hi - lo, ZERO) for _, lo, hi in wins), default=ZERO)


@dataclass(frozen=True)
class SumsetInstance:
    name: str
    n_inputs: int
    levels: tuple[tuple[Fraction, ...], ...]          # λ_{k,m}
    index_sets: tuple[tuple[tuple[int, ...], ...], ...]  # I_{k,k'} (1-based levels)
    outputs: tuple[tuple[Window, ...], ...]             # windows of Z_k
    parts: tuple[tuple[PartSpec, ...], ...]             # Z_{k,k'}
    label: Label = field(default_factory=lambda: Label("msb", 0))

    def __post_init__(self):
        K = len(self.outputs)
        if not (len(self.levels) == len(self.index_sets) == len(self.parts) == K):
            raise DomainError("levels, index sets, outputs and parts need one entry per k")
        for k in range(K):
            if len(self.index_sets[k]) != len(self.parts[k]):
                raise DomainError(f"user {k + 1}: one index set per part")
            Mk = len(self.levels[k])
            mins = []
            for I in self.index_sets[k]:
                if not I or any(not 1 <= m <= Mk for m in I):
                    raise DomainError(f"index set {I} outside 1..{Mk}")
                mins.append(min(I))
            if any(a < b for a, b in zip(mins, mins[1:])):
                raise DomainError(f"user {k + 1}: index sets violate m(k,i) >= m(k,j) for i<j")
        for wins in list(self.outputs) + [p.windows for ps in self.parts for p in ps]:
            for j, lo, hi in wins:
                if not (0 <= j < self.n_inputs and 0 <= lo <= hi <= 1):
                    raise DomainError(f"bad window ({j},{lo},{hi})")

    @property
    def K(self) -> int:
        return len(self.outputs)

    def part_lengths(self) -> list[list[Fraction]]:
        return [[p.length(self.outputs) for p in ps] for ps in self.parts]

    def to_dict(self) -> dict:
        w = lambda ws: [[j, str(lo), str(hi)] for j, lo, hi in ws]  # noqa: E731
        return {
            "name": self.name, "n_inputs": self.n_inputs,
            "levels": [[str(v) for v in row] for row in self.levels],
            "index_sets": [[list(I) for I in row] for row in self.index_sets],
            "outputs": [w(o) for o in self.outputs],
            "parts": [[{"kind": p.kind, "windows": w(p.windows), "output": p.output}
                       for p in row] for row in self.parts],
            "label": self.label.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SumsetInstance":
        try:
            w = lambda ws: tuple((int(j), as_fraction(lo), as_fraction(hi))  # noqa: E731
                                 for j, lo, hi in ws)
            parts = tuple(tuple(PartSpec(p.get("kind", "form"), w(p.get("windows", [])),
                                         int(p.get("output", 0))) for p in row)
                          for row in d["parts"])
            lab = d.get("label", {"kind": "msb", "coord": 0})
            return cls(d.get("name", "custom"), int(d["n_inputs"]),
                       tuple(tuple(as_fraction(v) for v in row) for row in d["levels"]),
                       tuple(tuple(tuple(int(m) for m in I) for I in row)
                             for row in d["index_sets"]),
                       tuple(w(o) for o in d["outputs"]), parts,
                       Label(lab.get("kind", "msb"), int(lab.get("coord", 0))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed sum-set instance: {exc}") from exc


def check_condt4(inst: SumsetInstance) -> tuple[bool, tuple[int, int] | None]:
    """Σ_{s'>s} 𝒯(Z_{k,s'}) <= λ_{k,1} + … + λ_{k,m(k,s)−1} for all k, s.

    Returns (ok, witness) with witness the first violating 1-based (k, s).
    """
    T = inst.part_lengths()
    for k in range(inst.K):
        lam = inst.levels[k]
        for s in range(1, len(T[k])):
            m = min(inst.index_sets[k][s - 1])
            if sum(T[k][s:]) > sum(lam[:m - 1]):
                return False, (k + 1, s)
    return True, None


def _sumset_coefs(inst: SumsetInstance, seed: int, guard: int):
    """Arbitrary constants for "form" parts: fixed by the seed, shared across draws."""
    rng = np.random.default_rng([seed, 2 ** 31 - 1])
    out = []
    for row in inst.parts:
        out.append([sample_coefficients(len(p.windows), 1.0, 1.0, rng, guard_max=guard).values
                    if p.kind == "form" else () for p in row])
    return out


def sumset_observables(inst: SumsetInstance, scale: PowerScale, seed: int, i: int,
                       h=None) -> tuple[Observable, Observable]:
    rng = np.random.default_rng([seed, i])
    guard = scale.pbar(1)
    zs = [Component.linear(w, sample_coefficients(len(w), 1.0, 1.0, rng,
                                                  guard_max=guard).values)
          for w in inst.outputs]
    h = h if h is not None else _sumset_coefs(inst, seed, guard)
    parts = []
    for k, row in enumerate(inst.parts):
        for kk, p in enumerate(row):
            if p.kind == "output":
                parts.append(zs[p.output])
            elif p.kind == "x":
                if len(p.windows) != 1:
                    raise DomainError("an 'x' part is a single input slice")
                parts.append(Component.slice(*p.windows[0]))
            else:
                parts.append(Component.linear(p.windows, h[k][kk]))
    return Observable(tuple(zs)), Observable(tuple(parts))


def verify_sumset(inst: SumsetInstance, P_sweep: Sequence[int] = DEFAULT_SWEEP,
                  draws: int = 200, seed: int = 0, tau: float = DEFAULT_TAU,
                  threads: int = 1, enforce_condt4: bool = True) -> SweepReport:
    """H(Z_1..Z_K|W,G) >= H(Z_{1,1}..Z_{K,l_K}|W) + o(log P̄); gap = RHS − LHS."""
    ok, witness = check_condt4(inst)
    if not ok and enforce_condt4:
        raise DomainError(f"condition on part lengths fails at (k,s)={witness}")

    def per_draw(scale, i):
        z, parts = sumset_observables(inst, scale, seed, i)
        laws = uniform_laws(inst.n_inputs, scale)
        return tuple(conditional_entropies([z, parts], laws, inst.label, scale))

    extra = {"definition": inst.to_dict(), "condt4": ok,
             "condt4_witness": list(witness) if witness else None}
    return run_sweep(inst.name, P_sweep, draws, seed, per_draw, "ge", tau, threads, extra)


def _w(j, lo, hi) -> Window:
    return (j, as_fraction(lo), as_fraction(hi))


def shared_y2_instance() -> SumsetInstance:
    """Z_k = Y2k of the (5,2,3) example; parts are combinations of the top thirds of X_a."""
    third = Fraction(2, 3)
    y2 = (_w(0, third, 1), _w(1, third, 1), _w(2, 0, 1), _w(3, 0, 1), _w(4, 0, 1))
    part = PartSpec("form", (_w(0, third, 1), _w(1, third, 1)))
    return SumsetInstance("shared_y2", 5, ((ONE,), (ONE,)), (((1,),), ((1,),)),
                          (y2, y2), ((part,), (part,)), Label("msb", 2))


def two_level_instance() -> SumsetInstance:
    """Z_k = Y1k; parts: combinations of top thirds of X_1, X_2 and half-level slices of X_3, X_5."""
    half, third = Fraction(1, 2), Fraction(2, 3)
    y1 = (_w(0, 0, 1), _w(1, 0, 1), _w(2, half, 1), _w(3, half, 1), _w(4, half, 1))
    top = PartSpec("form", (_w(0, third, 1), _w(1, third, 1)))
    lam = (half, half)
    return SumsetInstance(
        "two_level", 5, (lam, lam), (((2,), (1,)), ((2,), (1,))), (y1, y1),
        ((top, PartSpec("x", (_w(2, half, 1),))), (top, PartSpec("x", (_w(4, half, 1),)))),
        Label("msb", 0))


def trivial_projection_instance() -> SumsetInstance:
    z = (_w(0, 0, 1), _w(1, 0, 1), _w(2, Fraction(1, 2), 1))
    return SumsetInstance("trivial_projection", 3, ((ONE,), (ONE,)), (((1,),), ((1,),)),
                          (z, z), ((PartSpec("output", output=0),),
                                   (PartSpec("output", output=1),)), Label("msb", 0))


def condt4_violating_instance() -> SumsetInstance:
    """Negative control: the parts carry more than the single output can."""
    half = Fraction(1, 2)
    return SumsetInstance("condt4_violation", 2, ((half, half),), (((2,), (1,)),),
                          ((_w(0, 0, 1), _w(1, 0, 1)),),
                          ((PartSpec("x", (_w(0, half, 1),)),
                            PartSpec("x", (_w(1, 0, 1),))),), Label("none", 0))


def four_level_instance() -> SumsetInstance:
    """Index-set pattern of the K=2, four-level illustration with matching part lengths."""
    q = lambda a: Fraction(a, 10)  # noqa: E731
    lam1 = (q(3), q(2), q(2), Fraction(15, 100))
    lam2 = (Fraction(38, 100), Fraction(14, 100), Fraction(29, 100), Fraction(9, 100))
    I = (((4,), (2, 4), (1, 2, 3, 4)), ((4,), (3, 4), (1, 2, 3, 4)))

    def part(T):
        return PartSpec("x", (_w(0, 0, T),))

    T1 = (q(1), Fraction(19, 100), Fraction(28, 100))
    T2 = (q(1), Fraction(22, 100), Fraction(24, 100))
    out = (_w(0, 0, 1),)
    return SumsetInstance("four_level", 1, (lam1, lam2), I, (out, out),
                          (tuple(part(T) for T in T1), tuple(part(T) for T in T2)),
                          Label("none", 0))


NAMED_SUMSET = {
    "shared_y2": shared_y2_instance,
    "two_level": two_level_instance,
    "trivial_projection": trivial_projection_instance,
    "condt4_violation": condt4_violating_instance,
}
