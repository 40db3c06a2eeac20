"""Aligned image sets: enumeration of |S_ν|, alignment probabilities, growth fits."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .engine import Component, Observable, apply_outputs, contributions, entropies, uniform_laws
from .errors import BudgetExceeded, ConfigError
from .linear_forms import sample_coefficients
from .power_levels import PowerScale, as_fraction
from .report import DEFAULT_SWEEP, DEFAULT_TAU, FAIL, INCONCLUSIVE, PASS, SweepReport, _r, run_sweep

ENUM_BUDGET = 2 ** 20
GROWTH_EXPONENT = 0.1
FIT_RESIDUAL = 0.1
TOY_CUT = Fraction(4, 5)
ONE, ZERO = Fraction(1), Fraction(0)


# --- codeword pairs ---------------------------------------------------------

@dataclass(frozen=True)
class CodewordPair:
    """Two codewords over n channel uses, flattened time-major (n·M entries).

    With ``window`` the forms act on the trimmed symbols (x)^high_low.
    """
    E: tuple[int, ...]
    F: tuple[int, ...]
    scale: PowerScale
    cut: Fraction = TOY_CUT
    n: int = 1
    window: tuple | None = None

    def __post_init__(self):
        if len(self.E) != len(self.F):
            raise ConfigError("codewords differ in shape")
        if self.n < 1 or len(self.E) % self.n:
            raise ConfigError(f"{len(self.E)} entries do not split into {self.n} channel uses")
        object.__setattr__(self, "cut", as_fraction(self.cut))

    @property
    def M(self) -> int:
        return len(self.E) // self.n

    def _trimmed(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        return x if self.window is None else self.scale.mid(x, *self.window)

    @property
    def A(self) -> np.ndarray:
        """Differences A_j of the (trimmed) symbols, shape (n, M)."""
        return (self._trimmed(self.E) - self._trimmed(self.F)).reshape(self.n, self.M)

    @property
    def delta_breve(self) -> np.ndarray:
        """Differences of the parts above the cut, (E_j)^1_cut − (F_j)^1_cut."""
        e = self.scale.mid(np.asarray(self.E, dtype=np.int64), self.cut, 1)
        f = self.scale.mid(np.asarray(self.F, dtype=np.int64), self.cut, 1)
        return e - f

    @property
    def max_A(self) -> int:
        return int(np.abs(self.A).max()) if len(self.E) else 0

    def delta_bound_holds(self) -> bool:
        """max|Δ̆| >= 2 implies max|E_j − F_j| >= (max|Δ̆| − 1)·P̄^cut."""
        d = int(np.abs(self.delta_breve).max()) if len(self.E) else 0
        diff = np.abs(np.asarray(self.E, dtype=np.int64) - np.asarray(self.F, dtype=np.int64))
        return d < 2 or int(diff.max()) >= (d - 1) * self.scale.pbar(self.cut)


@dataclass(frozen=True)
class AlignmentEstimate:
    probability: float
    stderr: float
    bound: float
    draws: int
    seed: int

    @property
    def within_bound(self) -> bool:
        return self.probability <= min(1.0, self.bound) + 3 * self.stderr + 1e-12


def alignment_bound(pair: CodewordPair, K: int = 1, f_max: float = 1.0) -> float:
    """∏ over users k and channel uses t of 2·M·f_max / max_j|A_tj| (capped at 1)."""
    bound = 1.0
    for row in np.abs(pair.A):
        a = int(row.max()) if len(row) else 0
        if a:
            bound *= min(1.0, 2 * pair.M * f_max / a) ** K
    return bound


def alignment_probability(pair: CodewordPair, draws: int = 2000, seed: int = 0,
                          K: int = 1, delta: float = 1.0, f_max: float = 1.0) -> AlignmentEstimate:
    """P(Σ_j ⌊g_ktj E_tj⌋ = Σ_j ⌊g_ktj F_tj⌋ for all k, t), fresh coefficients per (k, t)."""
    n, M = pair.n, pair.M
    rng = np.random.default_rng([seed, 7])
    g = np.array(sample_coefficients(draws * K * n * M, delta, f_max, rng).values)
    g = g.reshape(draws, K, n, M)
    E = pair._trimmed(pair.E).reshape(n, M).astype(np.float64)
    F = pair._trimmed(pair.F).reshape(n, M).astype(np.float64)
    le = np.trunc(g * E).astype(np.int64).sum(axis=3)
    lf = np.trunc(g * F).astype(np.int64).sum(axis=3)
    hits = np.all(le == lf, axis=(1, 2)).astype(np.float64)
    p = float(hits.mean())
    se = float(hits.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return AlignmentEstimate(p, se, alignment_bound(pair, K, f_max), draws, seed)


# --- instances ----------------------------------------------------------------

@dataclass(frozen=True)
class AisInstance:
    """U′ (parts) and U (full image) as observables built from a coefficient draw."""
    name: str
    n_inputs: int
    n_coefs: int
    build: Callable[[Sequence[float]], tuple[Observable, Observable]] = field(compare=False)
    params: dict = field(default_factory=dict, compare=False)


def toy_instance(cut=TOY_CUT, same: bool = False) -> AisInstance:
    """Z = L1(X1,X2), Z′ = L2(X1,X2); U′ = ((Z)^1_cut, (Z′)_cut), U = Z."""
    cut = as_fraction(cut)
    if not 0 <= cut <= 1:
        raise ConfigError("cut must lie in [0,1]")

    def build(g):
        z = Component.linear([(0, 0, 1), (1, 0, 1)], g[:2])
        z2 = z if same else Component.linear([(0, 0, 1), (1, 0, 1)], g[2:4])
        parts = Observable((z, z2), ((0, cut, ONE), (1, ZERO, cut)))
        return parts, Observable((z,))

    name = "toy_same" if same else "toy"
    return AisInstance(name, 2, 4, build, {"cut": str(cut), "same": same})


def identity_instance() -> AisInstance:
    def build(g):
        z = Observable((Component.linear([(0, 0, 1), (1, 0, 1)], g[:2]),))
        return z, z
    return AisInstance("identity", 2, 2, build)


def lossy_instance(cut=TOY_CUT) -> AisInstance:
    """Negative control: the full image is constant, so every part-image aligns."""
    toy = toy_instance(cut)

    def build(g):
        return toy.build(g)[0], Observable(())
    return AisInstance("lossy", 2, 4, build, {"cut": str(as_fraction(cut))})


NAMED_AIS = {
    "toy": toy_instance,
    "toy_same": lambda **kw: toy_instance(same=True, **kw),
    "identity": lambda **kw: identity_instance(),
    "lossy": lossy_instance,
}


def ais_instance(name: str, **params) -> AisInstance:
    if name not in NAMED_AIS:
        raise ConfigError(f"unknown AIS instance {name!r}; choose from {sorted(NAMED_AIS)}")
    return NAMED_AIS[name](**params)


# --- enumeration ----------------------------------------------------------------

def input_grid(n_inputs: int, scale: PowerScale, budget: int = ENUM_BUDGET) -> np.ndarray:
    size = scale.pbar(1)
    if size ** n_inputs > budget:
        raise BudgetExceeded(f"{size ** n_inputs} inputs exceed the enumeration budget {budget}")
    axes = np.meshgrid(*[np.arange(size)] * n_inputs, indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1).astype(np.int64)


def evaluate(obs: Observable, X: np.ndarray, scale: PowerScale) -> np.ndarray:
    """Value of an observable at every row of X."""
    comps = obs.components
    rows = np.zeros((len(X), len(comps)), dtype=np.int64)
    for j in sorted(obs.inputs):
        rows += contributions(comps, j, X[:, j], scale)
    return apply_outputs(rows, obs.outputs, scale)


@dataclass(frozen=True)
class ImageMap:
    """Distinct part-images u′ grouped by the full image of their representative input."""
    sets: tuple[tuple[int, ...], ...]   # indices into ``parts``
    parts: np.ndarray                   # distinct u′ rows
    probs: np.ndarray                   # P(U′ = u′) under the enumeration law
    cond_entropy: float                 # H(U′|U)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.sets], dtype=np.int64)

    @property
    def expected_size(self) -> float:
        """E|S_ν| with ν distributed as U′."""
        return float(sum(len(s) * self.probs[list(s)].sum() for s in self.sets))

    @property
    def max_size(self) -> int:
        return int(self.sizes.max())


def _group(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if rows.shape[1] == 0:
        return np.zeros((1, 0), dtype=np.int64), np.zeros(len(rows), dtype=np.int64)
    uniq, inv = np.unique(rows, axis=0, return_inverse=True)
    return uniq, inv.ravel()


def image_map(parts: Observable, full: Observable, X: np.ndarray, scale: PowerScale,
              order: np.ndarray | None = None) -> ImageMap:
    """Partition of the part-image space by full image.

    Each u′ is represented by the first input producing it, scanning X in
    ``order`` (default: row order); this makes U a function of U′.
    """
    order = np.arange(len(X)) if order is None else np.asarray(order)
    up, up_idx = _group(evaluate(parts, X, scale))
    pos = np.full(len(up), len(X), dtype=np.int64)
    np.minimum.at(pos, up_idx[order], np.arange(len(X)))
    _, u_of_rep = _group(evaluate(full, X[order[pos]], scale))
    by_u = np.argsort(u_of_rep, kind="stable")
    cuts = np.flatnonzero(np.diff(u_of_rep[by_u])) + 1
    sets = tuple(tuple(int(i) for i in grp) for grp in np.split(by_u, cuts))
    pu = np.bincount(up_idx, minlength=len(up)) / len(X)
    pU = np.bincount(u_of_rep, weights=pu)
    h = -float((pu[pu > 0] * np.log2(pu[pu > 0])).sum())
    hU = -float((pU[pU > 0] * np.log2(pU[pU > 0])).sum())
    return ImageMap(sets, up, pu, h - hU)


# --- growth sweep ---------------------------------------------------------------

@dataclass
class AlignedImageSetReport:
    instance: str
    pbars: list[int]
    expected_size: list[float]
    stderr: list[float]
    histograms: list[dict[int, int]]
    draws: int
    seed: int
    c1: float
    c2: float
    exponent: float
    residual: float
    fd_bound_ok: bool
    params: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if len(self.pbars) < 3:
            return INCONCLUSIVE
        ok = self.exponent <= GROWTH_EXPONENT and self.residual <= FIT_RESIDUAL
        return PASS if ok else FAIL

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "params": self.params,
            "Pbar": self.pbars,
            "expected_size": [_r(v) for v in self.expected_size],
            "stderr": [_r(v) for v in self.stderr],
            "histograms": [{str(k): v for k, v in sorted(h.items())} for h in self.histograms],
            "fit": {"c1": _r(self.c1), "c2": _r(self.c2),
                    "exponent": _r(self.exponent), "residual": _r(self.residual),
                    "excluded_smallest_Pbar": True},
            "functional_dependence_bound": self.fd_bound_ok,
            "pass": self.passed,
            "verdict": self.verdict,
            "seed": self.seed,
            "draws": self.draws,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["Pbar,expected_size,stderr"]
        lines += [f"{p},{_r(e)!r},{_r(s)!r}"
                  for p, e, s in zip(self.pbars, self.expected_size, self.stderr)]
        return "\n".join(lines) + "\n"


def growth_fit(pbars: Sequence[int], sizes: Sequence[float]) -> tuple[float, float, float, float]:
    """(c1, c2, exponent, residual) on all but the smallest P̄.

    c1 + c2·log2 P̄ is fitted by least squares; residual is its largest
    relative error.  The exponent is the slope of ln E|S| against ln P̄.
    """
    p = np.asarray(pbars, dtype=np.float64)[1:]
    s = np.asarray(sizes, dtype=np.float64)[1:]
    if len(p) < 2:
        return float("nan"), float("nan"), float("nan"), float("nan")
    c2, c1 = np.polyfit(np.log2(p), s, 1)
    resid = float(np.max(np.abs(c1 + c2 * np.log2(p) - s) / s))
    exponent = float(np.polyfit(np.log(p), np.log(s), 1)[0])
    return float(c1), float(c2), exponent, resid


def expected_sizes_sweep(instance: AisInstance, pbars: Sequence[int] = (4, 8, 16, 32),
                         draws: int = 50, seed: int = 0,
                         budget: int = ENUM_BUDGET) -> AlignedImageSetReport:
    means, ses, hists = [], [], []
    fd_ok = True
    for pb in pbars:
        scale = PowerScale.from_pbar(pb)
        X = input_grid(instance.n_inputs, scale, budget)
        vals, hist = [], {}
        for i in range(draws):
            rng = np.random.default_rng([seed, i])
            g = sample_coefficients(instance.n_coefs, 1.0, 1.0, rng, guard_max=pb).values
            # representatives follow a random input order drawn independently of 𝒢
            im = image_map(*instance.build(g), X, scale, rng.permutation(len(X)))
            vals.append(im.expected_size)
            fd_ok &= im.cond_entropy <= math.log2(im.max_size) + 1e-9
            for size, count in zip(*np.unique(im.sizes, return_counts=True)):
                hist[int(size)] = hist.get(int(size), 0) + int(count)
        v = np.array(vals)
        means.append(float(v.mean()))
        ses.append(float(v.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0)
        hists.append(hist)
    c1, c2, b, res = growth_fit(pbars, means)
    return AlignedImageSetReport(instance.name, list(pbars), means, ses, hists, draws, seed,
                                 c1, c2, b, res, fd_ok, dict(instance.params))


def toy_example_check(P_sweep: Sequence[int] = DEFAULT_SWEEP, draws: int = 200,
                      seed: int = 0, cut=TOY_CUT, same: bool = False,
                      zero_inputs: Sequence[int] = (), tau: float = DEFAULT_TAU,
                      threads: int = 1) -> SweepReport:
    """H(Z_a, Z_b) − H(Z|𝒢) per P, judged by the normalized-slack rule."""
    inst = toy_instance(cut, same)

    def per_draw(scale, i):
        rng = np.random.default_rng([seed, i])
        g = sample_coefficients(inst.n_coefs, 1.0, 1.0, rng, guard_max=scale.pbar(1)).values
        parts, full = inst.build(g)
        laws = uniform_laws(inst.n_inputs, scale)
        for j in zero_inputs:
            laws[j] = np.eye(1, len(laws[j]))[0]
        h_parts, h_full = entropies([parts, full], laws, scale)
        return h_parts, h_full

    extra = {"cut": str(as_fraction(cut)), "same_coefficients": same,
             "zero_inputs": list(zero_inputs)}
    return run_sweep(inst.name, P_sweep, draws, seed, per_draw, "le", tau, threads, extra)
