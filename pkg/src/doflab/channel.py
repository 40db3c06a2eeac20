"""Canonical deterministic two-user MIMO broadcast-channel instances."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .linear_forms import (CoefficientDraw, FormTerm, LinearFormSpec,
                           eval_form, sample_coefficients)
from .power_levels import PowerScale, SymbolVector, as_fraction

ONE = Fraction(1)
ZERO = Fraction(0)


@dataclass(frozen=True)
class BcConfig:
    M: int
    N1: int
    N2: int
    beta1: Fraction
    beta2: Fraction
    delta: float = 1.0
    epsilon: float = 1e-3
    f_max: float = 1.0
    P: Fraction | None = None
    seed: int = 0
    swapped: bool = False
    M_raw: int | None = None
    N_raw: tuple[int, int] | None = None

    @property
    def regime(self) -> str:
        return "N2<=M" if self.N2 <= self.M else "N2>M"

    @property
    def scale(self) -> PowerScale | None:
        return PowerScale(self.P) if self.P is not None else None

    @property
    def notes(self) -> list[str]:
        out = []
        if self.swapped:
            out.append("users swapped so that N1 <= N2")
        if self.M_raw is not None and self.M_raw != self.M:
            out.append(f"M clamped from {self.M_raw} to N1+N2={self.M}")
        if self.N_raw is not None:
            out.append(f"receive antennas clamped from {self.N_raw} to M")
        return out

    def lab_ready(self) -> "BcConfig":
        """Raise unless the canonical decomposition exists."""
        if not (1 <= self.N1 <= self.N2 <= self.M <= self.N1 + self.N2):
            raise ConfigError(
                f"deterministic model needs N1 <= N2 <= M <= N1+N2, got "
                f"({self.M},{self.N1},{self.N2})")
        return self

    # block sizes
    @property
    def na(self) -> int:
        return self.M - self.N2

    @property
    def nb(self) -> int:
        return self.N1 + self.N2 - self.M

    @property
    def nc(self) -> int:
        return self.M - self.N1

    def blocks(self) -> dict[str, range]:
        return {"a": range(0, self.na),
                "b": range(self.na, self.N1),
                "c": range(self.N1, self.M)}

    def to_dict(self) -> dict:
        return {"M": self.M, "N1": self.N1, "N2": self.N2,
                "beta1": str(self.beta1), "beta2": str(self.beta2),
                "P": None if self.P is None else str(self.P),
                "delta": self.delta, "epsilon": self.epsilon,
                "f_max": self.f_max, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def normalize_config(M, N1, N2, beta1, beta2, **extra) -> BcConfig:
    """Swap users so N1 <= N2 and drop transmit dimensions beyond N1+N2.

    In the N2 > M regime receive dimensions beyond M are clamped to M
    instead, and M is left untouched.
    """
    for name, v in (("M", M), ("N1", N1), ("N2", N2)):
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"{name} must be a positive integer, got {v!r}")
    b1, b2 = as_fraction(beta1), as_fraction(beta2)
    for name, b in (("beta1", b1), ("beta2", b2)):
        if not 0 <= b <= 1:
            raise ConfigError(f"{name}={b} outside [0,1]")
    M, N1, N2 = int(M), int(N1), int(N2)
    swapped = N1 > N2
    if swapped:
        N1, N2, b1, b2 = N2, N1, b2, b1
    M_raw, N_raw = M, None
    if N2 > M:
        if N1 > M:
            N_raw = (N1, N2)
            N1 = M
        M_raw = None
    else:
        M = min(M, N1 + N2)
    if "P" in extra and extra["P"] is not None:
        extra["P"] = as_fraction(extra["P"])
    return BcConfig(M, N1, N2, b1, b2, swapped=swapped,
                    M_raw=M_raw, N_raw=N_raw, **extra)


def config_from_dict(d: dict) -> BcConfig:
    keys = {"delta", "epsilon", "f_max", "P", "seed"}
    extra = {k: d[k] for k in keys if k in d}
    try:
        return normalize_config(d["M"], d["N1"], d["N2"], d["beta1"], d["beta2"], **extra)
    except KeyError as exc:
        raise ConfigError(f"instance is missing field {exc}") from exc


# trim windows (delta, gamma) per output family and input block
def _families(cfg: BcConfig) -> dict[str, dict[str, tuple[Fraction, Fraction]]]:
    b1, b2 = cfg.beta1, cfg.beta2
    full = (ZERO, ONE)
    return {
        "y1": {"a": full, "b": full, "c": (b1, ONE)},
        "y2": {"a": (b2, ONE), "b": full, "c": full},
        "y1t": {"b": full, "c": (b1, ONE)},
        "y1c": {"a": (b2, ONE), "b": full, "c": (b1, ONE)},
        "y1d": {"a": full, "c": (b1, ONE)},
        "y2a": {"a": (b2, ONE), "b": full},
        "y2b": {"a": (b2, ONE), "c": full},
    }


def family_rows(cfg: BcConfig) -> dict[str, int]:
    return {"y1": cfg.N1, "y2": cfg.N2, "y1t": cfg.nb, "y1c": cfg.nb,
            "y1d": cfg.na, "y2a": cfg.nb, "y2b": cfg.nc}


def family_spec(cfg: BcConfig, family: str) -> LinearFormSpec:
    """Shared term structure of every row in an output family."""
    cfg.lab_ready()
    wins = _families(cfg)[family]
    terms = []
    for block, idx in cfg.blocks().items():
        if block in wins:
            d, g = wins[block]
            terms += [FormTerm(j, g, d) for j in idx]
    return LinearFormSpec(tuple(terms), (ONE,) * cfg.M)


@dataclass(frozen=True)
class ChannelDraw:
    """Coefficient matrices (rows × M) for every output family."""
    cfg: BcConfig
    matrices: dict[str, np.ndarray] = field(compare=False)
    attempts: int = 1

    def rows(self, family: str) -> list[tuple[LinearFormSpec, CoefficientDraw]]:
        spec = family_spec(self.cfg, family)
        cols = [t.index for t in spec.terms]
        mat = self.matrices[family]
        return [(spec, CoefficientDraw(tuple(mat[r, cols]), self.cfg.delta,
                                       self.cfg.f_max))
                for r in range(mat.shape[0])]

    def square_blocks(self) -> dict[str, np.ndarray]:
        cfg = self.cfg
        m = self.matrices
        a, b, c = (list(r) for r in cfg.blocks().values())
        ab = a + b
        return {
            "G1ab": m["y1"][:, ab],
            "G2bc": m["y2"][:, b + c],
            "G1t_b": m["y1t"][:, b],
            "G1d_a": m["y1d"][:, a],
            "G2b_c": m["y2b"][:, c],
            # stacked families related by the recombination matrix A'
            "B_stack": np.vstack([m["y1t"], m["y1"][:cfg.na]])[:, ab],
            "C_stack": np.vstack([m["y1c"], m["y1d"]])[:, ab],
        }

    def recombination(self) -> np.ndarray:
        """A' with C_stack = A' · B_stack on the X_a ▽ X_b columns."""
        blk = self.square_blocks()
        return blk["C_stack"] @ np.linalg.inv(blk["B_stack"])


def _det(m: np.ndarray) -> float:
    return 1.0 if m.size == 0 else abs(float(np.linalg.det(m)))


def draw_channel(cfg: BcConfig, t: int = 0, seed=None, budget: int = 1000,
                 guard_max: int | None = None) -> ChannelDraw:
    """Rejection-sample coefficient matrices with every split block well conditioned.

    ``seed`` may be an int or a tuple of ints; the stream is keyed by
    (seed..., t), so parallel evaluation over t is reproducible.
    """
    cfg.lab_ready()
    if seed is None:
        seed = cfg.seed
    key = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    rng = np.random.default_rng(key + [t])
    if guard_max is None:
        guard_max = cfg.scale.pbar(1) if cfg.P is not None else 0
    rows = family_rows(cfg)
    windows = _families(cfg)
    for attempt in range(1, budget + 1):
        mats = {}
        for fam, n in rows.items():
            vals = sample_coefficients(n * cfg.M, cfg.delta, cfg.f_max, rng,
                                       guard_max=guard_max).values
            mat = np.array(vals, dtype=np.float64).reshape(n, cfg.M)
            for block, idx in cfg.blocks().items():
                if block not in windows[fam]:
                    mat[:, list(idx)] = 0.0  # input block absent from this family
            mats[fam] = mat
        draw = ChannelDraw(cfg, mats, attempt)
        if all(_det(b) >= cfg.epsilon for b in draw.square_blocks().values()):
            return draw
    raise ConfigError(
        f"no channel draw met |det| >= {cfg.epsilon} in {budget} attempts")


@dataclass(frozen=True)
class CanonicalInput:
    xa: SymbolVector
    xb: SymbolVector
    xc: SymbolVector

    @classmethod
    def split(cls, cfg: BcConfig, x, scale: PowerScale | None = None) -> "CanonicalInput":
        cfg.lab_ready()
        if not isinstance(x, SymbolVector):
            x = SymbolVector.of(list(x), scale or cfg.scale)
        if len(x) != cfg.M:
            raise DomainError(f"input has {len(x)} entries, expected M={cfg.M}")
        e = x.entries
        return cls(SymbolVector(e[:cfg.na]), SymbolVector(e[cfg.na:cfg.N1]),
                   SymbolVector(x.entries[cfg.N1:]))

    @property
    def vector(self) -> SymbolVector:
        return SymbolVector(self.xa.entries + self.xb.entries + self.xc.entries)


def _check(cfg: BcConfig, inp: CanonicalInput):
    if (len(inp.xa), len(inp.xb), len(inp.xc)) != (cfg.na, cfg.nb, cfg.nc):
        raise DomainError("input block sizes do not match the configuration")


def _eval_family(cfg, inp, draw, family) -> list[int]:
    _check(cfg, inp)
    x = inp.vector
    return [eval_form(spec, coefs, x) for spec, coefs in draw.rows(family)]


def output_y1(cfg: BcConfig, inp: CanonicalInput, draw: ChannelDraw) -> list[int]:
    return _eval_family(cfg, inp, draw, "y1")


def output_y2(cfg: BcConfig, inp: CanonicalInput, draw: ChannelDraw) -> list[int]:
    return _eval_family(cfg, inp, draw, "y2")


def split_y1(cfg, inp, draw) -> tuple[list[int], list[int]]:
    """(y1_tilde_a, y1_a): forms without X_a, and the first M−N2 rows of Y1."""
    return (_eval_family(cfg, inp, draw, "y1t"),
            _eval_family(cfg, inp, draw, "y1")[:cfg.na])


def derived_outputs(cfg, inp, draw) -> dict[str, list[int]]:
    y2b = _eval_family(cfg, inp, draw, "y2b")
    return {
        "y1c": _eval_family(cfg, inp, draw, "y1c"),
        "y1d": _eval_family(cfg, inp, draw, "y1d"),
        "y2a": _eval_family(cfg, inp, draw, "y2a"),
        "y2b": y2b,
        "y2c": y2b[:cfg.na],
        "y2d": y2b[cfg.na:cfg.na + cfg.N2 - cfg.N1],
    }


@dataclass(frozen=True)
class ReceiverOutputs:
    y1: list[int]
    y2: list[int]
    y1_tilde_a: list[int]
    y1_a: list[int]
    derived: dict[str, list[int]]


def receiver_outputs(cfg, inp, draw) -> ReceiverOutputs:
    yt, ya = split_y1(cfg, inp, draw)
    return ReceiverOutputs(output_y1(cfg, inp, draw), output_y2(cfg, inp, draw),
                           yt, ya, derived_outputs(cfg, inp, draw))


# --- 1/q power-level slices of the derived streams -------------------------

@dataclass(frozen=True)
class LevelSlice:
    """Window (low, high) of one stream of a named source vector."""
    source: str
    stream: int
    low: Fraction
    high: Fraction

    def value(self, scale: PowerScale, sources: dict[str, Sequence[int]]) -> int:
        return scale.mid(sources[self.source][self.stream], self.low, self.high)


def common_denominator(cfg: BcConfig, q: int | None = None) -> tuple[int, int, int]:
    """(q, m, e) with beta1 = m/q and beta2 = e/q."""
    if q is None:
        q = int(np.lcm(cfg.beta1.denominator, cfg.beta2.denominator))
    m, e = cfg.beta1 * q, cfg.beta2 * q
    if q < 1 or m.denominator != 1 or e.denominator != 1:
        raise ConfigError(f"betas {cfg.beta1}, {cfg.beta2} are not multiples of 1/{q}")
    return q, int(m), int(e)


def c_bar_count(cfg: BcConfig, q: int | None = None) -> int:
    if cfg.beta1 + cfg.beta2 >= 1:
        return cfg.nc
    q, m, e = common_denominator(cfg, q)
    return cfg.na * e + (cfg.N2 - cfg.N1) * (q - m)


def c_bar_partitions(cfg: BcConfig, q: int | None = None,
                     count: int | None = None) -> list[LevelSlice]:
    """The C̄_i slices, i = 1..count, with the wrap-around index rule.

    For beta1+beta2 >= 1 these are the X_c streams themselves.  Otherwise
    the 1/q levels of (y2c)^{(m+e)/q}_{m/q} come first, then those of
    (y2d)^1_{m/q}.
    """
    cfg.lab_ready()
    period = c_bar_count(cfg, q)
    if count is None:
        count = period
    if period == 0:
        return []
    if cfg.beta1 + cfg.beta2 >= 1:
        base = [LevelSlice("x", cfg.N1 + k, ZERO, ONE) for k in range(cfg.nc)]
    else:
        q, m, e = common_denominator(cfg, q)
        base = []
        for i in range(1, cfg.na * e + 1):
            s, r = divmod(i - 1, e)
            base.append(LevelSlice("y2c", s, Fraction(m + r, q), Fraction(m + r + 1, q)))
        for i in range(cfg.na * e + 1, period + 1):
            s, r = divmod(i - cfg.na * e - 1, q - m)
            base.append(LevelSlice("y2d", s, Fraction(m + r, q), Fraction(m + r + 1, q)))
    return [base[i % period] for i in range(count)]


def example2_c_table() -> list[tuple[str, list[tuple[int, Fraction, Fraction]]]]:
    """C_1..C_7 of the 1/4-level decomposition used for the (4,1,3) example.

    Entries are (kind, windows): kind "x" is a single input slice, "form" a
    random combination of the listed slices.  Windows are
    (input, low, high) with inputs numbered 0..4 for X_1..X_5, as the
    table is stated over five inputs.
    """
    q = Fraction
    top = [(j, q(3, 4), ONE) for j in range(3)]
    mids = [(3, q(1, 4), q(1, 2)), (4, q(1, 4), q(1, 2))]
    c1 = ("x", [(4, q(3, 4), ONE)])
    return [
        c1,
        ("x", [(4, q(1, 2), q(3, 4))]),
        ("form", top + mids),
        ("x", [(3, q(3, 4), ONE)]),
        ("x", [(3, q(1, 2), q(3, 4))]),
        ("form", top + mids),
        c1,
    ]


def instance_to_dict(cfg: BcConfig) -> dict:
    return cfg.to_dict()


def with_P(cfg: BcConfig, P) -> BcConfig:
    return replace(cfg, P=as_fraction(P))
