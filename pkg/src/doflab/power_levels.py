"""Integer power-level alphabets and the floor-based partition operators."""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError


def as_fraction(value) -> Fraction:
    """Coerce int / Fraction / "p/q" / exact decimal string into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise DomainError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            f = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"not a rational: {value!r}") from exc
        if "/" not in value and f.denominator > 10**6:
            raise DomainError(f"decimal {value!r} needs a denominator above 10^6")
        return f
    if isinstance(value, float):
        # floats only when they round-trip to a short decimal
        f = Fraction(repr(value))
        if f.denominator > 10**6:
            raise DomainError(f"float {value!r} is not a short exact decimal")
        return f
    raise DomainError(f"not a rational: {value!r}")


def iroot(n: int, k: int) -> int:
    """Largest r with r**k <= n (Newton iteration on integers)."""
    if n < 0 or k < 1:
        raise DomainError("iroot needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    # initial guess from the bit length, always >= the true root
    r = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        s = ((k - 1) * r + n // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def tdiv(a, b):
    """Integer division truncating toward zero (scalar or ndarray numerator)."""
    if isinstance(a, np.ndarray):
        q = np.abs(a) // b
        return np.where(a < 0, -q, q)
    q = abs(a) // b
    return -q if a < 0 else q


class PowerScale:
    """Power P together with a cache of pbar(λ) = ⌊√(P^λ)⌋."""

    def __init__(self, P):
        P = as_fraction(P)
        if P < 1:
            raise DomainError(f"P must be >= 1, got {P}")
        self.P = P
        self._cache: dict[Fraction, int] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"PowerScale(P={self.P})"

    def __eq__(self, other):
        return isinstance(other, PowerScale) and other.P == self.P

    def __hash__(self):
        return hash(self.P)

    @classmethod
    def from_pbar(cls, pbar: int) -> "PowerScale":
        return cls(pbar * pbar)

    @property
    def Pbar(self) -> int:
        return self.pbar(1)

    def pbar(self, lam) -> int:
        lam = as_fraction(lam)
        if lam < 0:
            raise DomainError(f"negative exponent {lam}")
        hit = self._cache.get(lam)
        if hit is not None:
            return hit
        p, q = lam.numerator, lam.denominator
        # ⌊(P^p)^{1/(2q)}⌋ = iroot(⌊P^p⌋, 2q) since r^k is an integer
        power = self.P ** p
        val = iroot(power.numerator // power.denominator, 2 * q)
        with self._lock:
            self._cache[lam] = val
        return val

    # raw-integer (and ndarray) operators; no alphabet checks
    def low(self, x, lam1):
        b = self.pbar(lam1)
        return x - b * tdiv(x, b)

    def mid(self, x, lam1, lam2):
        lam1, lam2 = as_fraction(lam1), as_fraction(lam2)
        if lam1 > lam2:
            raise DomainError(f"window ({lam1}, {lam2}) has low > high")
        if lam1 == lam2:
            return x * 0
        return tdiv(self.low(x, lam2), self.pbar(lam1))

    def top(self, x, lam):
        lam = as_fraction(lam)
        if not 0 <= lam <= 1:
            raise DomainError(f"top fraction {lam} outside [0,1]")
        return self.mid(x, 1 - lam, 1)


@dataclass(frozen=True)
class DiscreteSymbol:
    value: int
    level: Fraction
    scale: PowerScale

    def __post_init__(self):
        object.__setattr__(self, "level", as_fraction(self.level))
        if not 0 <= self.value < self.scale.pbar(self.level):
            raise DomainError(
                f"{self.value} outside alphabet X_{self.level} = "
                f"{{0..{self.scale.pbar(self.level) - 1}}}"
            )


@dataclass(frozen=True)
class SymbolVector:
    entries: tuple[DiscreteSymbol, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        scales = {e.scale.P for e in self.entries}
        if len(scales) > 1:
            raise DomainError("entries use different power scales")

    @classmethod
    def of(cls, values: Sequence[int], scale: PowerScale, level=1):
        return cls(tuple(DiscreteSymbol(int(v), level, scale) for v in values))

    @property
    def scale(self) -> PowerScale | None:
        return self.entries[0].scale if self.entries else None

    @property
    def values(self) -> list[int]:
        return [e.value for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


def pbar(scale: PowerScale, lam) -> int:
    return scale.pbar(lam)


def part_low(x: DiscreteSymbol, lam1) -> int:
    """(X)_{λ1}: the bottom λ1 power levels of x."""
    if as_fraction(lam1) < 0:
        raise DomainError("negative exponent")
    return x.scale.low(x.value, lam1)


def part_mid(x: DiscreteSymbol, lam1, lam2) -> int:
    """(X)^{λ2}_{λ1}: the levels of x between λ1 and λ2."""
    return x.scale.mid(x.value, lam1, lam2)


def top_fraction(x: DiscreteSymbol, lam) -> int:
    """(X)^λ = (X)^1_{1-λ}; x must lie in X_1."""
    if x.value >= x.scale.pbar(1):
        raise DomainError(f"{x.value} is not in X_1")
    return x.scale.top(x.value, lam)


def concat(v: SymbolVector, w: SymbolVector) -> SymbolVector:
    if v.entries and w.entries and v.scale != w.scale:
        raise DomainError("scale mismatch in concatenation")
    return SymbolVector(v.entries + w.entries)


def rotate_slice(v, m: int, n: int):
    """V_{m→n}: n entries starting after position m, wrapping around.

    n = 0 is accepted for any m <= len(v) and yields an empty slice.
    """
    k = len(v)
    if m < 0 or n < 0:
        raise DomainError("negative slice bounds")
    if n == 0 and m <= k:
        out = []
    elif m >= k or n >= k:
        raise DomainError(f"slice ({m},{n}) out of range for length {k}")
    elif m + n <= k:
        out = [v[i] for i in range(m, m + n)]
    else:
        out = [v[i] for i in range(m, k)] + [v[i] for i in range(m + n - k)]
    if isinstance(v, SymbolVector):
        return SymbolVector(tuple(out))
    return out


def submatrix(V, a: int, b: int, c: int, d: int) -> np.ndarray:
    """V_{(a→b):(c→d)}: rows a+1..a+b and columns c+1..c+d."""
    V = np.asarray(V)
    if V.ndim != 2:
        raise DomainError("submatrix needs a 2-D array")
    rows, cols = V.shape
    if min(a, b, c, d) < 0 or a + b > rows or c + d > cols:
        raise DomainError(f"submatrix bounds exceed {rows}x{cols}")
    return V[a:a + b, c:c + d]
