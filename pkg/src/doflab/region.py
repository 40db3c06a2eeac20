"""Exact-rational DoF region of the two-user MIMO BC with partial CSIT."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from itertools import combinations
from typing import Iterable, Sequence

from .channel import BcConfig, normalize_config
from .errors import RegionError
from .power_levels import as_fraction

ZERO, ONE = Fraction(0), Fraction(1)
Point = tuple[Fraction, Fraction]


def fmt(q: Fraction) -> str:
    return str(Fraction(q))


@dataclass(frozen=True)
class Halfspace:
    """a1·d1 + a2·d2 <= b."""
    a1: Fraction
    a2: Fraction
    b: Fraction
    tag: str = ""

    def __post_init__(self):
        for k in ("a1", "a2", "b"):
            object.__setattr__(self, k, as_fraction(getattr(self, k)))
        if self.a1 == 0 and self.a2 == 0:
            raise RegionError("degenerate", "halfspace with zero normal")

    def slack(self, d1, d2) -> Fraction:
        return self.b - self.a1 * d1 - self.a2 * d2

    def holds(self, d1, d2) -> bool:
        return self.slack(d1, d2) >= 0

    def to_dict(self) -> dict:
        return {"a1": fmt(self.a1), "a2": fmt(self.a2), "b": fmt(self.b), "tag": self.tag}


NONNEG = (Halfspace(-1, 0, 0, "d1>=0"), Halfspace(0, -1, 0, "d2>=0"))


def _as_cfg(cfg) -> BcConfig:
    if isinstance(cfg, BcConfig):
        return cfg
    return normalize_config(*cfg)


def beta_o_branches(M, N1, N2, b1, b2) -> tuple[Fraction | None, Fraction | None]:
    """(<1-branch, >=1-branch) values of beta_o; None where a denominator vanishes."""
    b1, b2 = as_fraction(b1), as_fraction(b2)
    den_lt = (N2 - N1) * (1 - b1) + (M - N2) * b2
    lt = b1 * b2 * (M - N2) / den_lt if den_lt != 0 else None
    den_ge = M - N1
    ge = (N1 - N2 + (N2 - N1) * b2 + (M - N1) * b1) / Fraction(den_ge) if den_ge else None
    return lt, ge


def beta_o_info(cfg) -> tuple[Fraction, str, bool]:
    """(beta_o, branch tag, degenerate flag)."""
    c = _as_cfg(cfg)
    if c.N2 > c.M:
        raise RegionError("regime", "beta_o is defined only in the N2 <= M regime")
    lt, ge = beta_o_branches(c.M, c.N1, c.N2, c.beta1, c.beta2)
    if c.beta1 + c.beta2 < 1:
        # denominator vanishes only together with the numerator
        return (lt, "lt1", False) if lt is not None else (ZERO, "lt1", True)
    # M = N1 forces N1 = N2 = M; the telescoped limit of the branch is beta1
    return (ge, "ge1", False) if ge is not None else (c.beta1, "ge1", True)


def beta_o(cfg) -> Fraction:
    return beta_o_info(cfg)[0]


@dataclass(frozen=True)
class RegionPolytope:
    config: BcConfig
    halfspaces: tuple[Halfspace, ...]
    vertices: tuple[Point, ...]
    regime: str
    branch: str | None = None
    beta_o: Fraction | None = None
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        c = self.config
        return {
            "config": {"M": c.M, "N1": c.N1, "N2": c.N2,
                       "beta1": fmt(c.beta1), "beta2": fmt(c.beta2)},
            "regime": self.regime,
            "branch": self.branch,
            "beta_o": None if self.beta_o is None else fmt(self.beta_o),
            "halfspaces": [h.to_dict() for h in self.halfspaces],
            "vertices": [[fmt(a), fmt(b)] for a, b in self.vertices],
            "sum_dof": fmt(sum_dof(self)),
            "notes": list(c.notes) + list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["d1", "d2"])
        for a, b in self.vertices:
            w.writerow([fmt(a), fmt(b)])
        return buf.getvalue()


def region_halfspaces(c: BcConfig) -> tuple[list[Halfspace], Fraction | None, str | None, list[str]]:
    M, N1, N2, b1, b2 = c.M, c.N1, c.N2, c.beta1, c.beta2
    flags = []
    if N2 <= M:
        bo, branch, degenerate = beta_o_info(c)
        if degenerate:
            flags.append("beta_o denominator vanishes; convention value used")
        hs = [
            Halfspace(1, 0, N1, "B1"),
            Halfspace(0, 1, N2, "B2"),
            Halfspace(Fraction(1, N1), Fraction(1, N2), 1 + Fraction(M - N1, N2) * b1, "B4"),
            Halfspace(1, 1, N2 + (M - N2) * b2, "B3"),
            Halfspace(1, 1, N2 + (M - N2) * bo, "B33"),
        ]
        return hs, bo, branch, flags
    hs = [
        Halfspace(1, 0, N1, "B7"),
        Halfspace(1, 1, M, "B8"),
        Halfspace(Fraction(1, N1), Fraction(1, M), 1 + Fraction(M - N1, M) * b1, "B9"),
    ]
    return hs, None, None, flags


def region(cfg) -> RegionPolytope:
    c = _as_cfg(cfg)
    hs, bo, branch, flags = region_halfspaces(c)
    hs = hs + list(NONNEG)
    return RegionPolytope(c, tuple(hs), tuple(enumerate_vertices(hs)),
                          c.regime, branch, bo, tuple(flags))


def _intersect(h: Halfspace, g: Halfspace) -> Point | None:
    det = h.a1 * g.a2 - h.a2 * g.a1
    if det == 0:
        return None
    return ((h.b * g.a2 - h.a2 * g.b) / det, (h.a1 * g.b - h.b * g.a1) / det)


def _ccw(points: list[Point]) -> list[Point]:
    if len(points) <= 2:
        return sorted(points, key=lambda p: (p[1], p[0]))
    cx = sum(p[0] for p in points) / len(points)
    cy = sum(p[1] for p in points) / len(points)

    def half(p):
        dx, dy = p[0] - cx, p[1] - cy
        return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1

    def cmp(p, q):
        hp, hq = half(p), half(q)
        if hp != hq:
            return hp - hq
        cross = (p[0] - cx) * (q[1] - cy) - (p[1] - cy) * (q[0] - cx)
        return -1 if cross > 0 else (1 if cross < 0 else 0)

    ordered = sorted(points, key=cmp_to_key(cmp))
    start = min(range(len(ordered)), key=lambda i: (ordered[i][1], ordered[i][0]))
    return ordered[start:] + ordered[:start]


def enumerate_vertices(halfspaces: Iterable[Halfspace]) -> list[Point]:
    """Extreme points of a bounded 2-D halfspace intersection, counterclockwise."""
    hs = list(halfspaces)
    if not hs:
        raise RegionError("unbounded", "no halfspaces")
    pts = set()
    for h, g in combinations(hs, 2):
        p = _intersect(h, g)
        if p is not None and all(k.holds(*p) for k in hs):
            pts.add(p)
    if not pts:
        parallel = all(h.a1 * hs[0].a2 - h.a2 * hs[0].a1 == 0 for h in hs)
        if parallel and _strip_nonempty(hs):
            raise RegionError("unbounded", "region contains a line")
        raise RegionError("empty", "halfspaces have empty intersection")
    for h in hs:
        for r in ((-h.a2, h.a1), (h.a2, -h.a1)):
            if all(k.a1 * r[0] + k.a2 * r[1] <= 0 for k in hs):
                raise RegionError("unbounded", f"recession direction {r}")
    return _ccw(list(pts))


def _strip_nonempty(hs: Sequence[Halfspace]) -> bool:
    # all normals parallel to n = (a1, a2) of the first; compare offsets along n
    n = (hs[0].a1, hs[0].a2)
    lo, hi = None, None
    for h in hs:
        s = h.a1 / n[0] if n[0] != 0 else h.a2 / n[1]
        bound = h.b / s
        if s > 0:
            hi = bound if hi is None else min(hi, bound)
        else:
            lo = bound if lo is None else max(lo, bound)
    return lo is None or hi is None or lo <= hi


def contains(reg: RegionPolytope, d1, d2) -> bool:
    d1, d2 = as_fraction(d1), as_fraction(d2)
    return all(h.holds(d1, d2) for h in reg.halfspaces)


def sum_dof(reg: RegionPolytope) -> Fraction:
    return max(a + b for a, b in reg.vertices)


def region_subset(inner: RegionPolytope, outer: RegionPolytope) -> bool:
    return all(contains(outer, *v) for v in inner.vertices)


def b3_active(reg: RegionPolytope) -> bool:
    """True when the B3 line touches the region (i.e. B3 is not strictly redundant)."""
    h = next((h for h in reg.halfspaces if h.tag == "B3"), None)
    return h is not None and any(h.slack(*v) == 0 for v in reg.vertices)


@dataclass
class MonotonicityReport:
    checked: int = 0
    boundary_points: int = 0
    findings: list[str] = field(default_factory=list)
    b3_active: list[tuple[str, str]] = field(default_factory=list)
    b33_looser_than_b3: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings


def cross_check_monotonicity(M: int, N1: int, N2: int,
                             grid: Sequence) -> MonotonicityReport:
    """Region inclusion along both beta axes and branch agreement on beta1+beta2 = 1."""
    grid = sorted({as_fraction(g) for g in grid})
    rep = MonotonicityReport()
    regs = {}
    for b1 in grid:
        for b2 in grid:
            r = region(normalize_config(M, N1, N2, b1, b2))
            regs[b1, b2] = r
            rep.checked += 1
            if r.regime == "N2<=M":
                if b3_active(r):
                    rep.b3_active.append((fmt(b1), fmt(b2)))
                if r.beta_o > b2:
                    rep.b33_looser_than_b3.append((fmt(b1), fmt(b2)))
            if b1 + b2 == 1 and r.regime == "N2<=M":
                rep.boundary_points += 1
                c = r.config
                lt, ge = beta_o_branches(c.M, c.N1, c.N2, c.beta1, c.beta2)
                if lt is not None and ge is not None and lt != ge:
                    rep.findings.append(f"branches differ at ({b1},{b2}): {lt} vs {ge}")
    for i, b1 in enumerate(grid):
        for j, b2 in enumerate(grid):
            if i + 1 < len(grid) and not region_subset(regs[b1, b2], regs[grid[i + 1], b2]):
                rep.findings.append(f"not monotone in beta1 at ({b1},{b2})")
            if j + 1 < len(grid) and not region_subset(regs[b1, b2], regs[b1, grid[j + 1]]):
                rep.findings.append(f"not monotone in beta2 at ({b1},{b2})")
    return rep


def branch_agreement(M, N1, N2, b1, b2) -> bool | None:
    """Exact comparison of both beta_o branches; None off the line beta1+beta2 = 1."""
    c = normalize_config(M, N1, N2, b1, b2)
    if c.beta1 + c.beta2 != 1 or c.N2 > c.M:
        return None
    lt, ge = beta_o_branches(c.M, c.N1, c.N2, c.beta1, c.beta2)
    if lt is None or ge is None:
        return lt == ge or None
    return lt == ge


def grid_points(steps: int) -> list[Fraction]:
    if steps < 1:
        raise RegionError("grid", "grid needs at least one point per axis")
    return [Fraction(i, steps - 1) if steps > 1 else ZERO for i in range(steps)]


def sweep_rows(M, N1, N2, grid) -> list[dict]:
    """Region summary over grid × grid; ``grid`` is a step count or explicit values."""
    pts = grid_points(grid) if isinstance(grid, int) else [as_fraction(g) for g in grid]
    rows = []
    for b1 in pts:
        for b2 in pts:
            r = region(normalize_config(M, N1, N2, b1, b2))
            agree = branch_agreement(M, N1, N2, b1, b2)
            rows.append({
                "beta1": fmt(b1), "beta2": fmt(b2),
                "beta_o": "" if r.beta_o is None else fmt(r.beta_o),
                "sum_dof": fmt(sum_dof(r)),
                "branch_agreement": "" if agree is None else str(agree).lower(),
                "vertices": " ".join(f"({fmt(a)},{fmt(b)})" for a, b in r.vertices),
            })
    return rows


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["beta1", "beta2", "beta_o", "sum_dof",
                                        "branch_agreement", "vertices"],
                       lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
