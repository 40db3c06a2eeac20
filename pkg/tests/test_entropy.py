import math
from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doflab.engine import (Component, Label, Observable, conditional_entropies, entropies,
                           joint_pmf, uniform_laws)
from doflab.entropy import (FinitePmf, check_submodularity, conditional_exact_entropy,
                            exact_entropy, project, submodularity_sides)
from doflab.errors import BudgetExceeded, DomainError
from doflab.power_levels import PowerScale


def test_exact_entropy_examples():
    u4 = FinitePmf.uniform([4])
    assert exact_entropy(lambda x: x, u4).bits == 2
    assert exact_entropy(lambda x: 0, u4).bits == 0
    assert exact_entropy(lambda x: x, FinitePmf.uniform([4, 4])).bits == 4


def test_pmf_validation():
    with pytest.raises(DomainError):
        FinitePmf([(0,), (1,)], [F(1, 2), F(1, 3)])
    with pytest.raises(DomainError):
        FinitePmf([(0,), (1,)], [1.5, -0.5])
    FinitePmf([(0,), (1,)], [0.5, 0.5 + 1e-13])
    with pytest.raises(BudgetExceeded):
        FinitePmf.uniform([2 ** 12, 2 ** 12])


def test_submodularity_examples():
    pmf = FinitePmf([(0,), (1,)], [F(1, 2), F(1, 2)])
    bit = lambda x: x[0]  # noqa: E731
    assert check_submodularity([bit, bit, bit], 2, pmf)
    lhs, rhs = submodularity_sides(np.full((2, 2, 2), 1 / 8), 2)
    assert lhs == pytest.approx(rhs) == pytest.approx(6)
    with pytest.raises(DomainError):
        check_submodularity([bit], 2, pmf)


def test_three_copies_sides():
    t = np.zeros((2, 2, 2))
    t[0, 0, 0] = t[1, 1, 1] = 0.5
    assert submodularity_sides(t, 2) == pytest.approx((2.0, 3.0))


@settings(max_examples=1000)
@given(st.lists(st.floats(0, 1), min_size=12, max_size=12), st.integers(1, 3))
def test_submodularity_fuzz(weights, n):
    t = np.array(weights).reshape(2, 2, 3) + 1e-3
    t /= t.sum()
    lhs, rhs = submodularity_sides(t, n)
    assert lhs <= rhs + 1e-9


@given(st.lists(st.integers(0, 5), min_size=8, max_size=8), st.integers(1, 3))
def test_check_submodularity_with_label(vals, n):
    sup = list(product(range(2), repeat=3))
    w = np.array(vals, dtype=float) + 1
    pmf = FinitePmf(sup, (w / w.sum()).tolist())
    vars_ = [project([0]), project([1]), lambda x: x[0] ^ x[2]]
    assert check_submodularity(vars_, n, pmf, label=lambda x: x[2])


@given(st.lists(st.integers(0, 4), min_size=9, max_size=9))
def test_chain_rule_and_conditioning(vals):
    sup = list(product(range(3), repeat=2))
    w = np.array(vals, dtype=float) + 0.5
    pmf = FinitePmf(sup, (w / w.sum()).tolist())
    A, B = (lambda x: x[0] + x[1]), (lambda x: x[0] * x[1] % 3)
    hab = exact_entropy(lambda x: (A(x), B(x)), pmf).bits
    ha = exact_entropy(A, pmf).bits
    assert hab == pytest.approx(ha + conditional_exact_entropy(B, A, pmf), abs=1e-12)
    assert conditional_exact_entropy(A, B, pmf) <= ha + 1e-12


# --- convolution engine vs brute force -------------------------------------

def _brute(obs: Observable, scale: PowerScale, n: int, label=None):
    sup = list(product(range(scale.pbar(1)), repeat=n))
    pmf = FinitePmf(sup, [F(1, len(sup))] * len(sup))

    def ev(x):
        comps = []
        for c in obs.components:
            comps.append(sum(int(math.trunc(t.coef * int(scale.mid(x[t.index], t.low, t.high))))
                             for t in c.terms))
        return tuple(c if lo is None else int(scale.mid(c, lo, hi)) for (i, lo, hi) in obs.outputs
                     for c in [comps[i]])
    if label is None:
        return exact_entropy(ev, pmf).bits
    return conditional_exact_entropy(ev, label, pmf)


levels = st.sampled_from([F(0), F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(3, 4), F(1)])
coefs = st.floats(-2, 2, allow_nan=False).filter(lambda g: abs(g) > 0.05)


@st.composite
def observables(draw, n=3):
    comps = []
    for _ in range(draw(st.integers(1, 2))):
        terms = []
        for j in draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=3, unique=True)):
            lo, hi = sorted((draw(levels), draw(levels)))
            terms.append((j, lo, hi))
        comps.append(Component.linear(terms, [draw(coefs) for _ in terms]))
    obs = Observable(tuple(comps))
    if draw(st.booleans()):
        obs = obs.top(draw(st.sampled_from([F(1, 2), F(1, 3)])))
    return obs


@given(observables(), st.sampled_from([16, 64]))
def test_engine_matches_brute_force(obs, P):
    scale = PowerScale(P)
    h = entropies([obs], uniform_laws(3, scale), scale)[0]
    assert h == pytest.approx(_brute(obs, scale, 3), abs=1e-9)


@given(observables(), st.sampled_from(["msb", "parity", "none"]), st.integers(0, 2))
def test_conditional_engine_matches_brute_force(obs, kind, coord):
    scale = PowerScale(16)
    lab = Label(kind, coord)
    h = conditional_entropies([obs], uniform_laws(3, scale), lab, scale)[0]
    size = scale.pbar(1)
    fn = {"msb": lambda x: x[coord] >= (size + 1) // 2, "parity": lambda x: x[coord] % 2,
          "none": lambda x: 0}[kind]
    assert h == pytest.approx(_brute(obs, scale, 3, fn), abs=1e-9)


def test_engine_bounds_and_budget():
    scale = PowerScale(256)
    obs = Observable.of(Component.slice(0, 0, 1), Component.slice(1, 0, 1))
    assert entropies([obs], uniform_laws(2, scale), scale)[0] == pytest.approx(8)
    assert entropies([obs.top(F(1, 2))], uniform_laws(2, scale), scale)[0] == pytest.approx(4)
    with pytest.raises(BudgetExceeded):
        joint_pmf(obs.components, uniform_laws(2, scale), scale, budget=100)


def test_label_identity_gives_zero():
    scale = PowerScale(16)
    # at P̄ = 4 the top half-level of X is its msb
    msb = Observable.of(Component.slice(0, F(1, 2), 1))
    assert conditional_entropies([msb], uniform_laws(1, scale),
                                 Label("msb", 0), scale)[0] == pytest.approx(0.0)
    other = Observable.of(Component.slice(1, 0, 1))
    assert conditional_entropies([other], uniform_laws(2, scale),
                                 Label("msb", 0), scale)[0] == pytest.approx(2.0)
    # X itself given its msb loses exactly one bit
    x = Observable.of(Component.slice(0, 0, 1))
    assert conditional_entropies([x], uniform_laws(1, scale), Label("msb", 0),
                                 scale)[0] == pytest.approx(1.0)
