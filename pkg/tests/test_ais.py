from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from doflab.ais import (CodewordPair, alignment_bound, alignment_probability, ais_instance,
                        evaluate, expected_sizes_sweep, growth_fit, identity_instance,
                        image_map, input_grid, lossy_instance, toy_example_check, toy_instance)
from doflab.engine import Component, Observable
from doflab.errors import BudgetExceeded, ConfigError
from doflab.power_levels import PowerScale
from doflab.report import FAIL, INCONCLUSIVE, PASS

S16 = PowerScale.from_pbar(4)


def test_identity_sets_are_singletons():
    parts, full = identity_instance().build([0.7, -0.4])
    X = input_grid(2, S16)
    im = image_map(parts, full, X, S16)
    assert set(im.sizes) == {1} and im.expected_size == 1 and im.cond_entropy == 0


def test_constant_full_image_single_set():
    parts, full = lossy_instance().build([0.7, -0.4, 0.3, 0.9])
    X = input_grid(2, S16)
    im = image_map(parts, full, X, S16)
    assert len(im.sets) == 1 and im.max_size == len(im.parts)


@given(st.lists(st.floats(0.05, 1.0), min_size=4, max_size=4),
       st.lists(st.booleans(), min_size=4, max_size=4), st.integers(0, 2 ** 16))
def test_image_map_partition_and_fd_bound(mags, signs, seed):
    g = [m if s else -m for m, s in zip(mags, signs)]
    scale = PowerScale.from_pbar(8)
    X = input_grid(2, scale)
    order = np.random.default_rng(seed).permutation(len(X))
    im = image_map(*toy_instance().build(g), X, scale, order)
    flat = sorted(i for s in im.sets for i in s)
    assert flat == list(range(len(im.parts)))   # disjoint and covering
    assert im.sizes.sum() == len(im.parts)
    assert im.probs.sum() == pytest.approx(1.0)
    assert im.cond_entropy <= np.log2(im.max_size) + 1e-9


def test_toy_image_map_enumeration_oracle():
    g = [0.81, -0.37, 0.55, 0.62]
    parts, full = toy_instance().build(g)
    X = input_grid(2, S16)
    im = image_map(parts, full, X, S16)
    # brute force: distinct part-images and their sets, first-producer rule
    up = evaluate(parts, X, S16)
    u = evaluate(full, X, S16)
    first = {}
    for row, val in zip(map(tuple, up), map(tuple, u)):
        first.setdefault(row, val)
    groups = {}
    for row, val in first.items():
        groups.setdefault(val, set()).add(row)
    ours = {frozenset(tuple(im.parts[i]) for i in s) for s in im.sets}
    assert ours == {frozenset(s) for s in groups.values()}
    assert im.max_size == max(len(s) for s in groups.values())


def test_input_grid_budget():
    with pytest.raises(BudgetExceeded):
        input_grid(3, PowerScale.from_pbar(128), budget=1000)


def test_identical_codewords_always_align():
    pair = CodewordPair((3, 5), (3, 5), S16)
    est = alignment_probability(pair, draws=200)
    assert est.probability == 1.0 and est.bound == 1.0 and est.within_bound


def test_far_codewords_rarely_align():
    scale = PowerScale.from_pbar(1024)
    pair = CodewordPair((1000,), (0,), scale)
    est = alignment_probability(pair, draws=2000, seed=3)
    assert est.bound == pytest.approx(2 / 1000)
    assert est.probability <= est.bound + 3 * est.stderr
    assert est.within_bound


def test_zero_difference_below_cut_aligns_top_parts():
    scale = PowerScale.from_pbar(32)
    E, F_ = (20, 7), (21, 7)
    pair = CodewordPair(E, F_, scale, window=(F(4, 5), F(1)))
    assert pair.max_A == 0
    assert alignment_probability(pair, draws=100).probability == 1.0


def test_codeword_shapes():
    with pytest.raises(ConfigError):
        CodewordPair((1, 2), (1,), S16)
    with pytest.raises(ConfigError):
        CodewordPair((1, 2, 3), (1, 2, 3), S16, n=2)
    assert CodewordPair((1, 2, 3, 4), (0, 0, 0, 0), S16, n=2).A.shape == (2, 2)


@pytest.mark.parametrize("pb", [4, 8, 16])
def test_delta_breve_bound_exhaustive(pb):
    scale = PowerScale.from_pbar(pb)
    for e, f in product(range(pb), repeat=2):
        assert CodewordPair((e,), (f,), scale).delta_bound_holds()


@given(st.integers(1, 2), st.integers(1, 2), st.integers(0, 2 ** 20), st.data())
def test_alignment_bound_statistical(n, K, seed, data):
    scale = PowerScale.from_pbar(64)
    M = 2
    E = tuple(data.draw(st.lists(st.integers(0, 63), min_size=n * M, max_size=n * M)))
    F_ = tuple(data.draw(st.lists(st.integers(0, 63), min_size=n * M, max_size=n * M)))
    pair = CodewordPair(E, F_, scale, n=n)
    est = alignment_probability(pair, draws=300, seed=seed, K=K)
    assert est.bound == alignment_bound(pair, K)
    assert est.within_bound


def test_growth_fit_shapes():
    c1, c2, b, r = growth_fit([4, 8, 16, 32], [9.0, 1.0, 2.0, 3.0])
    assert c2 == pytest.approx(1.0) and c1 == pytest.approx(-2.0) and r == pytest.approx(0)
    _, _, b, _ = growth_fit([4, 8, 16, 32], [1, 8, 16, 32])
    assert b == pytest.approx(1.0)
    assert np.isnan(growth_fit([4, 8], [1, 2])[2])


def test_identity_sweep_constant_one():
    rep = expected_sizes_sweep(identity_instance(), draws=5)
    assert rep.expected_size == [1.0] * 4 and rep.verdict == PASS
    assert rep.c2 == pytest.approx(0.0, abs=1e-12)


def test_lossy_sweep_fails():
    rep = expected_sizes_sweep(lossy_instance(), draws=5)
    assert rep.verdict == FAIL and rep.exponent > 1


def test_sweep_inconclusive_with_two_points():
    assert expected_sizes_sweep(identity_instance(), (4, 8), draws=2).verdict == INCONCLUSIVE


def test_sweep_reproducible():
    a = expected_sizes_sweep(toy_instance(), draws=10, seed=5)
    b = expected_sizes_sweep(toy_instance(), draws=10, seed=5)
    assert a.to_json() == b.to_json() and a.fd_bound_ok
    assert a.to_csv().splitlines()[0] == "Pbar,expected_size,stderr"


def test_ais_instance_lookup():
    assert ais_instance("toy_same").name == "toy_same"
    with pytest.raises(ConfigError):
        ais_instance("nope")
    with pytest.raises(ConfigError):
        toy_instance(cut=F(3, 2))


def test_toy_check_variants():
    quick = dict(P_sweep=(16, 64, 256, 1024), draws=20, seed=0)
    assert toy_example_check(**quick).verdict == PASS
    full_top = toy_example_check(cut=0, **quick)
    assert all(g <= 1e-12 for g in full_top.gap)
    assert toy_example_check(zero_inputs=(1,), **quick).verdict == PASS
    same = toy_example_check(same=True, **quick)
    assert same.verdict == PASS


def test_windowed_observable_evaluate():
    scale = PowerScale.from_pbar(16)
    X = input_grid(1, scale)
    obs = Observable.of(Component.slice(0, F(1, 2), 1))
    assert list(evaluate(obs, X, scale)[:, 0]) == [x // 4 for x in range(16)]
