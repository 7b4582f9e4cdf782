import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lssopt.concentration import (
    ConcentrationState,
    apply_patience,
    bin_histogram,
    bin_index,
    concentration_1d,
    concentration_nd,
    kl_term,
    tv_term,
)
from lssopt.domain import BoxDomain
from lssopt.errors import InvalidInputError


def test_bin_histogram_examples():
    assert np.allclose(bin_histogram([0.01, 0.05, 0.1, 0.2], (0, 1), 4), [1, 0, 0, 0])
    assert np.allclose(bin_histogram([0.1, 0.3, 0.6, 0.9], (0, 1), 4), [0.25] * 4)
    assert np.allclose(bin_histogram([0.0, 1.0], (0, 1), 2), [0.5, 0.5])
    with pytest.raises(InvalidInputError):
        bin_histogram([], (0, 1), 2)


def test_kl_term_examples():
    assert kl_term([0.25] * 4, 4) == pytest.approx(0.0, abs=1e-15)
    assert kl_term([1, 0, 0, 0], 4) == pytest.approx(1.0, abs=1e-12)
    assert kl_term([0.5, 0.5, 0, 0], 4) == pytest.approx(math.log(2) / math.log(4), abs=1e-12)
    assert kl_term([1.0], 1) == 0.0


def test_tv_term_examples():
    assert tv_term([0, 1, 0], 1) == 1.0
    assert tv_term([1, 0, 0], 2) == 0.0
    assert tv_term([0.25] * 4, 2) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(IndexError):
        tv_term([0.5, 0.5], 2)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12), st.data())
def test_tv_dual_form(raw, data):
    p = np.asarray(raw)
    if p.sum() == 0:
        return
    mu = p / p.sum()
    k = data.draw(st.integers(0, len(mu) - 1))
    assert tv_term(mu, k) == pytest.approx(mu[k], abs=1e-12)


def test_concentration_1d_examples():
    assert concentration_1d([0.91, 0.92, 0.95], 0.9, (0, 1), 3) == 1.0
    spread = (np.arange(10) + 0.5) / 10
    assert concentration_1d(spread, 0.05, (0, 1), 10) == pytest.approx(0.01, abs=1e-12)
    assert concentration_1d([0.1, 0.12, 0.2, 0.15], 0.9, (0, 1), 4) == pytest.approx(1.0, abs=1e-12)
    assert concentration_1d([0.3], 0.9, (0, 1), 2) == 1.0


def test_concentration_nd_examples():
    dom1 = BoxDomain.unit(1)
    agents = [[0.1], [0.6], [0.65]]
    ref = concentration_1d([0.1, 0.6, 0.65], 0.6, (0, 1), 3)
    assert concentration_nd(agents, [0.6], dom1, mode="max") == ref
    assert concentration_nd(agents, [0.6], dom1, mode="mean") == ref
    dom2 = BoxDomain.unit(2)
    pts = [[0.1, 0.1], [0.5, 0.12], [0.9, 0.9]]
    c0 = concentration_1d([0.1, 0.5, 0.9], 0.1, (0, 1), 3)
    c1 = concentration_1d([0.1, 0.12, 0.9], 0.1, (0, 1), 3)
    assert concentration_nd(pts, [0.1, 0.1], dom2, mode="max") == pytest.approx(max(c0, c1))
    assert concentration_nd(pts, [0.1, 0.1], dom2, mode="mean") == pytest.approx((c0 + c1) / 2)
    with pytest.raises(InvalidInputError):
        concentration_nd(pts, [0.1, 0.1], dom2, mode="median")


agents_strategy = st.lists(st.floats(0, 1), min_size=2, max_size=12)


@given(agents_strategy, st.floats(0, 1), st.integers(2, 12))
def test_range(agents, star, bins):
    assert 0.0 <= concentration_1d(agents, star, (0, 1), bins) <= 1.0


@given(agents_strategy, st.data(), st.integers(2, 12))
def test_full_concentration_iff_all_share_star_bin(agents, data, bins):
    # the incumbent is itself an agent, so its bin is never empty
    star = data.draw(st.sampled_from(agents))
    c = concentration_1d(agents, star, (0, 1), bins)
    lam = bin_histogram(agents, (0, 1), bins)[int(bin_index(star, (0, 1), bins))]
    assert (c == pytest.approx(1.0, abs=1e-12)) == (lam == 1.0)


def test_empty_star_bin_reduces_to_kl_term():
    agents = [0.1, 0.2, 0.45]
    mu = bin_histogram(agents, (0, 1), 4)
    assert concentration_1d(agents, 0.9, (0, 1), 4) == pytest.approx(kl_term(mu, 4), abs=1e-15)


@given(agents_strategy, st.floats(0, 1), st.randoms(use_true_random=False))
def test_permutation_invariance(agents, star, rnd):
    shuffled = list(agents)
    rnd.shuffle(shuffled)
    assert concentration_1d(shuffled, star, (0, 1), len(agents)) == concentration_1d(agents, star, (0, 1), len(agents))


def test_random_configurations_in_range():
    rng = np.random.default_rng(0)
    dom = BoxDomain.unit(3)
    for _ in range(10_000):
        n = int(rng.integers(1, 9))
        pts = rng.random((n, 3))
        star = pts[int(rng.integers(n))]
        c = concentration_nd(pts, star, dom, mode=("mean", "max")[int(rng.integers(2))])
        assert 0.0 <= c <= 1.0


def test_apply_patience_examples():
    s = ConcentrationState(patience=2, deflate_factor=0.5, inflate_factor=0.5, effective_value=0.8)
    s.epochs_without_improvement = 3
    apply_patience(s, raw=0.1, improved=True)
    assert s.epochs_without_improvement == 0
    s = ConcentrationState(patience=2, deflate_factor=0.5, effective_value=0.8)
    s.epochs_without_improvement = 2
    apply_patience(s, raw=0.9, improved=False)
    assert s.effective_value == pytest.approx(0.4)
    s = ConcentrationState(inflate_factor=0.5, effective_value=0.0)
    apply_patience(s, raw=1.0, improved=False)
    assert s.effective_value == 0.5 and s.raw_value == 1.0
    with pytest.raises(InvalidInputError):
        ConcentrationState(patience=0)
    with pytest.raises(InvalidInputError):
        ConcentrationState(deflate_factor=1.5)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), max_size=40))
def test_patience_keeps_value_in_unit_interval(steps):
    s = ConcentrationState()
    for raw, improved in steps:
        apply_patience(s, raw, improved)
        assert 0.0 <= s.effective_value <= 1.0
        if improved:
            assert s.epochs_without_improvement == 0
