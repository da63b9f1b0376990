import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from surfsim import (
    Geometric,
    InversePower,
    MinOfK,
    RegimeLabel,
    TableDist,
    ZetaPareto,
    classify_regime,
    make_distribution,
)
from surfsim.dists import MAX_DELAY, zeta_sum

ALL_KINDS = [
    ZetaPareto(0.6),
    InversePower(0.5),
    Geometric(0.3),
    TableDist((0.2, 0.3, 0.5)),
    ZetaPareto(0.6).min_of_k(2),
]


def rng(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def test_zeta_pareto_normalizer_alpha_one():
    # c = 1/zeta(2) = 6/pi^2, and q_1 = c
    d = ZetaPareto(1.0)
    assert abs(d.pmf(1) - 6.0 / math.pi ** 2) < 1e-12


def test_zeta_sum_known_values():
    assert abs(zeta_sum(2.0) - math.pi ** 2 / 6.0) < 1e-12
    assert abs(zeta_sum(4.0) - math.pi ** 4 / 90.0) < 1e-12


def test_point_mass_table():
    d = TableDist((1.0,))
    assert d.pmf(1) == 1.0
    assert d.tail(1) == 1.0
    assert d.tail(2) == 0.0


def test_inverse_power_examples():
    d = InversePower(0.5)
    assert d.tail(4) == pytest.approx(0.5, abs=1e-15)
    assert d.pmf(1) == pytest.approx(1.0 - 2 ** -0.5, abs=1e-15)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan])
def test_rejects_bad_alpha(bad):
    with pytest.raises(ValueError):
        ZetaPareto(bad)
    with pytest.raises(ValueError):
        InversePower(bad)


def test_rejects_malformed_tables():
    with pytest.raises(ValueError):
        TableDist(())
    with pytest.raises(ValueError):
        TableDist((0.5, -0.1, 0.6))
    with pytest.raises(ValueError):
        TableDist((0.5, 0.4))  # sums to 0.9
    with pytest.raises(ValueError):
        Geometric(1.0)
    with pytest.raises(ValueError):
        Geometric(0.0)


def test_make_distribution_specs():
    d = make_distribution({"kind": "zeta_pareto", "alpha": 0.6})
    assert isinstance(d, ZetaPareto) and d.alpha == 0.6
    d = make_distribution({"kind": "geometric", "p": 0.5})
    assert isinstance(d, Geometric) and d.success_prob == 0.5
    d = make_distribution({"kind": "min_of_k", "base": {"kind": "inverse_power", "alpha": 0.4}, "k": 3})
    assert isinstance(d, InversePower) and d.alpha == pytest.approx(1.2)
    with pytest.raises(ValueError):
        make_distribution({"kind": "nope"})
    with pytest.raises(ValueError):
        make_distribution({"kind": "zeta_pareto"})
    # spec round-trip
    for d in ALL_KINDS:
        d2 = make_distribution(d.spec())
        assert d2.tail(7) == pytest.approx(d.tail(7), abs=1e-15)


# ---------------------------------------------------------------------------
# tails and point masses
# ---------------------------------------------------------------------------


def test_tail_examples():
    for d in ALL_KINDS:
        assert d.tail(1) == 1.0
    assert Geometric(0.5).tail(3) == pytest.approx(0.25, abs=1e-15)
    assert InversePower(0.3).tail(1000) == pytest.approx(1000.0 ** -0.3, abs=1e-15)


@pytest.mark.parametrize("d", ALL_KINDS, ids=lambda d: d.kind + str(getattr(d, "alpha", "")))
def test_pmf_matches_tail_differences(d):
    n = 10 ** 4
    q = d.pmf_array(n)
    t = d.tail_array(n + 1)
    assert np.all(q >= 0.0)
    assert np.max(np.abs(q - (t[:-1] - t[1:]))) < 1e-12
    # scalar accessors agree with the vectors
    for i in (1, 2, 17, 9999):
        assert d.pmf(i) == pytest.approx(q[i - 1], abs=1e-12)
        assert d.tail(i) == pytest.approx(t[i - 1], abs=1e-12)


@pytest.mark.parametrize("d", ALL_KINDS, ids=lambda d: d.kind + str(getattr(d, "alpha", "")))
def test_tails_monotone_and_normalized(d):
    t = d.tail_array(2000)
    assert t[0] == 1.0
    assert np.all(np.diff(t) <= 0.0)
    q = d.pmf_array(50_000)
    # mass identity: 1 - sum of the first n masses equals the tail at n+1
    assert abs((1.0 - q.sum()) - d.tail(50_001)) < 1e-9


def test_max_pair_tail():
    d = TableDist((1.0,))
    assert d.max_pair_tail(1) == 1.0
    assert d.max_pair_tail(2) == 0.0
    assert Geometric(0.5).max_pair_tail(3) == pytest.approx(0.4375, abs=1e-15)


# ---------------------------------------------------------------------------
# means
# ---------------------------------------------------------------------------


def test_mean_examples():
    assert Geometric(0.5).mean() == pytest.approx(2.0)
    assert InversePower(0.6).mean() == math.inf
    assert TableDist((0.5, 0.5)).mean() == pytest.approx(1.5)
    assert ZetaPareto(0.6).mean() == math.inf
    # zeta(1.2)/zeta(2.2)
    assert ZetaPareto(1.2).mean() == pytest.approx(zeta_sum(1.2) / zeta_sum(2.2), rel=1e-12)


def test_min_mean_zeta_pareto_frozen_value():
    # reference: direct Hurwitz-zeta summation (3e6 terms + integral tail),
    # evaluated once with scipy.special.zeta
    got = ZetaPareto(0.6).min_of_k(2).mean()
    assert got == pytest.approx(3.621264074729835, rel=1e-9)


def test_mean_is_sum_of_tails():
    for d in [Geometric(0.4), TableDist((0.1, 0.2, 0.7)), InversePower(2.5)]:
        t = d.tail_array(10 ** 6)
        assert d.mean() == pytest.approx(float(t.sum()), rel=1e-9)


# ---------------------------------------------------------------------------
# min_of_k
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("d", ALL_KINDS[:4], ids=lambda d: d.kind)
def test_min_of_k_tail_identity(d):
    for k in (1, 2, 3, 5):
        m = d.min_of_k(k)
        for i in range(1, 101):
            assert m.tail(i) == pytest.approx(d.tail(i) ** k, abs=1e-13)


def test_min_of_k_identity_k1():
    for d in ALL_KINDS:
        assert d.min_of_k(1) is d


def test_min_of_k_examples():
    m = InversePower(0.3).min_of_k(2)
    assert m.tail(10) == pytest.approx(10.0 ** -0.6, rel=1e-12)
    assert m.mean() == math.inf
    m2 = TableDist((0.5, 0.5)).min_of_k(2)
    assert m2.pmf(1) == pytest.approx(0.75, abs=1e-15)
    assert m2.pmf(2) == pytest.approx(0.25, abs=1e-15)
    g = Geometric(0.5).min_of_k(2)
    assert isinstance(g, Geometric)
    assert g.mean() == pytest.approx(1.0 / 0.75)


def test_min_of_k_wrapper_collapses():
    m = ZetaPareto(0.5).min_of_k(2).min_of_k(3)
    assert isinstance(m, MinOfK) and m.k == 6


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_point_mass_sampling():
    d = TableDist((1.0,))
    assert np.all(d.sample_array(rng(), 1000) == 1)


def test_inverse_power_inversion_example():
    # u = 0.25, alpha = 0.5: the continuous inverse lands exactly on 16
    d = InversePower(0.5)
    assert d._invert(np.array([0.25]))[0] == 16


def test_geometric_frequency_band():
    d = Geometric(0.5)
    draws = d.sample_array(rng(42), 10 ** 6)
    freq = np.mean(draws == 1)
    assert 0.498 <= freq <= 0.502


def test_sampling_deterministic():
    for d in ALL_KINDS:
        a = d.sample_array(rng(7), 64)
        b = d.sample_array(rng(7), 64)
        assert np.array_equal(a, b)
        assert a.min() >= 1


@pytest.mark.parametrize("d", ALL_KINDS, ids=lambda d: d.kind + str(getattr(d, "alpha", "")))
def test_sampler_chi_square(d):
    # goodness of fit over the first 50 support points plus a pooled tail
    draws = d.sample_array(rng(2024), 10 ** 6)
    edges = np.arange(1, 52)
    counts = np.zeros(51)
    counts[:50] = np.bincount(np.clip(draws, 1, 51), minlength=52)[1:51]
    counts[50] = np.sum(draws > 50)
    probs = np.append(d.pmf_array(50), d.tail(51))
    keep = probs * 10 ** 6 >= 5  # drop bins with tiny expectation
    stat, pvalue = chisquare(counts[keep], probs[keep] / probs[keep].sum() * counts[keep].sum())
    assert pvalue > 1e-3


def test_zeta_pareto_tail_inversion_matches_reference():
    # tiny cache horizon forces the analytic-tail branch; compare against a
    # bisection reference on the same tail function
    d = ZetaPareto(0.3, cache_horizon=64)

    def reference(u):
        if d.tail(MAX_DELAY) >= u:
            return MAX_DELAY  # documented delay clamp
        lo, hi = 1, 2
        while d.tail(hi) >= u:
            lo, hi = hi, hi * 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if d.tail(mid) >= u:
                lo = mid
            else:
                hi = mid
        return lo

    us = np.concatenate([
        np.linspace(1e-9, 1.0, 41),
        [d.tail(64), d.tail(65), d.tail(66), 1e-12],
    ])
    got = d._invert(us)
    for u, z in zip(us, got):
        assert z == reference(u), f"u={u}"


def test_zeta_pareto_beyond_horizon_law():
    # empirical tail frequencies against analytic tails, 4-sigma band
    d = ZetaPareto(0.4, cache_horizon=128)
    n = 10 ** 6
    draws = d.sample_array(rng(5), n)
    for i in (128, 500, 5000):
        p = d.tail(i + 1)
        freq = np.mean(draws > i)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(freq - p) <= 4 * sigma


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "alpha,expected",
    [(1.2, RegimeLabel.LIGHT), (0.6, RegimeLabel.MODERATE), (0.3, RegimeLabel.HEAVY)],
)
def test_classify_canonical(alpha, expected):
    assert classify_regime(ZetaPareto(alpha), 2).label is expected


@pytest.mark.parametrize(
    "alpha,expected",
    [
        (1.01, RegimeLabel.LIGHT),
        (1.0, RegimeLabel.MODERATE),
        (0.51, RegimeLabel.MODERATE),
        (0.5, RegimeLabel.HEAVY),
    ],
)
def test_classify_boundaries(alpha, expected):
    assert classify_regime(ZetaPareto(alpha), 2).label is expected
    assert classify_regime(InversePower(alpha), 2).label is expected


def test_classify_k_dependence():
    assert classify_regime(ZetaPareto(0.4), 2).label is RegimeLabel.HEAVY
    assert classify_regime(ZetaPareto(0.4), 3).label is RegimeLabel.MODERATE
    assert classify_regime(ZetaPareto(0.3), 4).label is RegimeLabel.MODERATE
    assert classify_regime(ZetaPareto(1.2), 5).label is RegimeLabel.LIGHT
    assert classify_regime(Geometric(0.5), 2).label is RegimeLabel.LIGHT
    assert classify_regime(TableDist((0.5, 0.5)), 2).label is RegimeLabel.LIGHT


def test_classify_requires_k_ge_2():
    with pytest.raises(ValueError):
        classify_regime(Geometric(0.5), 1)


def test_periodic_support_flagged():
    d = TableDist((0.0, 1.0))  # all mass on 2
    assert not d.is_aperiodic()
    assert d.support_gcd() == 2
    assert not classify_regime(d, 2).aperiodic
    d2 = TableDist((0.5, 0.0, 0.5))
    assert d2.is_aperiodic()
    for d3 in ALL_KINDS:
        assert d3.is_aperiodic()


# ---------------------------------------------------------------------------
# property tests
# ---------------------------------------------------------------------------


@given(alpha=st.floats(0.1, 3.0), i=st.integers(1, 5000))
@settings(max_examples=60, deadline=None)
def test_inverse_power_tail_pmf_consistency(alpha, i):
    d = InversePower(alpha)
    assert d.pmf(i) == pytest.approx(d.tail(i) - d.tail(i + 1), abs=1e-12)
    assert 0.0 <= d.tail(i + 1) <= d.tail(i) <= 1.0


@given(p=st.floats(0.01, 0.99), i=st.integers(1, 200), k=st.integers(1, 5))
@settings(max_examples=60, deadline=None)
def test_geometric_min_tail_power(p, i, k):
    d = Geometric(p)
    assert d.min_of_k(k).tail(i) == pytest.approx(d.tail(i) ** k, rel=1e-12, abs=1e-300)


@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 32))
@settings(max_examples=40, deadline=None)
def test_samples_on_support(seed, n):
    for d in (ZetaPareto(0.5, cache_horizon=256), Geometric(0.2), TableDist((0.3, 0.7))):
        draws = d.sample_array(np.random.default_rng(seed), n)
        assert np.all(draws >= 1)
        if isinstance(d, TableDist):
            assert np.all(draws <= 2)
