import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from felprob import (
    AccuracyLaw,
    BernoulliSequence,
    CapacityError,
    DomainError,
    SizeFamily,
    SuccessDistribution,
    at_least_one,
    at_least_one_structured,
    brute_force_distribution,
    cumulative_at_least,
    exact_distribution,
    family_success_probs,
    tail_bound_none,
)
from felprob.distribution import DP_CAP_ENV, dp_cap

probs_st = st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=12)


# --- family_success_probs ----------------------------------------------------


@pytest.mark.parametrize(
    "delta, sizes, expected",
    [
        (1, [1.0], [0.5]),
        (1, [0.5, 2.0], [0.75, 0.25]),
        (2, [0.1], [0.995]),
    ],
)
def test_family_success_probs(delta, sizes, expected):
    seq = family_success_probs(AccuracyLaw(1.0, delta), sizes)
    assert seq.probs == pytest.approx(expected, rel=1e-12)


def test_family_success_probs_names_bad_index():
    with pytest.raises(DomainError, match="index 1"):
        family_success_probs(AccuracyLaw(1.0, 1), [0.5, -2.0])


def test_bernoulli_sequence_validation():
    with pytest.raises(DomainError):
        BernoulliSequence(())
    with pytest.raises(DomainError, match="index 2"):
        BernoulliSequence((0.1, 0.2, 1.5))


# --- exact vs enumerated -----------------------------------------------------


@pytest.mark.parametrize(
    "probs, expected",
    [
        ([0.7], [0.3, 0.7]),
        ([0.5, 0.5], [0.25, 0.5, 0.25]),
        # enumerated by hand over the 8 outcomes
        ([0.2, 0.5, 0.8], [0.08, 0.42, 0.42, 0.08]),
    ],
)
def test_exact_distribution_examples(probs, expected):
    assert exact_distribution(probs).mass == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "probs, expected",
    [
        ([0.3], [0.7, 0.3]),
        ([1.0, 1.0], [0.0, 0.0, 1.0]),
        ([0.2, 0.5, 0.8], [0.08, 0.42, 0.42, 0.08]),
    ],
)
def test_brute_force_examples(probs, expected):
    assert brute_force_distribution(probs).mass == pytest.approx(expected, abs=1e-15)


def test_brute_force_cap():
    with pytest.raises(CapacityError):
        brute_force_distribution([0.5] * 21)


@given(probs_st)
@settings(max_examples=200)
def test_dp_matches_enumeration(probs):
    dp = exact_distribution(probs).mass
    bf = brute_force_distribution(probs).mass
    assert np.allclose(dp, bf, rtol=0, atol=1e-12)


@given(probs_st)
def test_boundary_identities(probs):
    mass = exact_distribution(probs).mass
    assert mass[-1] == pytest.approx(math.prod(probs), abs=1e-12)
    assert mass[0] == pytest.approx(math.prod(1 - p for p in probs), abs=1e-12)


@given(probs_st, st.randoms(use_true_random=False))
def test_permutation_invariance(probs, rnd):
    shuffled = list(probs)
    rnd.shuffle(shuffled)
    assert np.allclose(exact_distribution(probs).mass, exact_distribution(shuffled).mass, atol=1e-12)


def test_normalization_large_n():
    rng = np.random.default_rng(7)
    for n in (100, 1000, 10_000):
        mass = exact_distribution(rng.random(n)).mass
        assert min(mass) >= 0.0
        assert abs(math.fsum(mass) - 1.0) <= 1e-12 * n


def test_degenerate_probabilities():
    assert exact_distribution([0.0, 1.0, 0.0]).mass == (0.0, 1.0, 0.0, 0.0)
    assert at_least_one([0.0, 0.0]) == 0.0


def test_dp_cap_env(monkeypatch):
    monkeypatch.setenv(DP_CAP_ENV, "5")
    assert dp_cap() == 5
    with pytest.raises(CapacityError, match="at_least_one"):
        exact_distribution([0.5] * 6)
    monkeypatch.setenv(DP_CAP_ENV, "zero")
    with pytest.raises(DomainError):
        dp_cap()
    monkeypatch.delenv(DP_CAP_ENV)
    assert dp_cap() == 100_000


# --- cumulative --------------------------------------------------------------


def test_cumulative_examples():
    dist = SuccessDistribution((0.25, 0.5, 0.25))
    assert cumulative_at_least(dist, 0) == 1.0
    assert cumulative_at_least(dist, 1) == pytest.approx(0.75, abs=1e-15)
    d3 = exact_distribution([0.2, 0.5, 0.8])
    assert cumulative_at_least(d3, 2) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("n_e", [-1, 3, 1.5])
def test_cumulative_range(n_e):
    with pytest.raises(DomainError):
        cumulative_at_least(SuccessDistribution((0.25, 0.5, 0.25)), n_e)


@given(probs_st)
def test_cumulative_non_increasing(probs):
    dist = exact_distribution(probs)
    values = [cumulative_at_least(dist, j) for j in range(dist.n + 1)]
    assert all(b <= a for a, b in zip(values, values[1:]))


# --- at least one ------------------------------------------------------------


@pytest.mark.parametrize(
    "probs, expected",
    [([0.5], 0.5), ([0.75, 0.25], 0.8125), ([1.0, 0.3], 1.0)],
)
def test_at_least_one_examples(probs, expected):
    assert at_least_one(probs) == pytest.approx(expected, abs=1e-15)


@given(probs_st)
def test_closed_form_agreement(probs):
    dist = exact_distribution(probs)
    p = at_least_one(probs)
    assert p == pytest.approx(1 - dist.mass[0], abs=1e-12)
    assert p == pytest.approx(cumulative_at_least(dist, 1), abs=1e-12)


@pytest.mark.parametrize(
    "sizes, expected, n1, n2",
    [
        ([0.5, 2.0], 0.8125, 1, 1),
        ([1.0], 0.5, 1, 0),
        ([2.0, 2.0], 0.4375, 0, 2),
    ],
)
def test_structured_examples(sizes, expected, n1, n2):
    law = AccuracyLaw(1.0, 1)
    p, part = at_least_one_structured(law, sizes)
    assert p == pytest.approx(expected, abs=1e-15)
    assert (part.n1, part.n2) == (n1, n2)
    assert p == pytest.approx(at_least_one(family_success_probs(law, sizes)), abs=1e-12)


@given(
    st.floats(min_value=1e-2, max_value=1e2),
    st.integers(min_value=1, max_value=6),
    st.lists(st.floats(min_value=-4, max_value=4), min_size=1, max_size=50),
)
def test_structured_matches_generic(h_star, delta, log_ratios):
    law = AccuracyLaw(h_star, delta)
    sizes = [h_star * math.exp(r) for r in log_ratios]
    p, part = at_least_one_structured(law, SizeFamily(tuple(sizes)))
    assert p == pytest.approx(at_least_one(family_success_probs(law, sizes)), abs=1e-12)
    assert part.n1 == sum(h <= h_star for h in sizes)
    assert part.total == len(sizes)


# --- tail bound --------------------------------------------------------------


def test_tail_bound_examples():
    law = AccuracyLaw(1.0, 1)
    assert tail_bound_none(law, 1.0, 10) == pytest.approx(0.5**10, rel=1e-12)
    assert tail_bound_none(law, 2.0, 1) == pytest.approx(0.75, rel=1e-12)
    with pytest.raises(DomainError):
        tail_bound_none(law, 1.0, 0)


@given(
    st.floats(min_value=0.1, max_value=10),
    st.integers(min_value=1, max_value=5),
    st.floats(min_value=-2, max_value=2),
    st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=40),
)
def test_tail_bound_dominates(h_star, delta, r, fractions):
    law = AccuracyLaw(h_star, delta)
    h_max = h_star * math.exp(r)
    sizes = [f * h_max for f in fractions]
    none = 1.0 - at_least_one(family_success_probs(law, sizes))
    assert none <= tail_bound_none(law, h_max, len(sizes)) * (1 + 1e-12) + 1e-300


def test_asymptotic_sureness():
    rnd = random.Random(3)
    law = AccuracyLaw(1.0, 2)
    for h_max in (0.5, 1.0, 1.7, 3.0):
        beta = 1 - law(h_max)
        n = math.ceil(math.log(1e-9) / math.log(beta))
        sizes = [h_max * rnd.uniform(0.05, 1.0) for _ in range(n - 1)] + [h_max]
        assert 1.0 - at_least_one(family_success_probs(law, sizes)) <= 1e-9
