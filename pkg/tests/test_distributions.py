"""Probability laws: pmf oracles, sampling contracts, MCMC, difference scores."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayessum.distributions import (
    CMP,
    Logarithmic,
    NegBinomial,
    Poisson,
    PottsUnnormalized,
    SampleBatch,
    Skellam,
    UniformCategorical,
    UniformInterval,
    UniformIsing,
    diff_score,
    enumerate_support,
    make_rng,
    mh_sample,
    pmf,
    sample,
)
from bayessum.errors import (
    CapabilityError,
    ContractError,
    DomainError,
    SingularScoreError,
)


def poisson_pmf(x, eta):
    return math.exp(x * math.log(eta) - eta - math.lgamma(x + 1))


class TestPmf:
    def test_poisson_at_zero(self):
        assert pmf(Poisson(2.0), 0) == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_uniform_categorical(self):
        d = UniformCategorical(2, 3)
        for x in ((0, 0, 0), (2, 1, 0), (1, 1, 1)):
            assert pmf(d, x) == pytest.approx(1.0 / 27.0, rel=1e-12)

    def test_skellam_convolution_oracle(self):
        d = Skellam(2.0, 1.0)
        for x in (-3, 0, 2, 5):
            oracle = sum(
                poisson_pmf(k + x, 2.0) * poisson_pmf(k, 1.0)
                for k in range(201)
                if k + x >= 0
            )
            assert pmf(d, x) == pytest.approx(oracle, rel=1e-10)

    def test_outside_support(self):
        with pytest.raises(DomainError):
            pmf(Poisson(2.0), -1)
        with pytest.raises(DomainError):
            pmf(Logarithmic(0.5), 0)
        with pytest.raises(DomainError):
            pmf(UniformCategorical(2, 3), (0, 0, 3))

    def test_normalization(self):
        assert sum(pmf(Poisson(30.0), x) for x in range(201)) == pytest.approx(
            1.0, abs=1e-12
        )
        assert sum(pmf(NegBinomial(2.0, 0.5), x) for x in range(400)) == pytest.approx(
            1.0, abs=1e-12
        )
        assert sum(pmf(Logarithmic(0.5), x) for x in range(1, 200)) == pytest.approx(
            1.0, abs=1e-12
        )
        assert sum(
            pmf(Skellam(1.5, 1.0), x) for x in range(-60, 61)
        ) == pytest.approx(1.0, abs=1e-12)

    def test_parameter_validation(self):
        with pytest.raises(DomainError):
            Poisson(0.0)
        with pytest.raises(DomainError):
            NegBinomial(1.0, 1.5)
        with pytest.raises(DomainError):
            Logarithmic(0.0)
        with pytest.raises(DomainError):
            CMP(-1.0, 1.0)


class TestSample:
    def test_singleton(self):
        batch = sample(Poisson(2.0), 1, "with", seed=0)
        assert len(batch) == 1

    def test_without_exhausts_small_domain(self):
        batch = sample(UniformCategorical(2, 1), 3, "without", seed=7)
        assert sorted(batch.points) == [(0,), (1,), (2,)]

    def test_poisson_clt_band(self):
        batch = sample(Poisson(30.0), 10_000, "with", seed=1)
        mean = np.mean(batch.points)
        band = 3.0 * math.sqrt(30.0 / 10_000)
        assert abs(mean - 30.0) < band

    def test_without_no_duplicates(self):
        batch = sample(Poisson(30.0), 40, "without", seed=3)
        assert len(set(batch.points)) == len(batch.points) == 40

    def test_seed_reproducibility(self):
        a = sample(Poisson(30.0), 50, "without", seed=11)
        b = sample(Poisson(30.0), 50, "without", seed=11)
        assert a.points == b.points

    def test_cardinality_guard(self):
        with pytest.raises(CapabilityError):
            sample(UniformCategorical(2, 1), 4, "without", seed=0)

    def test_bad_mode(self):
        with pytest.raises(ContractError):
            sample(Poisson(2.0), 3, "sometimes", seed=0)

    def test_allow_partial(self):
        # Poisson(1) puts almost all mass on a handful of integers, so 60
        # distinct draws exhaust the rejection cap; partial batches are
        # allowed when requested
        with pytest.raises(CapabilityError):
            sample(Poisson(1.0), 60, "without", seed=0)
        batch = sample(Poisson(1.0), 60, "without", seed=0, allow_partial=True)
        assert 0 < len(batch) < 60
        assert len(set(batch.points)) == len(batch)


class TestSampleBatch:
    def test_duplicate_rejection(self):
        with pytest.raises(ContractError):
            SampleBatch(points=[1, 1], replacement_mode="without", rng_seed=0)

    def test_weight_contract(self):
        with pytest.raises(ContractError):
            SampleBatch(points=[1, 2], replacement_mode="with", rng_seed=0, weights=[1.0])
        with pytest.raises(ContractError):
            SampleBatch(
                points=[1, 2], replacement_mode="with", rng_seed=0, weights=[1.0, -1.0]
            )


class TestMhSample:
    def test_frozen_chain_returns_initial(self):
        model = PottsUnnormalized.build(h=1.0, J=0.0, beta=1e6, L=3, S=3)
        # beta -> infinity pins the chain at the mode of e^{-beta E}; start there
        start = (0, 0, 0)
        batch = mh_sample(model, 1, burn_in=0, thinning=1, seed=0, initial=start)
        assert batch.points == [start]

    def test_acceptance_in_open_interval(self):
        model = PottsUnnormalized.build(h=0.3, J=0.2, beta=0.4, L=4, S=3)
        batch = mh_sample(model, 400, burn_in=10, thinning=5, seed=0)
        uniq = len(set(batch.points))
        assert 1 < uniq < 400

    def test_marginals_match_enumeration(self):
        model = PottsUnnormalized.build(h=0.3, J=0.2, beta=0.5, L=4, S=3)
        states = list(enumerate_support(model))
        logp = model.log_pmf_many(np.array(states))
        probs = np.exp(logp - logp.max())
        probs /= probs.sum()
        exact = {s: p for s, p in zip(states, probs)}

        batch = mh_sample(model, 60_000, burn_in=10, thinning=5, seed=4)
        counts = {}
        for s in batch.points:
            counts[s] = counts.get(s, 0) + 1
        emp = {s: c / len(batch) for s, c in counts.items()}
        tv = 0.5 * sum(abs(exact[s] - emp.get(s, 0.0)) for s in states)
        assert tv < 0.02

    def test_contract(self):
        model = PottsUnnormalized.build(h=0.1, J=0.1, beta=0.4, L=3, S=3)
        with pytest.raises(ContractError):
            mh_sample(model, 0)
        with pytest.raises(ContractError):
            mh_sample(model, 5, thinning=0)


class TestDiffScore:
    def test_uniform_zero(self):
        d = UniformCategorical(2, 4)
        assert np.allclose(diff_score(d, (0, 1, 2, 0)), 0.0)
        assert np.allclose(diff_score(UniformIsing(3), (-1, 1, -1)), 0.0)

    def test_potts_pmf_ratio_oracle(self):
        model = PottsUnnormalized.build(h=0.4, J=0.3, beta=0.7, L=3, S=3)
        states = list(enumerate_support(model))
        logp = model.log_pmf_many(np.array(states))
        probs = np.exp(logp - logp.max())
        probs /= probs.sum()
        exact = {s: p for s, p in zip(states, probs)}
        x = (0, 2, 1)
        score = diff_score(model, x)
        for i in range(3):
            fwd = model.cycle_site(x, i, +1)
            assert score[i] == pytest.approx(1.0 - exact[fwd] / exact[x], rel=1e-10)

    def test_normalization_invariance(self):
        # the score is a pmf ratio, so any common rescaling cancels; doubling
        # beta is NOT a rescaling and must change the score
        m1 = PottsUnnormalized.build(h=0.4, J=0.3, beta=0.7, L=3, S=3)
        m2 = PottsUnnormalized.build(h=0.4, J=0.3, beta=1.4, L=3, S=3)
        x = (1, 0, 2)
        assert not np.allclose(diff_score(m1, x), diff_score(m2, x))

    def test_contract(self):
        with pytest.raises(ContractError):
            diff_score(Poisson(2.0), 3)


class TestEnumerateSupport:
    def test_categorical(self):
        pts = list(enumerate_support(UniformCategorical(2, 2)))
        assert len(pts) == 9
        assert len(set(pts)) == 9

    def test_ising(self):
        pts = list(enumerate_support(UniformIsing(3)))
        assert len(pts) == 8
        assert set(pts) == set(itertools.product((-1, 1), repeat=3))

    def test_countable_not_enumerable(self):
        with pytest.raises(CapabilityError):
            enumerate_support(Poisson(2.0))


class TestCMP:
    def test_unnormalized_mass(self):
        d = CMP(1.5, 1.3)
        assert not d.normalized
        assert d.pmf(2) == pytest.approx(1.5**2 / math.factorial(2) ** 1.3, rel=1e-12)

    def test_log_z_poisson_reduction(self):
        # theta2 = 1 reduces CMP to Poisson, whose normalizer is e^theta1
        assert CMP(1.5, 1.0).log_z() == pytest.approx(1.5, rel=1e-12)


class TestMixedParts:
    def test_uniform_interval(self):
        d = UniformInterval(-1.0, 1.0)
        assert d.log_pmf(0.3) == pytest.approx(-math.log(2.0))
        with pytest.raises(DomainError):
            d.log_pmf(1.5)


def test_make_rng_reproducible():
    a = make_rng(42).integers(0, 1_000_000, size=10)
    b = make_rng(42).integers(0, 1_000_000, size=10)
    assert np.array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 50), seed=st.integers(0, 2**31))
def test_without_replacement_distinct_property(n, seed):
    batch = sample(UniformCategorical(2, 4), n, "without", seed=seed)
    assert len(set(batch.points)) == len(batch.points) == n


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_potts_score_matches_generic_path(seed):
    rng = make_rng(seed)
    model = PottsUnnormalized.build(
        h=rng.normal(0, 0.5, size=3),
        J=rng.normal(0, 0.5, size=(3, 3)),
        beta=0.6,
        L=3,
        S=3,
    )
    x = tuple(int(v) for v in rng.integers(0, 3, size=3))
    score = diff_score(model, x)
    manual = [
        1.0 - math.exp(model.log_pmf(model.cycle_site(x, i, +1)) - model.log_pmf(x))
        for i in range(3)
    ]
    assert np.allclose(score, manual, atol=1e-12)
