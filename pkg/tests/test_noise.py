"""Tests for innovation laws, MA moments and the correlation classification."""

import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gausslimit.errors import ConfigError
from gausslimit.noise import (
    CorrelationClass,
    InnovationDistribution,
    NoiseModel,
    covariance_u,
    innovation_stream,
    ma_abs_moments,
    ma_filter,
    moment_profile,
    sample_innovations,
    sample_u,
)

RADEMACHER = InnovationDistribution.rademacher()


# =============================================================================
# INNOVATION LAWS
# =============================================================================

def test_rademacher_moments():
    assert RADEMACHER.moments == (1.0, 1.0, 1.0)


def test_uniform_moments():
    law = InnovationDistribution.centered_uniform(2.0)
    assert_allclose(law.moments, (4.0 / 3.0, 2.0, 16.0 / 5.0))


def test_exponential_third_moment_closed_form():
    law = InnovationDistribution.centered_exponential(1.0)
    assert_allclose(law.moments[1], 12.0 / math.e - 2.0)
    assert_allclose(law.abs_third_shifted(np.array(0.0), 1.0), 12.0 / math.e - 2.0, rtol=1e-12)


def test_exponential_moments_scale_with_rate():
    law = InnovationDistribution.centered_exponential(2.0)
    assert_allclose(law.moments, (0.25, (12.0 / math.e - 2.0) / 8.0, 9.0 / 16.0))


def test_mixture_moments():
    law = InnovationDistribution.two_point_mixture((-1.0, 2.0), (2.0 / 3.0, 1.0 / 3.0))
    assert_allclose(law.moments[0], 2.0)
    assert law.is_discrete


@pytest.mark.parametrize(
    "values, probabilities",
    [
        ((-1.0, 1.0), (0.3, 0.7)),  # non-zero mean
        ((-1.0, 1.0), (0.5, 0.6)),
        ((1.0, 1.0), (0.5, 0.5)),
        ((-1.0, 0.0, 1.0), (0.25, 0.5, 0.25)),
    ],
)
def test_invalid_mixtures_rejected(values, probabilities):
    with pytest.raises(ConfigError):
        InnovationDistribution.two_point_mixture(values, probabilities)


def test_samples_have_zero_mean():
    rng = innovation_stream(7, 0)
    for law in (RADEMACHER, InnovationDistribution.centered_uniform(1.0), InnovationDistribution.centered_exponential(1.0)):
        draws = law.sample(rng, 200_000)
        assert abs(draws.mean()) < 5 * math.sqrt(law.moments[0] / draws.size)


# =============================================================================
# MOMENTS OF MA SUMS
# =============================================================================

def test_two_term_rademacher_sum():
    moments = ma_abs_moments((1.0, 1.0), RADEMACHER)
    assert (moments.m2, moments.m3, moments.m4) == (2.0, 4.0, 8.0)
    assert moments.exact


def test_two_term_uniform_sum_by_quadrature():
    # w1 + w2 is triangular on [-2, 2]
    moments = ma_abs_moments((1.0, 1.0), InnovationDistribution.centered_uniform(1.0))
    assert_allclose(moments.m3, 0.8, rtol=1e-8)
    assert_allclose(moments.m4, 16.0 / 15.0, rtol=1e-12)


def test_zero_weights_dropped():
    assert ma_abs_moments((1.0, 0.0, 1.0), RADEMACHER) == ma_abs_moments((1.0, 1.0), RADEMACHER)


def test_long_continuous_sum_falls_back_to_upper_bound(caplog):
    law = InnovationDistribution.centered_uniform(1.0)
    with caplog.at_level(logging.WARNING, logger="gausslimit.noise"):
        moments = ma_abs_moments((1.0, 0.9, 0.8, 0.7), law)
    assert not moments.exact
    assert moments.m3 <= moments.m4**0.75 + 1e-12
    assert "upper bound" in caplog.text


# =============================================================================
# INPUT MODEL
# =============================================================================

def test_covariance_u():
    assert covariance_u((1.0, 1.0), 1.0, 1) == 1.0
    assert covariance_u((1.0, 1.0), 1.0, 2) == 0.0
    assert covariance_u((1.0, 0.5), 2.0, 0) == 2.5


def test_variance_schedule_is_periodic():
    noise = NoiseModel((1.0,), RADEMACHER, (1.0, 2.0, 3.0, 4.0))
    assert noise.period == 4
    assert_allclose(noise.multiplier([1, 2, 5, 6, 8]), [1.0, 2.0, 1.0, 2.0, 4.0])


def test_zero_prehistory_truncates_head():
    noise = NoiseModel((1.0, 1.0), RADEMACHER)
    assert noise.multiplier(0) == 0.0
    assert_allclose(noise.covariance([1, 2, 3], 0), [1.0, 2.0, 2.0])
    assert noise.first_stationary == 2


def test_random_prehistory_keeps_head():
    noise = NoiseModel((1.0, 1.0), RADEMACHER, prehistory="random")
    assert noise.multiplier(0) == 1.0
    assert_allclose(noise.covariance([1, 2], 0), [2.0, 2.0])


@pytest.mark.parametrize("bad", [dict(ma_coeffs=(0.0,)), dict(variance_schedule=(1.0, -1.0)), dict(prehistory="warm")])
def test_invalid_noise_models(bad):
    with pytest.raises(ConfigError):
        NoiseModel(**bad)


# =============================================================================
# CLASSIFICATION
# =============================================================================

def test_profile_positively_correlated():
    profile = moment_profile((1.0, 1.0), RADEMACHER)
    assert profile.correlation is CorrelationClass.POSITIVELY_CORRELATED
    assert (profile.s2, profile.s3, profile.s4) == (2.0, 4.0, 8.0)
    assert profile.sc_lo == 1.0
    assert (profile.D, profile.M) == (3, 1)
    assert profile.is_positively_correlated


def test_profile_decay():
    profile = moment_profile((1.0, 0.5), RADEMACHER)
    assert profile.correlation is CorrelationClass.DECAY
    assert_allclose(profile.decay_a, 0.4)
    assert profile.describe() == "decay(a=0.4)"


def test_profile_independent():
    profile = moment_profile((1.0,), RADEMACHER)
    assert profile.correlation is CorrelationClass.INDEPENDENT
    assert profile.decay_a == 0.0
    assert profile.D == 1


def test_profile_other():
    profile = moment_profile((1.0, -1.0), RADEMACHER)
    assert profile.correlation is CorrelationClass.OTHER
    assert not profile.is_positively_correlated


def test_profile_with_schedule_uses_extremes():
    profile = moment_profile((1.0,), RADEMACHER, variance_schedule=(1.0, 4.0))
    assert (profile.s2_lo, profile.s2_hi) == (1.0, 4.0)
    assert profile.s4 == 16.0


# =============================================================================
# SAMPLING
# =============================================================================

def test_sample_u_reproducible():
    noise = NoiseModel((1.0, 0.5), RADEMACHER)
    first = sample_u(noise, 100, seed=3)
    assert np.array_equal(first, sample_u(noise, 100, seed=3))
    assert not np.array_equal(first, sample_u(noise, 100, seed=4))


def test_sample_u_matches_ma_sum():
    noise = NoiseModel((1.0, 0.5), RADEMACHER)
    w = sample_innovations(noise, innovation_stream(3, 0), 1, 50)[0]
    u = sample_u(noise, 50, seed=3)
    assert_allclose(u, w[1:] + 0.5 * w[:-1])
    assert w[0] == 0.0


def test_sample_u_rejects_empty_length():
    with pytest.raises(ConfigError):
        sample_u(NoiseModel(), 0, seed=0)


@pytest.mark.parametrize(
    "coeffs, law",
    [
        ((1.0, 0.5), RADEMACHER),
        ((1.0, 1.0), InnovationDistribution.centered_uniform(1.0)),
        ((1.0, 0.4), InnovationDistribution.centered_exponential(1.0)),
    ],
    ids=["rademacher", "uniform", "exponential"],
)
def test_empirical_abs_moments_match_closed_forms(coeffs, law):
    noise = NoiseModel(coeffs, law, prehistory="random")
    u = ma_filter(noise, sample_innovations(noise, innovation_stream(11, 0), 1_000_000, 1))[:, 0]
    exact = ma_abs_moments(coeffs, law)
    for power, expected in ((3, exact.m3), (4, exact.m4)):
        values = np.abs(u) ** power
        se = values.std() / math.sqrt(values.size)
        assert abs(values.mean() - expected) < 4 * se


def test_rademacher_ma_moments_by_enumeration():
    # u takes +-1.5 and +-0.5 with equal probability
    moments = ma_abs_moments((1.0, 0.5), RADEMACHER)
    assert_allclose((moments.m3, moments.m4), (1.75, 2.5625))


def test_no_correlation_beyond_ma_order():
    noise = NoiseModel((1.0, 0.5, 0.25), RADEMACHER, prehistory="random")
    u = sample_u(noise, 1_000_000, seed=21)
    for lag in (3, 4, 5):
        rho = np.corrcoef(u[:-lag], u[lag:])[0, 1]
        assert abs(rho) < 4 / math.sqrt(u.size)
