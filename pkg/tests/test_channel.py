"""Tests for the air-to-ground channel model."""

import dataclasses
import math

import numpy as np
import pytest

from uavalloc.core.errors import InvalidArgumentError
from uavalloc.model.channel import (
    FadingMode,
    LinkState,
    effective_snr,
    expected_rates,
    is_served,
    link_state,
    link_states,
    los_probability,
    minimal_blocks,
    rate_bps,
    sample_gain_los,
    sample_gain_nlos,
    snr_components,
    user_rates,
)
from uavalloc.model.scenario import EnvConstants

ENV = EnvConstants()


def _reference_rate(p, b_hz, d, theta_rad):
    """Scalar evaluation of the rate formula with mean gains."""
    p_los = 1.0 / (1.0 + 11.95 * math.exp(-0.136 * (math.degrees(theta_rad) - 11.95)))
    noise = 1.0e-16 * b_hz
    snr_los = p * 0.5 * d**-2.5 / noise
    snr_nlos = p * 0.5 * d**-3.5 / noise
    snr = p_los * snr_los + (1.0 - p_los) * snr_nlos
    return b_hz * math.log2(1.0 + snr)


@pytest.fixture
def overhead_link():
    """Link of a user directly below a UAV at 400 m."""
    return LinkState(
        user=1,
        d=400.0,
        theta=math.pi / 2,
        p_los=float(los_probability(math.pi / 2, ENV.env_b, ENV.env_c)),
        gain_los=0.5,
        gain_nlos=0.5,
    )


def test_los_probability_overhead():
    assert los_probability(math.pi / 2, 0.136, 11.95) == pytest.approx(
        0.99971, abs=1e-5
    )


def test_los_probability_near_horizon():
    assert los_probability(1e-12, 0.136, 11.95) == pytest.approx(0.0162, abs=1e-4)


def test_los_probability_is_monotone_in_elevation():
    theta = np.linspace(0.01, math.pi / 2, 50)
    p = los_probability(theta, 0.136, 11.95)
    assert np.all(np.diff(p) > 0)
    assert np.all((p > 0) & (p < 1))


def test_snr_components_golden(overhead_link):
    snr_los, snr_nlos = snr_components(0.02, 160_000.0, overhead_link, ENV)
    assert snr_los == pytest.approx(195.3125)
    assert snr_nlos == pytest.approx(195.3125 / 400.0)


def test_snr_rejects_zero_bandwidth(overhead_link):
    with pytest.raises(InvalidArgumentError):
        snr_components(0.02, 0.0, overhead_link, ENV)
    with pytest.raises(InvalidArgumentError):
        effective_snr(overhead_link, -0.1, 1600.0, ENV)


def test_rate_golden(overhead_link):
    rate = rate_bps(overhead_link, 0.02, 160_000.0, ENV)
    assert isinstance(rate, float)
    assert rate == pytest.approx(_reference_rate(0.02, 160_000.0, 400.0, math.pi / 2))
    assert rate == pytest.approx(1.2187e6, rel=1e-3)


def test_rate_matches_reference_off_axis(scenario_at):
    s = scenario_at([(150.0, 80.0)], height=250.0)
    (link,) = link_states(s)
    expected = _reference_rate(0.3, 32_000.0, link.d, link.theta)
    assert rate_bps(link, 0.3, 32_000.0, ENV) == pytest.approx(expected, rel=1e-12)


def test_rate_zero_bandwidth_and_vectorised(overhead_link):
    assert rate_bps(overhead_link, 0.02, 0.0, ENV) == 0.0
    b = np.array([0.0, 1600.0, 3200.0, 6400.0])
    rates = rate_bps(overhead_link, 0.02, b, ENV)
    assert rates.shape == (4,)
    assert rates[0] == 0.0
    assert np.all(np.diff(rates) > 0)


def test_rate_is_increasing_in_power(overhead_link):
    powers = np.linspace(0.001, 1.0, 20)
    rates = rate_bps(overhead_link, powers, 16_000.0, ENV)
    assert np.all(np.diff(rates) > 0)


def test_is_served():
    assert is_served(1.0e6, 1.0e6) is True
    assert is_served(0.99e6, 1.0e6) is False
    assert is_served(np.array([2.0, 0.5]), 1.0).tolist() == [True, False]


def test_minimal_blocks_golden(overhead_link):
    assert minimal_blocks(overhead_link, 0.02, 1.0e6, ENV, 1600.0, 200) == 79
    assert rate_bps(overhead_link, 0.02, 79 * 1600.0, ENV) >= 1.0e6
    assert rate_bps(overhead_link, 0.02, 78 * 1600.0, ENV) < 1.0e6


@pytest.mark.parametrize(
    "power, blocks", [(1.0, 44), (0.5, 47), (0.3, 50), (0.25, 52)]
)
def test_minimal_blocks_by_power(overhead_link, power, blocks):
    assert minimal_blocks(overhead_link, power, 1.0e6, ENV, 1600.0, 200) == blocks


def test_minimal_blocks_unreachable(overhead_link):
    assert minimal_blocks(overhead_link, 0.02, 1.0e6, ENV, 1600.0, 50) is None
    assert minimal_blocks(overhead_link, 0.0, 1.0e6, ENV, 1600.0, 200) is None


def test_link_state_defaults_to_mean_gain(origin_scenario):
    link = link_state(origin_scenario, 0.0, 0.0)
    assert link.d == 400.0
    assert link.gain_los == link.gain_nlos == 0.5
    assert dataclasses.replace(link, user=1) == link_states(origin_scenario)[0]


def test_link_states_expected_and_sampled(small_scenario):
    expected = link_states(small_scenario)
    assert [link.user for link in expected] == [1, 2, 3]
    assert all(link.gain_los == 0.5 for link in expected)

    sampled = link_states(small_scenario, FadingMode.sampled(3))
    again = link_states(small_scenario, FadingMode.sampled(3))
    assert sampled == again
    assert any(link.gain_los != 0.5 for link in sampled)
    assert [link.d for link in sampled] == [link.d for link in expected]


def test_fading_mode_validation():
    with pytest.raises(InvalidArgumentError):
        FadingMode("sampled")
    with pytest.raises(InvalidArgumentError):
        FadingMode("expected", 1)
    with pytest.raises(InvalidArgumentError):
        FadingMode("rayleigh")


def test_fading_statistics(rng):
    mu, k = 0.5, 10.0
    los = sample_gain_los(mu, k, rng, size=1_000_000)
    nlos = sample_gain_nlos(mu, rng, size=1_000_000)
    assert np.mean(los) == pytest.approx(mu, rel=0.01)
    assert np.mean(nlos) == pytest.approx(mu, rel=0.01)
    rician_var = mu**2 * (2 * k + 1) / (k + 1) ** 2
    assert np.var(los) == pytest.approx(rician_var, rel=0.03)
    assert np.var(nlos) == pytest.approx(mu**2, rel=0.03)
    assert np.all(los >= 0) and np.all(nlos >= 0)


def test_user_rates_matches_per_link(small_scenario):
    links = link_states(small_scenario)
    powers = np.array([0.2, 0.3, 0.5])
    blocks = np.array([40, 0, 60])
    rates = user_rates(links, powers, blocks, 1600.0, ENV)
    assert rates[1] == 0.0
    for i in (0, 2):
        assert rates[i] == pytest.approx(
            rate_bps(links[i], powers[i], blocks[i] * 1600.0, ENV)
        )

    with pytest.raises(InvalidArgumentError):
        user_rates(links, powers[:2], blocks[:2], 1600.0, ENV)
    with pytest.raises(InvalidArgumentError):
        user_rates(links, -powers, blocks, 1600.0, ENV)


def test_expected_rates_broadcast(small_scenario):
    pos = small_scenario.positions
    links = link_states(small_scenario)
    rates = expected_rates(small_scenario, pos[:, 0], pos[:, 1], 0.1, 50)
    for link, rate in zip(links, rates):
        assert rate == pytest.approx(rate_bps(link, 0.1, 50 * 1600.0, ENV))
