"""Tests for propagation models, fading samplers and channel draws."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import jn_zeros

from saginshare.factories.channel_factory import draw_channels
from saginshare.models.errors import DomainError
from saginshare.models.link import NoiseModel, SRParams
from saginshare.ui.oracles import fading_statistics
from saginshare.utils.fading import sample_rayleigh, sample_sr, sr_pdf
from saginshare.utils.propagation import (
    SPEED_OF_LIGHT,
    beam_gain,
    ground_path_loss,
    ground_path_loss_db,
    noise_power_ground,
    noise_power_sat,
    sat_path_loss_db,
)

MAX_GAIN = 10.0 ** 4.0


def test_ground_path_loss():
    assert ground_path_loss_db(1.0, 3.0) == pytest.approx(41.9424, abs=1e-4)
    assert ground_path_loss_db(10.0, 3.0) == pytest.approx(71.9424, abs=1e-4)
    gains = [ground_path_loss(d, 3.0) for d in (0.1, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(gains, gains[1:]))
    with pytest.raises(DomainError):
        ground_path_loss_db(0.0, 3.0)


def test_sat_path_loss():
    assert sat_path_loss_db(600.0, 20.0) == pytest.approx(174.02, abs=1e-2)
    assert sat_path_loss_db(1200.0, 20.0) - sat_path_loss_db(600.0, 20.0) == pytest.approx(6.0206, abs=1e-4)
    assert sat_path_loss_db(1.0, 1.0) == pytest.approx(92.44)


def test_beam_gain_boresight_and_null():
    assert beam_gain(0.0, MAX_GAIN, 20.0, 0.3) == MAX_GAIN
    kappa_a = 2.0 * math.pi * 20e9 / SPEED_OF_LIGHT * 0.3
    zeta = math.asin(jn_zeros(1, 1)[0] / kappa_a)
    assert beam_gain(zeta, MAX_GAIN, 20.0, 0.3) < 1e-10 * MAX_GAIN
    with pytest.raises(DomainError):
        beam_gain(-0.1, MAX_GAIN, 20.0, 0.3)


def test_beam_gain_bounded_by_boresight():
    for zeta in np.linspace(0.0, 0.2, 400):
        assert beam_gain(float(zeta), MAX_GAIN, 20.0, 0.3) <= MAX_GAIN * (1.0 + 1e-12)


def test_rayleigh_moments():
    rng = np.random.default_rng(7)
    draws = sample_rayleigh(100000, rng)
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, abs=0.02)
    assert abs(np.mean(draws)) < 0.01
    again = sample_rayleigh(4, np.random.default_rng(3))
    np.testing.assert_array_equal(again, sample_rayleigh(4, np.random.default_rng(3)))


def test_sr_mean_power():
    params = SRParams()
    power = np.abs(sample_sr(params, np.random.default_rng(0), 100000)) ** 2
    assert np.mean(power) == pytest.approx(1.087, rel=0.02)


def test_sr_deterministic_limit():
    params = SRParams(b=1e-8, m=1e5, omega=0.835)
    power = np.abs(sample_sr(params, np.random.default_rng(0), 1000)) ** 2
    assert np.std(power) < 1e-2
    assert np.mean(power) == pytest.approx(0.835, rel=1e-2)


def test_sr_ks_distance():
    values = fading_statistics(samples=100000, seed=0)
    assert values["ks_distance"] < 0.01
    assert values["sample_mean"] == pytest.approx(values["expected_mean"], rel=0.02)


def test_sr_pdf_normalized():
    params = SRParams()
    total, _ = integrate.quad(lambda s: sr_pdf(s, params), 0.0, 60.0, limit=400)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_sr_pdf_at_zero_and_sign():
    params = SRParams()
    b, m, omega = params.b, params.m, params.omega
    expected = (1.0 / (2.0 * b)) * (2.0 * b * m / (2.0 * b * m + omega)) ** m
    assert sr_pdf(0.0, params) == pytest.approx(expected, rel=1e-10)
    assert np.all(sr_pdf(np.linspace(0.0, 20.0, 201), params) >= 0.0)
    with pytest.raises(DomainError):
        sr_pdf(-1.0, params)


def test_ground_noise():
    noise = noise_power_ground(NoiseModel(), 1e8)
    assert noise == pytest.approx(3.981e-13, rel=1e-3)
    assert noise_power_ground(NoiseModel(), 2e8) == pytest.approx(2.0 * noise)
    with pytest.raises(DomainError):
        noise_power_ground(NoiseModel(), 0.0)


def test_satellite_noise():
    noise = noise_power_sat(NoiseModel(), 4e8)
    assert noise == pytest.approx(1.38e-23 * 242.3 * 4e8, rel=1e-3)
    assert noise == pytest.approx(1.34e-12, rel=1e-2)
    noiseless = NoiseModel(noise_figure_db=0.0)
    assert noise_power_sat(noiseless, 4e8) == pytest.approx(1.38e-23 * 150.0 * 4e8)
    assert noise_power_sat(NoiseModel(), 8e8) == pytest.approx(2.0 * noise)


def test_draw_channels(desk_scenario):
    first = draw_channels(desk_scenario, 5)
    second = draw_channels(desk_scenario, 5)
    assert first.h.shape == (2, desk_scenario.n_nodes, desk_scenario.n_users, 4)
    assert first.f.shape == (desk_scenario.n_terminals,)
    assert first.beam_gains.shape == (desk_scenario.n_beams, desk_scenario.n_terminals)
    np.testing.assert_array_equal(first.h, second.h)
    np.testing.assert_array_equal(first.f, second.f)
    assert not np.array_equal(first.h, draw_channels(desk_scenario, 6).h)
    assert np.all(first.sat_gains > 0.0)
