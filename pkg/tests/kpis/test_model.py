from dataclasses import replace
from math import gamma
from math import nan

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from pytest import approx
from pytest import mark
from pytest import raises

from coexist import kpis_refimpl
from coexist.kpis import CarrierDistribution
from coexist.kpis import ChannelModel
from coexist.kpis import db_to_linear
from coexist.kpis import dbm_to_watts
from coexist.kpis import evaluate_kpis
from coexist.kpis import exceptions
from coexist.kpis import hz_to_mhz
from coexist.kpis import linear_to_db
from coexist.kpis import mhz_to_hz
from coexist.kpis import time_activity_factor
from coexist.kpis import validate_scenario
from coexist.kpis import watts_to_dbm
from coexist.profiles import reference_scenario

from .examples import *


def violation_paths(s):
    return [v.path for v in validate_scenario(s)]


def test_reference_scenario_is_valid():
    assert validate_scenario(reference_scenario()) == []
    assert validate_scenario(reference_scenario(interferer=False)) == []


@mark.parametrize(
    ["changes", "path"],
    [
        ({"tx_power": 0.0}, "classes[0].tx_power"),
        ({"bandwidth": -1.0}, "classes[0].bandwidth"),
        ({"device_density": nan}, "classes[0].device_density"),
        ({"device_density": -1e-3}, "classes[0].device_density"),
        ({"mean_inter_packet_time": 0.5}, "classes[0].mean_inter_packet_time"),
        ({"orthogonal_codes": 0}, "classes[0].orthogonal_codes"),
        ({"name": ""}, "classes[0].name"),
    ],
)
def test_class_violations(changes, path):
    s = toy_scenario(toy_class(**changes))
    assert path in violation_paths(s)


def test_pathloss_exponent_must_exceed_two():
    s = toy_scenario(channel=ChannelModel(pathloss_exponent=2.0, noise_density=0.0))
    violations = validate_scenario(s)

    assert len(violations) == 1
    assert str(violations[0]) == (
        "channel.pathloss_exponent: pathloss_exponent must exceed 2"
    )


def test_duplicate_class_names():
    s = toy_scenario(toy_class("a"), toy_class("a"))
    assert "classes[1].name" in violation_paths(s)


def test_general_fading_needs_a_moment():
    channel = ChannelModel(pathloss_exponent=4.0, noise_density=0.0, fading="general")
    assert "channel.fading" in violation_paths(toy_scenario(channel=channel))


def test_tabulated_carrier_must_increase():
    carrier = CarrierDistribution.tabulated([(1.0, 0.0), (3.0, 0.5), (2.0, 1.0)])
    s = toy_scenario(toy_class(carrier=carrier))
    assert "classes[0].carrier.table" in violation_paths(s)


def test_several_violations_are_all_reported():
    s = toy_scenario(toy_class(tx_power=-1.0), sinr_threshold=0.0)
    paths = violation_paths(s)

    assert "classes[0].tx_power" in paths
    assert "sinr_threshold" in paths


def test_operations_refuse_invalid_scenarios():
    s = toy_scenario(toy_class(tx_power=-1.0))
    with raises(exceptions.InvalidScenarioError):
        evaluate_kpis(0, 10, s)


def test_class_index_error():
    s = toy_scenario()
    with raises(IndexError):
        evaluate_kpis(1, 10, s)
    with raises(exceptions.ClassIndexError):
        time_activity_factor(0, 3, s)


def test_negative_distance():
    with raises(exceptions.NegativeDistanceError):
        evaluate_kpis(0, -1, toy_scenario())


# ------------------------------------------------------------------------------
# Activity


def test_time_activity_within_one_technology():
    a = toy_class("a", orthogonal_channels=2, orthogonal_codes=5)
    b = toy_class("b", technology_id="a")
    s = toy_scenario(a, b)

    assert time_activity_factor(0, 1, s) == approx(0.1 / 10)
    assert time_activity_factor(1, 0, s) == approx(0.1)


def test_time_activity_across_technologies():
    s = toy_scenario(toy_class("a", orthogonal_channels=4), toy_class("b"))
    assert time_activity_factor(0, 1, s) == approx(0.1)


def test_time_activity_matches_refimpl():
    s = reference_scenario()
    for i in range(2):
        for j in range(2):
            assert time_activity_factor(i, j, s) == approx(
                kpis_refimpl.time_activity_factor(i, j, s)
            )


# ------------------------------------------------------------------------------
# Carrier laws


def test_uniform_carrier():
    law = CarrierDistribution.uniform(10.0, 20.0)

    assert law.cdf(12.5) == approx(0.25)
    assert law.cdf(5.0) == 0
    assert law.cdf(25.0) == 1
    assert law.pdf(15.0) == approx(0.1)
    assert law.pdf(25.0) == 0
    assert law.mean == 15.0


def test_centred_carrier():
    law = CarrierDistribution.centred(100.0, 10.0)
    assert (law.f_min, law.f_max) == (95.0, 105.0)


def test_point_mass_carrier():
    law = CarrierDistribution.point_mass(5.0)

    assert law.cdf(4.9) == 0
    assert law.cdf(5.0) == 1
    with raises(ValueError):
        law.pdf(5.0)

    rng = np.random.default_rng(0)
    assert np.all(law.sample(rng, 10) == 5.0)


def test_tabulated_carrier():
    law = CarrierDistribution.tabulated([(0.0, 0.0), (1.0, 0.8), (2.0, 1.0)])

    assert law.cdf(0.5) == approx(0.4)
    assert law.cdf(1.5) == approx(0.9)
    assert law.pdf(0.5) == approx(0.8)
    assert law.pdf(1.5) == approx(0.2)
    assert law.mean == approx(0.5 * 0.8 + 1.5 * 0.2)
    assert law.knots == (0.0, 1.0, 2.0)


def test_tabulated_samples_follow_the_table():
    law = CarrierDistribution.tabulated([(0.0, 0.0), (1.0, 0.8), (2.0, 1.0)])
    samples = law.sample(np.random.default_rng(42), 100_000)

    assert np.mean(samples <= 1.0) == approx(0.8, abs=0.01)
    assert samples.min() >= 0 and samples.max() <= 2


def test_cdf_broadcasts():
    law = CarrierDistribution.uniform(0.0, 4.0)
    assert law.cdf(np.array([1.0, 2.0, 3.0])) == approx([0.25, 0.5, 0.75])


# ------------------------------------------------------------------------------
# Channel


def test_rayleigh_fading_moment():
    channel = ChannelModel(pathloss_exponent=4.0, noise_density=0.0)
    assert channel.sigma == 0.5
    assert channel.fading_moment == approx(gamma(1.5))


def test_nakagami_one_is_rayleigh():
    rayleigh = ChannelModel(pathloss_exponent=3.0, noise_density=0.0)
    nakagami = replace(rayleigh, fading="general", nakagami_m=1.0)

    assert nakagami.fading_moment == approx(rayleigh.fading_moment)
    assert nakagami.samplable


def test_fractional_moment_is_not_samplable():
    channel = ChannelModel(
        pathloss_exponent=4.0,
        noise_density=0.0,
        fading="general",
        fractional_moment=0.9,
    )
    assert channel.fading_moment == 0.9
    assert not channel.samplable


# ------------------------------------------------------------------------------
# Units


def test_units():
    assert dbm_to_watts(30) == approx(1.0)
    assert dbm_to_watts(20) == approx(0.1)
    assert watts_to_dbm(0.025) == approx(13.979, abs=1e-3)
    assert db_to_linear(3) == approx(1.99526, rel=1e-5)
    assert linear_to_db(100) == approx(20)
    assert mhz_to_hz(868.1) == approx(868.1e6)
    assert hz_to_mhz(125e3) == approx(0.125)


@given(st.floats(min_value=-200, max_value=60))
def test_dbm_inverse(x):
    assert watts_to_dbm(dbm_to_watts(x)) == approx(x)


def test_noise_power():
    s = reference_scenario()
    bandwidth = s.classes[0].bandwidth
    assert s.channel.noise_power(bandwidth) == approx(NOISE_POWER, rel=1e-12)


# ------------------------------------------------------------------------------
# Scenario helpers


def test_scenario_helpers():
    s = reference_scenario()

    assert s.nclasses == 2
    assert s.index_of("interferer") == 1
    assert s.without("interferer").nclasses == 1
    assert all(c.device_density == 5e-3 for c in s.with_device_density(5e-3).classes)
    assert s.with_sinr_threshold(2.0).sinr_threshold == 2.0
    assert s.with_class(1, tx_power=1.0).classes[1].tx_power == 1.0

    with raises(KeyError):
        s.index_of("nope")
    with raises(KeyError):
        s.without("nope")
